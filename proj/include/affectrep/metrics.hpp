#pragma once

#include <span>
#include <string>
#include <vector>

namespace affectrep {

/// Denominator guard for degenerate concordance (both signals flat and equal in mean).
inline constexpr double kCccGuard = 1e-12;

double pearson(std::span<const double> x, std::span<const double> y);

/// Lin's concordance correlation coefficient with population moments.
double ccc(std::span<const double> x, std::span<const double> y);

/// 1 - ccc(pred, target), in [0, 2].
double ccc_loss(std::span<const double> pred, std::span<const double> target);

/// Signed differential agreement: mean over consecutive steps of +1 when the
/// two first differences share a sign class (negative, zero, positive) and -1
/// otherwise.
double sda(std::span<const double> x, std::span<const double> y);

/// The four columns of a results row: CCC mu, CCC sigma, SDA mu, SDA sigma.
struct MetricReport {
    double ccc_mu = 0.0;
    double ccc_sigma = 0.0;
    double sda_mu = 0.0;
    double sda_sigma = 0.0;
};

MetricReport report(std::span<const double> pred_mu, std::span<const double> pred_sigma,
                    std::span<const double> true_mu, std::span<const double> true_sigma);

/// CCC and SDA of one prediction channel over several sequences. CCC is taken
/// over the concatenation; SDA is computed per sequence and then averaged.
struct ChannelScore {
    double ccc = 0.0;
    double sda = 0.0;
};

ChannelScore score_sequences(const std::vector<std::vector<double>>& predictions,
                             const std::vector<std::vector<double>>& targets);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

/// Mean and population standard deviation.
MeanStd mean_std(std::span<const double> values);

struct AggregateReport {
    MeanStd ccc_mu, ccc_sigma, sda_mu, sda_sigma;
    std::size_t folds = 0;
};

AggregateReport aggregate(std::span<const MetricReport> folds);

/// Flat key=value record, one metric per line.
std::string to_key_value(const MetricReport& r);
MetricReport metric_report_from_key_value(const std::string& text);

}  // namespace affectrep
