#pragma once

// Ambiguity-aware label representations built from a TraceSet:
//   I    per-window distribution over pooled annotation values,
//   O_I  per-window distribution over pooled per-annotator gradients,
//   O_G  temporal gradients of the I distribution's mean and spread.

#include "affectrep/trace_core.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace affectrep {

enum class Family { gaussian, beta_mapped };

enum class RepresentationTag { interval, individual_ordinal, group_ordinal };

std::string_view to_string(Family family);
std::string_view to_string(RepresentationTag tag);
Family parse_family(std::string_view text);
RepresentationTag parse_tag(std::string_view text);

struct BetaShape {
    double alpha = 1.0;
    double beta = 1.0;
};

/// Location/spread of one window's distribution, in trace units. For
/// beta_mapped fits, mu and sigma are the Beta moments mapped back through
/// the inverse of the [lo, hi] -> [0, 1] transform.
struct DistParams {
    double mu = 0.0;
    double sigma = 0.0;
    Family family = Family::gaussian;
    std::optional<BetaShape> shape;
};

struct IntervalRepresentation {
    std::vector<DistParams> params;
    std::size_t radius = 0;
    Family family = Family::gaussian;
};

struct IndividualOrdinal {
    std::vector<DistParams> params;
    std::size_t radius = 0;
};

struct GroupOrdinal {
    std::vector<double> dmu;
    std::vector<double> dsigma;
};

/// Values of every series at windows [n - radius, n + radius] clipped to the
/// sequence. `window` is zero-based.
std::vector<double> pool_neighbors(std::span<const std::vector<double>> series, std::size_t window,
                                   std::size_t radius);
std::vector<double> pool_neighbors(const TraceSet& set, std::size_t window, std::size_t radius);

/// Maximum-likelihood Gaussian: sample mean and divide-by-count deviation.
DistParams fit_gaussian(std::span<const double> samples);

inline constexpr double kBetaClamp = 1e-6;
inline constexpr int kBetaMaxIterations = 100;

struct BetaFitInfo {
    int iterations = 0;
    bool converged = false;
};

/// Beta maximum likelihood on samples linearly mapped from `bounds` onto
/// [0, 1] and clamped to [kBetaClamp, 1 - kBetaClamp]. Newton iterations on
/// the digamma score equations start from the method-of-moments estimate;
/// if they have not converged after kBetaMaxIterations the moment estimate
/// is returned instead.
DistParams fit_beta(std::span<const double> samples, Bounds bounds, BetaFitInfo* info = nullptr);

/// Moment estimate on data already in (0, 1). Exposed for tests.
BetaShape beta_moment_estimate(std::span<const double> unit_samples);

IntervalRepresentation interval_representation(const TraceSet& set, Family family, std::size_t radius);
IndividualOrdinal individual_ordinal(const TraceSet& set, std::size_t radius);
GroupOrdinal group_ordinal(const IntervalRepresentation& interval);

/// Two-channel view of any representation: the "mu-like" channel (mu, mu^I
/// or dmu) and the "sigma-like" channel (sigma, sigma^I or dsigma).
struct RepresentationSeries {
    RepresentationTag tag = RepresentationTag::interval;
    Family family = Family::gaussian;
    std::size_t radius = 0;
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<BetaShape> shapes;  // only for beta_mapped interval fits

    std::size_t size() const noexcept { return mu.size(); }
    std::string mu_column() const;
    std::string sigma_column() const;
};

RepresentationSeries to_series(const IntervalRepresentation& rep);
RepresentationSeries to_series(const IndividualOrdinal& rep);
RepresentationSeries to_series(const GroupOrdinal& rep, const IntervalRepresentation& source);

/// I uses `family`; O_I always fits Gaussians over gradients; O_G derives
/// from I computed with `family`.
RepresentationSeries compute_representation(const TraceSet& set, RepresentationTag tag, Family family,
                                            std::size_t radius);

}  // namespace affectrep
