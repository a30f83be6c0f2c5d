#include "affectrep/metrics.hpp"

#include "affectrep/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace affectrep {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, const char* who) {
    require(x.size() == y.size(), std::string(who) + ": length mismatch");
    require(x.size() >= 2, std::string(who) + ": need at least two samples");
}

// Centred sums; divide by n for the population moments.
struct Moments {
    double n = 0.0, mean_x = 0.0, mean_y = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
};

Moments moments(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    Moments m;
    m.n = n;
    m.mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n;
    m.mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - m.mean_x;
        const double dy = y[i] - m.mean_y;
        m.sxx += dx * dx;
        m.syy += dy * dy;
        m.sxy += dx * dy;
    }
    return m;
}

int sign_class(double d) { return (d > 0.0) - (d < 0.0); }

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y, "pearson");
    const Moments m = moments(x, y);
    const double denom = std::sqrt(m.sxx * m.syy);
    return denom > 0.0 ? m.sxy / denom : 0.0;
}

double ccc(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y, "ccc");
    const Moments m = moments(x, y);
    const double gap = m.mean_x - m.mean_y;
    // Kept in sums rather than moments: fewer roundings, exact on small integers.
    const double denom = m.sxx + m.syy + m.n * gap * gap;
    if (denom < kCccGuard * m.n) {
        return 0.0;
    }
    return std::clamp(2.0 * m.sxy / denom, -1.0, 1.0);
}

double ccc_loss(std::span<const double> pred, std::span<const double> target) {
    return 1.0 - ccc(pred, target);
}

double sda(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y, "sda");
    double total = 0.0;
    for (std::size_t t = 1; t < x.size(); ++t) {
        total += sign_class(x[t] - x[t - 1]) == sign_class(y[t] - y[t - 1]) ? 1.0 : -1.0;
    }
    return total / static_cast<double>(x.size() - 1);
}

MetricReport report(std::span<const double> pred_mu, std::span<const double> pred_sigma,
                    std::span<const double> true_mu, std::span<const double> true_sigma) {
    require(pred_mu.size() == pred_sigma.size() && pred_mu.size() == true_mu.size() &&
                pred_mu.size() == true_sigma.size(),
            "report: sequences differ in length");
    return {ccc(pred_mu, true_mu), ccc(pred_sigma, true_sigma), sda(pred_mu, true_mu),
            sda(pred_sigma, true_sigma)};
}

ChannelScore score_sequences(const std::vector<std::vector<double>>& predictions,
                             const std::vector<std::vector<double>>& targets) {
    require(!predictions.empty() && predictions.size() == targets.size(),
            "score_sequences: prediction/target count mismatch");
    std::vector<double> all_pred;
    std::vector<double> all_true;
    double sda_sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        sda_sum += sda(predictions[i], targets[i]);
        all_pred.insert(all_pred.end(), predictions[i].begin(), predictions[i].end());
        all_true.insert(all_true.end(), targets[i].begin(), targets[i].end());
    }
    return {ccc(all_pred, all_true), sda_sum / static_cast<double>(predictions.size())};
}

MeanStd mean_std(std::span<const double> values) {
    require(!values.empty(), "mean_std: no values");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(ss / n)};
}

AggregateReport aggregate(std::span<const MetricReport> folds) {
    require(!folds.empty(), "aggregate: no folds");
    auto column = [&](double MetricReport::*field) {
        std::vector<double> v;
        for (const auto& f : folds) {
            v.push_back(f.*field);
        }
        return mean_std(v);
    };
    AggregateReport out;
    out.ccc_mu = column(&MetricReport::ccc_mu);
    out.ccc_sigma = column(&MetricReport::ccc_sigma);
    out.sda_mu = column(&MetricReport::sda_mu);
    out.sda_sigma = column(&MetricReport::sda_sigma);
    out.folds = folds.size();
    return out;
}

std::string to_key_value(const MetricReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "ccc_mu=" << r.ccc_mu << "\nccc_sigma=" << r.ccc_sigma << "\nsda_mu=" << r.sda_mu
       << "\nsda_sigma=" << r.sda_sigma << "\n";
    return os.str();
}

MetricReport metric_report_from_key_value(const std::string& text) {
    std::map<std::string, double> kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            continue;
        }
        kv[line.substr(0, eq)] = std::stod(line.substr(eq + 1));
    }
    auto get = [&](const std::string& key) {
        const auto it = kv.find(key);
        if (it == kv.end()) {
            fail(ErrorKind::reporting, "metric record lacks '" + key + "'");
        }
        return it->second;
    };
    return {get("ccc_mu"), get("ccc_sigma"), get("sda_mu"), get("sda_sigma")};
}

}  // namespace affectrep
