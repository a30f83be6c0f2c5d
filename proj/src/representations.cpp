#include "affectrep/representations.hpp"

#include "affectrep/error.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace affectrep {

std::string_view to_string(Family family) {
    return family == Family::gaussian ? "gaussian" : "beta";
}

std::string_view to_string(RepresentationTag tag) {
    switch (tag) {
        case RepresentationTag::interval: return "I";
        case RepresentationTag::individual_ordinal: return "O_I";
        case RepresentationTag::group_ordinal: return "O_G";
    }
    return "?";
}

Family parse_family(std::string_view text) {
    if (text == "gaussian") return Family::gaussian;
    if (text == "beta") return Family::beta_mapped;
    fail(ErrorKind::config, "unknown distribution family '" + std::string(text) + "'");
}

RepresentationTag parse_tag(std::string_view text) {
    if (text == "I") return RepresentationTag::interval;
    if (text == "O_I") return RepresentationTag::individual_ordinal;
    if (text == "O_G") return RepresentationTag::group_ordinal;
    fail(ErrorKind::config, "unknown representation tag '" + std::string(text) + "'");
}

std::vector<double> pool_neighbors(std::span<const std::vector<double>> series, std::size_t window,
                                   std::size_t radius) {
    require(!series.empty(), "pool_neighbors: no series");
    const std::size_t n = series.front().size();
    require(window < n, "pool_neighbors: window index out of range");
    const std::size_t first = window >= radius ? window - radius : 0;
    const std::size_t last = std::min(n - 1, window + radius);

    std::vector<double> pooled;
    pooled.reserve((last - first + 1) * series.size());
    for (std::size_t k = first; k <= last; ++k) {
        for (const auto& s : series) {
            pooled.push_back(s[k]);
        }
    }
    return pooled;
}

std::vector<double> pool_neighbors(const TraceSet& set, std::size_t window, std::size_t radius) {
    std::vector<std::vector<double>> series;
    series.reserve(set.annotator_count());
    for (const auto& t : set.traces) {
        series.push_back(t.values);
    }
    return pool_neighbors(series, window, radius);
}

DistParams fit_gaussian(std::span<const double> samples) {
    require(samples.size() >= 2, "fit_gaussian: need at least two samples");
    require(std::all_of(samples.begin(), samples.end(), [](double v) { return std::isfinite(v); }),
            "fit_gaussian: non-finite sample");
    if (std::all_of(samples.begin(), samples.end(), [&](double v) { return v == samples.front(); })) {
        return {samples.front(), 0.0, Family::gaussian, std::nullopt};
    }
    const double count = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / count;
    double ss = 0.0;
    for (double v : samples) {
        ss += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(ss / count), Family::gaussian, std::nullopt};
}

BetaShape beta_moment_estimate(std::span<const double> unit_samples) {
    const double count = static_cast<double>(unit_samples.size());
    const double m = std::accumulate(unit_samples.begin(), unit_samples.end(), 0.0) / count;
    double v = 0.0;
    for (double u : unit_samples) {
        v += (u - m) * (u - m);
    }
    v /= count;
    require(v > 0.0, "beta moment estimate: zero variance");
    // For data strictly inside (0, 1) the population variance is below m(1-m).
    const double common = std::max(m * (1.0 - m) / v - 1.0, 1e-8);
    return {m * common, (1.0 - m) * common};
}

DistParams fit_beta(std::span<const double> samples, Bounds bounds, BetaFitInfo* info) {
    require(samples.size() >= 2, "fit_beta: need at least two samples");
    require(bounds.hi > bounds.lo, "fit_beta: bounds must satisfy hi > lo");

    std::vector<double> unit;
    unit.reserve(samples.size());
    for (double y : samples) {
        require(std::isfinite(y) && bounds.contains(y), "fit_beta: sample outside bounds");
        unit.push_back(std::clamp((y - bounds.lo) / bounds.width(), kBetaClamp, 1.0 - kBetaClamp));
    }
    require(std::any_of(unit.begin(), unit.end(), [&](double u) { return u != unit.front(); }),
            "fit_beta: all samples identical after clamping");

    const double count = static_cast<double>(unit.size());
    double mean_log_u = 0.0;
    double mean_log_1mu = 0.0;
    for (double u : unit) {
        mean_log_u += std::log(u);
        mean_log_1mu += std::log1p(-u);
    }
    mean_log_u /= count;
    mean_log_1mu /= count;

    using boost::math::digamma;
    using boost::math::trigamma;

    const BetaShape start = beta_moment_estimate(unit);
    double a = start.alpha;
    double b = start.beta;
    bool converged = false;
    int iter = 0;
    for (; iter < kBetaMaxIterations; ++iter) {
        const double psi_ab = digamma(a + b);
        const double g1 = digamma(a) - psi_ab - mean_log_u;
        const double g2 = digamma(b) - psi_ab - mean_log_1mu;
        const double t_ab = trigamma(a + b);
        const double j11 = trigamma(a) - t_ab;
        const double j22 = trigamma(b) - t_ab;
        const double j12 = -t_ab;
        const double det = j11 * j22 - j12 * j12;
        if (!(std::isfinite(det) && det > 0.0)) {
            break;
        }
        double da = (j22 * g1 - j12 * g2) / det;
        double db = (j11 * g2 - j12 * g1) / det;
        // Halve the step until both shapes stay positive.
        double scale = 1.0;
        while (a - scale * da <= 0.0 || b - scale * db <= 0.0) {
            scale *= 0.5;
        }
        da *= scale;
        db *= scale;
        a -= da;
        b -= db;
        if (std::abs(da) <= 1e-12 * a && std::abs(db) <= 1e-12 * b) {
            converged = true;
            ++iter;
            break;
        }
    }
    if (!converged || !std::isfinite(a) || !std::isfinite(b)) {
        a = start.alpha;
        b = start.beta;
        converged = false;
    }
    if (info) {
        info->iterations = iter;
        info->converged = converged;
    }

    const double s = a + b;
    const double unit_mean = a / s;
    const double unit_sd = std::sqrt(a * b / (s * s * (s + 1.0)));
    return {bounds.lo + bounds.width() * unit_mean, bounds.width() * unit_sd, Family::beta_mapped,
            BetaShape{a, b}};
}

namespace {

[[noreturn]] void rethrow_for_window(std::size_t window, const Error& e) {
    fail(ErrorKind::representation, "window " + std::to_string(window) + ": " + e.what());
}

}  // namespace

IntervalRepresentation interval_representation(const TraceSet& set, Family family, std::size_t radius) {
    if (family == Family::beta_mapped && !set.bounds) {
        fail(ErrorKind::config, "beta family requires declared trace bounds");
    }
    IntervalRepresentation rep;
    rep.radius = radius;
    rep.family = family;
    rep.params.reserve(set.window_count);
    for (std::size_t n = 0; n < set.window_count; ++n) {
        const auto pooled = pool_neighbors(set, n, radius);
        try {
            rep.params.push_back(family == Family::gaussian ? fit_gaussian(pooled)
                                                            : fit_beta(pooled, *set.bounds));
        } catch (const Error& e) {
            rethrow_for_window(n, e);
        }
    }
    return rep;
}

IndividualOrdinal individual_ordinal(const TraceSet& set, std::size_t radius) {
    if (set.window_count < 2) {
        fail(ErrorKind::representation, "individual ordinal representation needs at least two windows");
    }
    std::vector<std::vector<double>> gradients;
    gradients.reserve(set.annotator_count());
    for (const auto& t : set.traces) {
        gradients.push_back(gradient_of(t).values);
    }

    IndividualOrdinal rep;
    rep.radius = radius;
    rep.params.reserve(set.window_count);
    for (std::size_t n = 0; n < set.window_count; ++n) {
        try {
            rep.params.push_back(fit_gaussian(pool_neighbors(gradients, n, radius)));
        } catch (const Error& e) {
            rethrow_for_window(n, e);
        }
    }
    return rep;
}

GroupOrdinal group_ordinal(const IntervalRepresentation& interval) {
    if (interval.params.size() < 2) {
        fail(ErrorKind::representation, "group ordinal representation needs at least two windows");
    }
    std::vector<double> mu;
    std::vector<double> sigma;
    for (const auto& p : interval.params) {
        mu.push_back(p.mu);
        sigma.push_back(p.sigma);
    }
    return {central_difference(mu), central_difference(sigma)};
}

std::string RepresentationSeries::mu_column() const {
    switch (tag) {
        case RepresentationTag::interval: return "mu";
        case RepresentationTag::individual_ordinal: return "mu";
        case RepresentationTag::group_ordinal: return "dmu";
    }
    return "mu";
}

std::string RepresentationSeries::sigma_column() const {
    return tag == RepresentationTag::group_ordinal ? "dsigma" : "sigma";
}

RepresentationSeries to_series(const IntervalRepresentation& rep) {
    RepresentationSeries s;
    s.tag = RepresentationTag::interval;
    s.family = rep.family;
    s.radius = rep.radius;
    for (const auto& p : rep.params) {
        s.mu.push_back(p.mu);
        s.sigma.push_back(p.sigma);
        if (p.shape) {
            s.shapes.push_back(*p.shape);
        }
    }
    return s;
}

RepresentationSeries to_series(const IndividualOrdinal& rep) {
    RepresentationSeries s;
    s.tag = RepresentationTag::individual_ordinal;
    s.family = Family::gaussian;
    s.radius = rep.radius;
    for (const auto& p : rep.params) {
        s.mu.push_back(p.mu);
        s.sigma.push_back(p.sigma);
    }
    return s;
}

RepresentationSeries to_series(const GroupOrdinal& rep, const IntervalRepresentation& source) {
    RepresentationSeries s;
    s.tag = RepresentationTag::group_ordinal;
    s.family = source.family;
    s.radius = source.radius;
    s.mu = rep.dmu;
    s.sigma = rep.dsigma;
    return s;
}

RepresentationSeries compute_representation(const TraceSet& set, RepresentationTag tag, Family family,
                                            std::size_t radius) {
    switch (tag) {
        case RepresentationTag::interval:
            return to_series(interval_representation(set, family, radius));
        case RepresentationTag::individual_ordinal:
            return to_series(individual_ordinal(set, radius));
        case RepresentationTag::group_ordinal: {
            const auto interval = interval_representation(set, family, radius);
            return to_series(group_ordinal(interval), interval);
        }
    }
    fail(ErrorKind::config, "unhandled representation tag");
}

}  // namespace affectrep
