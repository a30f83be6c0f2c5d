#include "affectrep/trace_core.hpp"

#include "affectrep/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace affectrep {

namespace {

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void AnnotationTrace::validate() const {
    require(!values.empty(), "trace '" + annotator_id + "' has no values");
    require(all_finite(values), "trace '" + annotator_id + "' contains non-finite values");
    require(std::isfinite(sample_period) && sample_period > 0.0,
            "trace '" + annotator_id + "' has a non-positive sample period");
}

void TraceSet::validate() const {
    require(traces.size() >= 2, "a trace set needs at least two annotators");
    require(window_count > 0, "a trace set needs at least one window");
    const double period = traces.front().sample_period;
    for (const auto& t : traces) {
        t.validate();
        require(t.values.size() == window_count,
                "trace '" + t.annotator_id + "' length differs from the window count");
        require(t.sample_period == period, "traces have mismatched sample periods");
        if (bounds) {
            for (double v : t.values) {
                require(bounds->contains(v), "trace '" + t.annotator_id + "' leaves its declared bounds");
            }
        }
    }
    if (bounds) {
        require(bounds->hi > bounds->lo, "bounds must satisfy hi > lo");
    }
}

std::size_t samples_per_span(double span, double native_period) {
    require(std::isfinite(native_period) && native_period > 0.0, "sample period must be positive");
    require(std::isfinite(span) && span >= 0.0, "duration must be non-negative");
    return static_cast<std::size_t>(std::llround(span / native_period));
}

std::vector<double> window_aggregate(std::span<const double> raw, double native_period,
                                     double window_length) {
    require(!raw.empty(), "window_aggregate: empty input");
    require(std::isfinite(window_length) && window_length > 0.0,
            "window_aggregate: window length must be positive");
    require(std::isfinite(native_period) && native_period > 0.0,
            "window_aggregate: sample period must be positive");
    require(window_length >= native_period, "window_aggregate: window shorter than one sample");
    const std::size_t per_window = samples_per_span(window_length, native_period);

    const std::size_t windows = raw.size() / per_window;
    std::vector<double> out;
    out.reserve(windows);
    for (std::size_t w = 0; w < windows; ++w) {
        auto first = raw.begin() + static_cast<std::ptrdiff_t>(w * per_window);
        const double sum = std::accumulate(first, first + static_cast<std::ptrdiff_t>(per_window), 0.0);
        out.push_back(sum / static_cast<double>(per_window));
    }
    return out;
}

std::vector<double> shift_delay(std::span<const double> raw, double native_period, double offset) {
    require(std::isfinite(offset) && offset >= 0.0, "shift_delay: offset must be non-negative");
    const std::size_t k = samples_per_span(offset, native_period);
    require(k < raw.size(), "shift_delay: offset consumes the whole trace");
    return {raw.begin() + static_cast<std::ptrdiff_t>(k), raw.end()};
}

TraceSet align(std::vector<AnnotationTrace> traces, std::optional<std::size_t> keep_first,
               std::optional<Bounds> bounds) {
    require(traces.size() >= 2, "align: at least two annotators are required");
    const double period = traces.front().sample_period;
    std::size_t n = traces.front().values.size();
    for (const auto& t : traces) {
        require(t.sample_period == period, "align: mismatched sample periods");
        n = std::min(n, t.values.size());
    }
    if (keep_first) {
        n = std::min(n, *keep_first);
    }
    require(n > 0, "align: no shared windows remain");
    for (auto& t : traces) {
        t.values.resize(n);
    }

    TraceSet set;
    set.traces = std::move(traces);
    set.window_count = n;
    set.window_length = period;
    set.bounds = bounds;
    set.validate();
    return set;
}

std::vector<double> central_difference(std::span<const double> values) {
    const std::size_t n = values.size();
    require(n >= 2, "central_difference: need at least two samples");
    std::vector<double> g(n);
    g.front() = values[1] - values[0];
    g.back() = values[n - 1] - values[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        g[i] = (values[i + 1] - values[i - 1]) / 2.0;
    }
    return g;
}

std::vector<double> minmax_normalize(std::span<const double> values) {
    require(!values.empty(), "minmax_normalize: empty input");
    require(all_finite(values), "minmax_normalize: non-finite input");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    std::vector<double> out(values.size(), 0.5);
    if (hi > lo) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            out[i] = (values[i] - lo) / (hi - lo);
        }
    }
    return out;
}

GradientTrace gradient_of(const AnnotationTrace& trace) {
    return {trace.annotator_id, central_difference(trace.values)};
}

}  // namespace affectrep
