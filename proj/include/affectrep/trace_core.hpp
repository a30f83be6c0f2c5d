#pragma once

// Time-series primitives shared by every representation: windowing,
// annotation-delay compensation, multi-annotator alignment and central
// differencing. Everything here is a pure function of its arguments.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace affectrep {

/// One annotator's trace sampled at a fixed period (seconds).
struct AnnotationTrace {
    std::string annotator_id;
    std::vector<double> values;
    double sample_period = 0.0;

    /// Throws if values are empty or non-finite or the period is not positive.
    void validate() const;
};

/// Declared trace range, e.g. [-1, 1] for bounded arousal/valence ratings.
struct Bounds {
    double lo = -1.0;
    double hi = 1.0;

    bool contains(double v) const noexcept { return v >= lo && v <= hi; }
    double width() const noexcept { return hi - lo; }
};

/// Aligned traces of M >= 2 annotators, each holding exactly window_count values.
struct TraceSet {
    std::vector<AnnotationTrace> traces;
    std::size_t window_count = 0;
    double window_length = 0.0;
    std::optional<Bounds> bounds;

    std::size_t annotator_count() const noexcept { return traces.size(); }
    double value(std::size_t annotator, std::size_t window) const {
        return traces[annotator].values[window];
    }

    void validate() const;
};

/// Per-annotator gradient, in trace units per window.
struct GradientTrace {
    std::string annotator_id;
    std::vector<double> values;
};

/// Number of native samples covering `span` seconds, rounded to the nearest
/// integer. Throws when either duration is not positive and finite.
std::size_t samples_per_span(double span, double native_period);

/// Mean of each complete window; a trailing partial window is dropped.
std::vector<double> window_aggregate(std::span<const double> raw, double native_period,
                                     double window_length);

/// Drops the first round(offset / native_period) label samples.
std::vector<double> shift_delay(std::span<const double> raw, double native_period, double offset);

/// Truncates every trace to the shortest shared length (and to keep_first
/// when given). Annotator order and values are preserved.
TraceSet align(std::vector<AnnotationTrace> traces, std::optional<std::size_t> keep_first = {},
               std::optional<Bounds> bounds = {});

/// (x[n+1] - x[n-1]) / 2 inside, one-sided first differences at both ends.
std::vector<double> central_difference(std::span<const double> values);

/// Affine map onto [0, 1]; a constant input maps to 0.5 everywhere.
std::vector<double> minmax_normalize(std::span<const double> values);

GradientTrace gradient_of(const AnnotationTrace& trace);

}  // namespace affectrep
