#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "keed/core.hpp"
#include "keed/io.hpp"
#include "keed/synth.hpp"

namespace keed::eval {

// Positive class = wave present in the interval.
struct ConfusionCounts {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::int64_t total() const { return tp + fp + fn + tn; }
    bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(const std::vector<bool>& truth, const std::vector<bool>& pred);

// Ratios with a zero denominator are reported as absent, never as 0 or 1.
struct Metrics {
    std::optional<double> accuracy;
    std::optional<double> sensitivity;  // tp / (tp + fn)
    std::optional<double> specificity;  // tn / (tn + fp)
};

Metrics metrics(const ConfusionCounts& c);  // throws when total() == 0

// Mean |pred - truth| in samples over intervals where both sides are
// present; absent when no interval qualifies.
std::optional<double> peak_error(const std::vector<std::int64_t>& truth_loc,
                                 const std::vector<std::int64_t>& pred_loc,
                                 const std::vector<bool>& truth_present,
                                 const std::vector<bool>& pred_present);

// Re-thresholds cached per-interval confidences at each lambda
// (present iff confidence >= lambda); the model never reruns.
std::vector<std::pair<double, ConfusionCounts>> lambda_sweep(
    const std::vector<double>& confidences, const std::vector<bool>& truth,
    const std::vector<double>& lambdas);

std::string sweep_csv(const std::vector<std::pair<double, ConfusionCounts>>& sweep);

struct MethodReport {
    std::string method;
    Metrics presence;
    std::optional<double> mean_peak_error;  // samples
    double wall_seconds = 0.0;
    double intervals_per_second = 0.0;
};

struct EvalReport {
    std::vector<MethodReport> methods;
};

std::string report_json(const EvalReport& report);
// Aligned plain-text table:
// Method | Accuracy (%) | Sensitivity (%) | Specificity (%) | Error (Samples) | Time (s)
std::string report_table(const EvalReport& report);

struct BenchResult {
    double median_seconds = 0.0;
    double intervals_per_second = 0.0;
    bool deterministic = false;
    int repeats = 0;
};

// Runs the delineator `repeats` times over in-memory inputs, reports the
// median wall time and whether every repeat produced identical results.
BenchResult benchmark(const std::function<std::vector<DelineationResult>()>& run,
                      int repeats, std::int64_t n_intervals);

// Matches detected R peaks against reference R peaks (closest within
// `tolerance_samples`, one-to-one, in order). Returns indices into the
// reference for each detected peak, or -1 when unmatched.
std::vector<std::int64_t> match_peaks(const std::vector<std::int64_t>& reference,
                                      const std::vector<std::int64_t>& detected,
                                      std::int64_t tolerance_samples);

// Per-interval ground truth after aligning detector R peaks with the
// annotated beats. A wave belongs to the interval containing its peak;
// intervals whose bounding R peaks do not both match consecutive annotated
// beats (within 0.15 s) are excluded from scoring and counted.
struct IntervalTruth {
    bool scoreable = false;
    bool p_present = false;
    std::int64_t p_peak = -1;
    bool t_present = false;
    std::int64_t t_peak = -1;
};

struct AlignedTruth {
    std::vector<IntervalTruth> intervals;  // one per detected R-R interval
    std::int64_t excluded = 0;
};

AlignedTruth align_truth(const std::vector<synth::BeatTruth>& beats,
                         const std::vector<std::int64_t>& detected_rpeaks, double fs,
                         double tolerance_s = 0.15);

// Annotation stream -> per-beat truth using a configurable type-code (and
// aux text) mapping. Annotations with standard beat codes become R peaks;
// mapped P/T peak annotations attach to the beat they precede (P) or
// follow (T).
std::vector<synth::BeatTruth> beats_from_annotations(
    const std::vector<io::WfdbAnnotation>& anns, const std::map<int, KeypointKind>& code_map,
    const std::map<std::string, KeypointKind>& aux_map);

}  // namespace keed::eval
