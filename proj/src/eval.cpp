#include "keed/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace keed::eval {

ConfusionCounts confusion(const std::vector<bool>& truth, const std::vector<bool>& pred) {
    if (truth.size() != pred.size()) throw std::invalid_argument("confusion: length mismatch");
    ConfusionCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] && pred[i]) ++c.tp;
        else if (truth[i] && !pred[i]) ++c.fn;
        else if (!truth[i] && pred[i]) ++c.fp;
        else ++c.tn;
    }
    return c;
}

Metrics metrics(const ConfusionCounts& c) {
    if (c.total() == 0) throw std::invalid_argument("metrics: empty counts");
    Metrics m;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    if (c.tp + c.fn > 0)
        m.sensitivity = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (c.tn + c.fp > 0)
        m.specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    return m;
}

std::optional<double> peak_error(const std::vector<std::int64_t>& truth_loc,
                                 const std::vector<std::int64_t>& pred_loc,
                                 const std::vector<bool>& truth_present,
                                 const std::vector<bool>& pred_present) {
    if (truth_loc.size() != pred_loc.size() || truth_loc.size() != truth_present.size() ||
        truth_loc.size() != pred_present.size())
        throw std::invalid_argument("peak_error: length mismatch");
    double acc = 0.0;
    std::int64_t n = 0;
    for (std::size_t i = 0; i < truth_loc.size(); ++i) {
        if (!truth_present[i] || !pred_present[i]) continue;
        acc += std::fabs(static_cast<double>(pred_loc[i] - truth_loc[i]));
        ++n;
    }
    if (n == 0) return std::nullopt;
    return acc / static_cast<double>(n);
}

std::vector<std::pair<double, ConfusionCounts>> lambda_sweep(
    const std::vector<double>& confidences, const std::vector<bool>& truth,
    const std::vector<double>& lambdas) {
    if (confidences.size() != truth.size()) throw std::invalid_argument("lambda_sweep: length mismatch");
    std::vector<std::pair<double, ConfusionCounts>> out;
    out.reserve(lambdas.size());
    for (double lambda : lambdas) {
        std::vector<bool> pred(confidences.size());
        for (std::size_t i = 0; i < confidences.size(); ++i) pred[i] = confidences[i] >= lambda;
        out.emplace_back(lambda, confusion(truth, pred));
    }
    return out;
}

std::string sweep_csv(const std::vector<std::pair<double, ConfusionCounts>>& sweep) {
    std::string out = "lambda,tp,fp,fn,tn\n";
    char buf[128];
    for (const auto& [lambda, c] : sweep) {
        std::snprintf(buf, sizeof(buf), "%g,%lld,%lld,%lld,%lld\n", lambda,
                      static_cast<long long>(c.tp), static_cast<long long>(c.fp),
                      static_cast<long long>(c.fn), static_cast<long long>(c.tn));
        out += buf;
    }
    return out;
}

namespace {

nlohmann::json opt_pct(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v * 100.0;
}

std::string fmt_opt(const std::optional<double>& v, double scale) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", *v * scale);
    return buf;
}

}  // namespace

std::string report_json(const EvalReport& report) {
    nlohmann::json root;
    nlohmann::json methods = nlohmann::json::array();
    for (const MethodReport& m : report.methods) {
        nlohmann::json jm;
        jm["method"] = m.method;
        jm["accuracy_pct"] = opt_pct(m.presence.accuracy);
        jm["sensitivity_pct"] = opt_pct(m.presence.sensitivity);
        jm["specificity_pct"] = opt_pct(m.presence.specificity);
        jm["error_samples"] = m.mean_peak_error ? nlohmann::json(*m.mean_peak_error)
                                                : nlohmann::json(nullptr);
        jm["time_s"] = m.wall_seconds;
        jm["intervals_per_s"] = m.intervals_per_second;
        methods.push_back(std::move(jm));
    }
    root["methods"] = std::move(methods);
    return root.dump(2);
}

std::string report_table(const EvalReport& report) {
    const char* hdr = "Method | Accuracy (%) | Sensitivity (%) | Specificity (%) | "
                      "Error (Samples) | Time (s)";
    std::string out = hdr;
    out += "\n";
    char buf[256];
    for (const MethodReport& m : report.methods) {
        std::snprintf(buf, sizeof(buf), "%-6s | %12s | %15s | %15s | %15s | %8.3f\n",
                      m.method.c_str(), fmt_opt(m.presence.accuracy, 100.0).c_str(),
                      fmt_opt(m.presence.sensitivity, 100.0).c_str(),
                      fmt_opt(m.presence.specificity, 100.0).c_str(),
                      fmt_opt(m.mean_peak_error, 1.0).c_str(), m.wall_seconds);
        out += buf;
    }
    return out;
}

BenchResult benchmark(const std::function<std::vector<DelineationResult>()>& run,
                      int repeats, std::int64_t n_intervals) {
    if (repeats < 1) throw std::invalid_argument("benchmark: repeats must be >= 1");
    using clock = std::chrono::steady_clock;
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(repeats));
    std::string first_snapshot;
    bool deterministic = true;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = clock::now();
        const std::vector<DelineationResult> results = run();
        const auto t1 = clock::now();
        times.push_back(std::chrono::duration<double>(t1 - t0).count());
        std::string snapshot;
        for (const DelineationResult& res : results) snapshot += to_json(res);
        if (r == 0) first_snapshot = std::move(snapshot);
        else if (snapshot != first_snapshot) deterministic = false;
    }
    std::sort(times.begin(), times.end());
    const double median = times.size() % 2 == 1
                              ? times[times.size() / 2]
                              : 0.5 * (times[times.size() / 2 - 1] + times[times.size() / 2]);
    BenchResult out;
    out.median_seconds = median;
    out.intervals_per_second = median > 0.0 ? static_cast<double>(n_intervals) / median : 0.0;
    out.deterministic = deterministic;
    out.repeats = repeats;
    return out;
}

std::vector<std::int64_t> match_peaks(const std::vector<std::int64_t>& reference,
                                      const std::vector<std::int64_t>& detected,
                                      std::int64_t tolerance_samples) {
    std::vector<std::int64_t> out(detected.size(), -1);
    std::size_t ri = 0;
    for (std::size_t di = 0; di < detected.size(); ++di) {
        // advance to the closest reference peak not yet consumed
        while (ri + 1 < reference.size() &&
               std::llabs(reference[ri + 1] - detected[di]) <=
                   std::llabs(reference[ri] - detected[di]))
            ++ri;
        if (ri < reference.size() &&
            std::llabs(reference[ri] - detected[di]) <= tolerance_samples) {
            out[di] = static_cast<std::int64_t>(ri);
            ++ri;
        }
    }
    return out;
}

AlignedTruth align_truth(const std::vector<synth::BeatTruth>& beats,
                         const std::vector<std::int64_t>& detected_rpeaks, double fs,
                         double tolerance_s) {
    std::vector<std::int64_t> reference;
    reference.reserve(beats.size());
    for (const synth::BeatTruth& b : beats) reference.push_back(b.r);
    const std::int64_t tol = static_cast<std::int64_t>(tolerance_s * fs);
    const std::vector<std::int64_t> matched = match_peaks(reference, detected_rpeaks, tol);

    AlignedTruth out;
    if (detected_rpeaks.size() < 2) return out;
    out.intervals.resize(detected_rpeaks.size() - 1);
    for (std::size_t i = 0; i + 1 < detected_rpeaks.size(); ++i) {
        const std::int64_t a = matched[i], b = matched[i + 1];
        IntervalTruth& iv = out.intervals[i];
        if (a < 0 || b != a + 1) {
            ++out.excluded;
            continue;
        }
        iv.scoreable = true;
        const synth::BeatTruth& opening = beats[static_cast<std::size_t>(a)];
        const synth::BeatTruth& closing = beats[static_cast<std::size_t>(b)];
        if (closing.p) {
            iv.p_present = true;
            iv.p_peak = closing.p->peak;
        }
        if (opening.t) {
            iv.t_present = true;
            iv.t_peak = opening.t->peak;
        }
    }
    return out;
}

std::vector<synth::BeatTruth> beats_from_annotations(
    const std::vector<io::WfdbAnnotation>& anns, const std::map<int, KeypointKind>& code_map,
    const std::map<std::string, KeypointKind>& aux_map) {
    // Standard WFDB beat codes (NORMAL..BBB plus escapes and fusions).
    static const std::int64_t kBeatCodes[] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13,
                                              25, 34, 35, 38, 41};
    auto is_beat = [](int code) {
        for (std::int64_t b : kBeatCodes)
            if (code == b) return true;
        return false;
    };
    auto kind_of = [&](const io::WfdbAnnotation& ann) -> std::optional<KeypointKind> {
        if (const auto it = code_map.find(ann.type_code); it != code_map.end()) return it->second;
        if (!ann.aux.empty()) {
            if (const auto it = aux_map.find(ann.aux); it != aux_map.end()) return it->second;
        }
        return std::nullopt;
    };

    std::vector<synth::BeatTruth> beats;
    for (const io::WfdbAnnotation& ann : anns) {
        if (is_beat(ann.type_code)) beats.push_back(synth::BeatTruth{ann.sample_index, {}, {}});
    }
    if (beats.empty()) return beats;

    for (const io::WfdbAnnotation& ann : anns) {
        const auto kind = kind_of(ann);
        if (!kind) continue;
        if (*kind == KeypointKind::PPeak) {
            // P precedes its beat: attach to the first R at or after it.
            const auto it = std::lower_bound(
                beats.begin(), beats.end(), ann.sample_index,
                [](const synth::BeatTruth& b, std::int64_t s) { return b.r < s; });
            if (it != beats.end())
                it->p = synth::WaveTruth{ann.sample_index, ann.sample_index, ann.sample_index};
        } else if (*kind == KeypointKind::TPeak) {
            // T follows its beat: attach to the last R at or before it.
            auto it = std::upper_bound(
                beats.begin(), beats.end(), ann.sample_index,
                [](std::int64_t s, const synth::BeatTruth& b) { return s < b.r; });
            if (it != beats.begin()) {
                --it;
                it->t = synth::WaveTruth{ann.sample_index, ann.sample_index, ann.sample_index};
            }
        }
        // Onset/offset kinds are accepted in the map but only peaks drive
        // the presence evaluation.
    }
    return beats;
}

}  // namespace keed::eval
