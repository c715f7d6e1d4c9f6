#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "keed/core.hpp"
#include "keed/heatmap.hpp"
#include "keed/segmenter.hpp"
#include "keed/tensor.hpp"

namespace keed::synth {

// Deterministic scalar draws on top of std::mt19937_64. The standard
// distributions are not bit-stable across library implementations, so the
// generator derives doubles from raw engine words directly.
double uniform01(std::mt19937_64& rng);                  // [0, 1)
double uniform(std::mt19937_64& rng, double lo, double hi);
double normal01(std::mt19937_64& rng);                   // Box-Muller

// One Gaussian bump: amplitude in mV, center as a signed fraction of the
// beat's R-R measured from the R peak, width in seconds.
struct WaveSpec {
    double amplitude = 0.0;
    double center_frac = 0.0;
    double width_s = 0.01;
};

struct BeatTemplate {
    WaveSpec p{0.15, -0.22, 0.025};
    WaveSpec q{-0.08, -0.045, 0.009};
    WaveSpec r{1.00, 0.0, 0.012};
    WaveSpec s{-0.12, 0.045, 0.009};
    WaveSpec t{0.30, 0.28, 0.055};
    bool p_present = true;
    bool t_present = true;

    void validate() const;  // widths > 0, R dominant, P<Q<R<S<T ordering
};

// Inclusive beat-index range during which P waves are dropped and replaced
// by low-amplitude fibrillatory activity.
struct Episode {
    int first_beat = 0;
    int last_beat = 0;
};

struct WaveTruth {
    std::int64_t onset = 0;
    std::int64_t peak = 0;
    std::int64_t offset = 0;
};

struct BeatTruth {
    std::int64_t r = 0;
    std::optional<WaveTruth> p;  // nullopt when the P wave is absent
    std::optional<WaveTruth> t;
};

struct GenConfig {
    int n_beats = 100;
    double fs = 250.0;
    double rr_mean = 0.8;       // seconds
    double rr_jitter = 0.08;    // fraction of rr_mean, uniform
    std::vector<Episode> p_dropout;
    std::optional<double> noise_snr_db;
    BeatTemplate beat;
    std::uint64_t seed = 1;
    std::string record_id = "synth";

    void validate() const;
};

struct SynthRecord {
    TimeSeriesRecord record;
    std::vector<BeatTruth> beats;
    std::vector<Episode> p_absent_episodes;

    std::vector<std::int64_t> rpeaks() const;
    // Flattened P/T truth in annotation form, sorted by sample index.
    std::vector<FiducialAnnotation> fiducials() const;
};

// Fully determined by cfg.seed. Wave peaks sit at the bump centers;
// onsets/offsets at center -/+ round(2.5 * width * fs).
SynthRecord gen_record(const GenConfig& cfg);

struct TrainingPair {
    segmenter::BeatInterval interval;
    net::HeatmapSet target;
    heatmap::TargetSet truth;  // resampled-coordinate fiducials
};

// Splits on ground-truth R peaks, maps fiducials into resampled
// coordinates, and builds Gaussian targets. Interval [R_i, R_i+1] carries
// the T wave of beat i and the P wave of beat i+1.
std::vector<TrainingPair> to_training_set(const std::vector<SynthRecord>& records, int length,
                                          const heatmap::DecodeConfig& cfg);

// CSV (one value per line, %.17g) and the truth sidecar
// {beats:[{r, p:{on,peak,off}|null, t:{on,peak,off}|null}]}.
std::string to_csv(const SynthRecord& rec);
std::string truth_json(const SynthRecord& rec);
std::vector<BeatTruth> truth_from_json(const std::string& text);

}  // namespace keed::synth
