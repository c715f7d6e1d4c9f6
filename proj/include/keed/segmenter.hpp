#pragma once

#include <cstdint>
#include <vector>

#include "keed/core.hpp"

namespace keed::segmenter {

inline constexpr int kDefaultInputLength = 256;

// One R-R segment. values is the resampled, z-scored vector of length L
// that feeds the model; raw_len is the inclusive span in original samples.
struct BeatInterval {
    std::int64_t r_start = 0;
    std::int64_t r_end = 0;
    std::int64_t raw_len = 0;
    std::vector<double> values;
};

// Linear interpolation onto the uniform grid j*(n-1)/(L-1); endpoints are
// preserved exactly. Requires segment length >= 2 and L >= 2.
std::vector<double> resample_to_length(const std::vector<double>& segment, int length);

// Zero mean, unit variance (population). Inputs with variance < 1e-12 map
// to all zeros.
std::vector<double> normalize(const std::vector<double>& values);

// Splits [rpeak_i, rpeak_i+1] inclusive into n_peaks - 1 intervals, each
// resampled to `length` and normalized. Samples before the first peak and
// after the last are discarded. Requires >= 2 strictly increasing peaks.
std::vector<BeatInterval> split_intervals(const TimeSeriesRecord& record,
                                          const std::vector<std::int64_t>& rpeaks,
                                          int length = kDefaultInputLength);

// r_start + round(idx * (raw_len-1)/(L-1)); monotone, endpoint-exact.
std::int64_t map_to_original(const BeatInterval& interval, int resampled_index);

// Inverse of map_to_original up to rounding: original sample -> nearest
// resampled grid index, clamped to [0, L-1].
int to_resampled(const BeatInterval& interval, std::int64_t original_index);

}  // namespace keed::segmenter
