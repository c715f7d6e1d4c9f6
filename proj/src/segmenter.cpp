#include "keed/segmenter.hpp"

#include <cmath>
#include <stdexcept>

namespace keed::segmenter {

std::vector<double> resample_to_length(const std::vector<double>& segment, int length) {
    const std::size_t n = segment.size();
    if (n < 2) throw std::invalid_argument("resample_to_length: segment needs >= 2 samples");
    if (length < 2) throw std::invalid_argument("resample_to_length: target length must be >= 2");

    std::vector<double> out(static_cast<std::size_t>(length));
    const double scale = static_cast<double>(n - 1) / static_cast<double>(length - 1);
    out[0] = segment.front();
    out[static_cast<std::size_t>(length - 1)] = segment.back();
    for (int j = 1; j < length - 1; ++j) {
        const double pos = j * scale;
        const std::size_t lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        out[static_cast<std::size_t>(j)] = segment[lo] + frac * (segment[lo + 1] - segment[lo]);
    }
    return out;
}

std::vector<double> normalize(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n < 2) throw std::invalid_argument("normalize: needs >= 2 samples");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    std::vector<double> out(n);
    if (var < 1e-12) return out;  // all zeros
    const double inv_std = 1.0 / std::sqrt(var);
    for (std::size_t i = 0; i < n; ++i) out[i] = (values[i] - mean) * inv_std;
    return out;
}

std::vector<BeatInterval> split_intervals(const TimeSeriesRecord& record,
                                          const std::vector<std::int64_t>& rpeaks,
                                          int length) {
    record.validate();
    if (rpeaks.size() < 2) throw std::invalid_argument("split_intervals: needs >= 2 R peaks");
    const std::int64_t n = static_cast<std::int64_t>(record.samples.size());
    std::vector<BeatInterval> out;
    out.reserve(rpeaks.size() - 1);
    for (std::size_t i = 0; i + 1 < rpeaks.size(); ++i) {
        const std::int64_t a = rpeaks[i];
        const std::int64_t b = rpeaks[i + 1];
        if (b <= a) throw std::invalid_argument("split_intervals: R peaks not strictly increasing");
        if (a < 0 || b >= n) throw std::invalid_argument("split_intervals: R peak out of range");
        BeatInterval iv;
        iv.r_start = a;
        iv.r_end = b;
        iv.raw_len = b - a + 1;
        std::vector<double> segment(record.samples.begin() + a, record.samples.begin() + b + 1);
        iv.values = normalize(resample_to_length(segment, length));
        out.push_back(std::move(iv));
    }
    return out;
}

std::int64_t map_to_original(const BeatInterval& interval, int resampled_index) {
    const int length = static_cast<int>(interval.values.size());
    if (resampled_index < 0 || resampled_index >= length)
        throw std::invalid_argument("map_to_original: index out of range");
    const double pos = static_cast<double>(resampled_index) *
                       static_cast<double>(interval.raw_len - 1) / static_cast<double>(length - 1);
    return interval.r_start + static_cast<std::int64_t>(std::llround(pos));
}

int to_resampled(const BeatInterval& interval, std::int64_t original_index) {
    const int length = static_cast<int>(interval.values.size());
    const double pos = static_cast<double>(original_index - interval.r_start) *
                       static_cast<double>(length - 1) / static_cast<double>(interval.raw_len - 1);
    std::int64_t idx = std::llround(pos);
    if (idx < 0) idx = 0;
    if (idx > length - 1) idx = length - 1;
    return static_cast<int>(idx);
}

}  // namespace keed::segmenter
