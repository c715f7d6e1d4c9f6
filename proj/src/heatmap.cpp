#include "keed/heatmap.hpp"

#include <cmath>
#include <stdexcept>

namespace keed::heatmap {

void DecodeConfig::validate() const {
    if (lambda < 0.0 || lambda > 1.0)
        throw std::invalid_argument("DecodeConfig: lambda must be in [0,1]");
    if (!(sigma > 0.0)) throw std::invalid_argument("DecodeConfig: sigma must be > 0");
    for (const auto& ov : lambda_override) {
        if (ov && (*ov < 0.0 || *ov > 1.0))
            throw std::invalid_argument("DecodeConfig: lambda override must be in [0,1]");
    }
}

net::HeatmapSet make_target(const TargetSet& fiducials, int length, const DecodeConfig& cfg) {
    cfg.validate();
    if (length < 2) throw std::invalid_argument("make_target: length must be >= 2");
    net::HeatmapSet target({static_cast<std::size_t>(kNumKeypointKinds),
                            static_cast<std::size_t>(length)});
    const double denom = 2.0 * cfg.sigma * cfg.sigma;
    for (int k = 0; k < kNumKeypointKinds; ++k) {
        const FiducialTarget& f = fiducials[static_cast<std::size_t>(k)];
        if (!f.present) continue;
        if (f.resampled_index < 0 || f.resampled_index >= length)
            throw std::invalid_argument("make_target: fiducial index out of range");
        for (int j = 0; j < length; ++j) {
            const double d = static_cast<double>(j - f.resampled_index);
            target.at2(static_cast<std::size_t>(k), static_cast<std::size_t>(j)) =
                std::exp(-d * d / denom);
        }
    }
    return target;
}

ChannelPeak channel_peak(const net::HeatmapSet& heatmaps, int channel) {
    if (heatmaps.shape.size() != 2) throw std::invalid_argument("channel_peak: expected K x L");
    const int length = static_cast<int>(heatmaps.dim(1));
    ChannelPeak peak;
    peak.max = heatmaps.at2(static_cast<std::size_t>(channel), 0);
    for (int j = 1; j < length; ++j) {
        const double v = heatmaps.at2(static_cast<std::size_t>(channel),
                                      static_cast<std::size_t>(j));
        if (v > peak.max) {  // strict: ties keep the lowest index
            peak.max = v;
            peak.argmax = j;
        }
    }
    return peak;
}

std::array<KeypointCall, kNumKeypointKinds> decode_keypoints(const net::HeatmapSet& heatmaps,
                                                             const segmenter::BeatInterval& interval,
                                                             const DecodeConfig& cfg) {
    cfg.validate();
    if (heatmaps.shape.size() != 2 ||
        heatmaps.dim(0) != static_cast<std::size_t>(kNumKeypointKinds) ||
        heatmaps.dim(1) != interval.values.size())
        throw std::invalid_argument("decode_keypoints: heatmap shape mismatch");

    std::array<KeypointCall, kNumKeypointKinds> out{};
    for (KeypointKind kind : all_keypoint_kinds()) {
        const int k = static_cast<int>(kind);
        const ChannelPeak peak = channel_peak(heatmaps, k);
        KeypointCall call;
        call.confidence = peak.max;
        call.present = peak.max >= cfg.lambda_for(kind);
        call.location = segmenter::map_to_original(interval, peak.argmax);
        out[static_cast<std::size_t>(k)] = call;
    }
    return out;
}

}  // namespace keed::heatmap
