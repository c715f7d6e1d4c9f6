#pragma once

#include <array>
#include <optional>

#include "keed/core.hpp"
#include "keed/segmenter.hpp"
#include "keed/tensor.hpp"

namespace keed::heatmap {

// lambda is the presence threshold; sigma the target Gaussian width in
// resampled samples. lambda_override lets individual keypoint kinds use
// their own threshold.
struct DecodeConfig {
    double lambda = 0.4;
    double sigma = 3.0;
    std::array<std::optional<double>, kNumKeypointKinds> lambda_override{};

    double lambda_for(KeypointKind kind) const {
        const auto& ov = lambda_override[static_cast<int>(kind)];
        return ov ? *ov : lambda;
    }

    void validate() const;
};

// Ground-truth position of one keypoint kind in resampled coordinates.
struct FiducialTarget {
    bool present = false;
    int resampled_index = 0;
};

using TargetSet = std::array<FiducialTarget, kNumKeypointKinds>;

// K x L target: channel k is exp(-(j-c)^2 / (2 sigma^2)) around the
// present index (peak exactly 1.0), all zeros when absent.
net::HeatmapSet make_target(const TargetSet& fiducials, int length, const DecodeConfig& cfg);

struct ChannelPeak {
    int argmax = 0;     // ties broken toward the lowest index
    double max = 0.0;
};

ChannelPeak channel_peak(const net::HeatmapSet& heatmaps, int channel);

// Per kind: confidence = channel max, present iff confidence >= lambda,
// location = map_to_original(argmax).
std::array<KeypointCall, kNumKeypointKinds> decode_keypoints(const net::HeatmapSet& heatmaps,
                                                             const segmenter::BeatInterval& interval,
                                                             const DecodeConfig& cfg);

}  // namespace keed::heatmap
