#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace keed {

// A sampled single-lead ECG trace in physical units (typically mV).
struct TimeSeriesRecord {
    std::vector<double> samples;
    double fs = 0.0;  // sampling rate, Hz
    std::string record_id;
    std::string lead;

    // Throws std::invalid_argument when fs <= 0, the trace is empty, or a
    // sample is non-finite.
    void validate() const;
};

// The six keypoint kinds the delineator estimates. QRS fiducials are not
// part of this set: R peaks come from the detector stage.
enum class KeypointKind : int {
    POn = 0,
    PPeak = 1,
    POff = 2,
    TOn = 3,
    TPeak = 4,
    TOff = 5,
};

inline constexpr int kNumKeypointKinds = 6;

constexpr std::array<KeypointKind, kNumKeypointKinds> all_keypoint_kinds() {
    return {KeypointKind::POn,  KeypointKind::PPeak, KeypointKind::POff,
            KeypointKind::TOn,  KeypointKind::TPeak, KeypointKind::TOff};
}

const char* to_string(KeypointKind kind);
std::optional<KeypointKind> keypoint_kind_from_string(const std::string& name);

// One labeled fiducial in original-signal coordinates. When present is
// false, sample_index carries no meaning.
struct FiducialAnnotation {
    KeypointKind kind = KeypointKind::PPeak;
    std::int64_t sample_index = 0;
    bool present = false;
};

// Verdict for one keypoint kind within one R-R interval. location is an
// original-signal sample index and is only meaningful when present; -1 is
// used when no location was computed at all.
struct KeypointCall {
    bool present = false;
    std::int64_t location = -1;
    double confidence = 0.0;

    bool operator==(const KeypointCall&) const = default;
};

struct IntervalDelineation {
    std::int64_t r_start = 0;
    std::int64_t r_end = 0;
    std::array<KeypointCall, kNumKeypointKinds> keypoints{};

    bool operator==(const IntervalDelineation&) const = default;
};

struct DelineationResult {
    std::string record_id;
    double fs = 0.0;
    std::vector<IntervalDelineation> intervals;

    bool operator==(const DelineationResult&) const = default;
};

// JSON schema: {record_id, fs, intervals:[{r_start, r_end,
// keypoints:{PPeak:{present,location,confidence}, ...}}]}
std::string to_json(const DelineationResult& result);
DelineationResult delineation_from_json(const std::string& text);

}  // namespace keed
