#include "keed/core.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace keed {

void TimeSeriesRecord::validate() const {
    if (!(fs > 0.0)) throw std::invalid_argument("TimeSeriesRecord: fs must be > 0");
    if (samples.empty()) throw std::invalid_argument("TimeSeriesRecord: empty signal");
    for (double v : samples) {
        if (!std::isfinite(v)) throw std::invalid_argument("TimeSeriesRecord: non-finite sample");
    }
}

const char* to_string(KeypointKind kind) {
    switch (kind) {
        case KeypointKind::POn: return "POn";
        case KeypointKind::PPeak: return "PPeak";
        case KeypointKind::POff: return "POff";
        case KeypointKind::TOn: return "TOn";
        case KeypointKind::TPeak: return "TPeak";
        case KeypointKind::TOff: return "TOff";
    }
    return "?";
}

std::optional<KeypointKind> keypoint_kind_from_string(const std::string& name) {
    for (KeypointKind k : all_keypoint_kinds()) {
        if (name == to_string(k)) return k;
    }
    return std::nullopt;
}

std::string to_json(const DelineationResult& result) {
    nlohmann::json root;
    root["record_id"] = result.record_id;
    root["fs"] = result.fs;
    nlohmann::json intervals = nlohmann::json::array();
    for (const auto& iv : result.intervals) {
        nlohmann::json ji;
        ji["r_start"] = iv.r_start;
        ji["r_end"] = iv.r_end;
        nlohmann::json kp;
        for (KeypointKind k : all_keypoint_kinds()) {
            const KeypointCall& call = iv.keypoints[static_cast<int>(k)];
            kp[to_string(k)] = {{"present", call.present},
                                {"location", call.location},
                                {"confidence", call.confidence}};
        }
        ji["keypoints"] = std::move(kp);
        intervals.push_back(std::move(ji));
    }
    root["intervals"] = std::move(intervals);
    return root.dump(2);
}

DelineationResult delineation_from_json(const std::string& text) {
    nlohmann::json root = nlohmann::json::parse(text);
    DelineationResult result;
    result.record_id = root.at("record_id").get<std::string>();
    result.fs = root.at("fs").get<double>();
    for (const auto& ji : root.at("intervals")) {
        IntervalDelineation iv;
        iv.r_start = ji.at("r_start").get<std::int64_t>();
        iv.r_end = ji.at("r_end").get<std::int64_t>();
        const auto& kp = ji.at("keypoints");
        for (KeypointKind k : all_keypoint_kinds()) {
            const auto& jc = kp.at(to_string(k));
            KeypointCall call;
            call.present = jc.at("present").get<bool>();
            call.location = jc.at("location").get<std::int64_t>();
            call.confidence = jc.at("confidence").get<double>();
            iv.keypoints[static_cast<int>(k)] = call;
        }
        result.intervals.push_back(std::move(iv));
    }
    return result;
}

}  // namespace keed
