#include "doctest.h"

#include <stdexcept>

#include <random>

#include "keed/core.hpp"

using namespace keed;

TEST_CASE("keypoint kind ordinals are a bijection onto 0..5") {
    int seen[6] = {0};
    for (KeypointKind k : all_keypoint_kinds()) {
        const int ord = static_cast<int>(k);
        REQUIRE(ord >= 0);
        REQUIRE(ord < 6);
        ++seen[ord];
    }
    for (int c : seen) CHECK(c == 1);
}

TEST_CASE("keypoint kind names round-trip") {
    for (KeypointKind k : all_keypoint_kinds()) {
        const auto back = keypoint_kind_from_string(to_string(k));
        REQUIRE(back.has_value());
        CHECK(*back == k);
    }
    CHECK_FALSE(keypoint_kind_from_string("QPeak").has_value());
}

TEST_CASE("time series validation") {
    TimeSeriesRecord rec;
    rec.fs = 250.0;
    rec.samples = {0.0, 1.0};
    CHECK_NOTHROW(rec.validate());
    rec.fs = 0.0;
    CHECK_THROWS_AS(rec.validate(), std::invalid_argument);
    rec.fs = 250.0;
    rec.samples[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(rec.validate(), std::invalid_argument);
    rec.samples.clear();
    CHECK_THROWS_AS(rec.validate(), std::invalid_argument);
}

TEST_CASE("delineation result JSON round-trips losslessly") {
    std::mt19937_64 rng(17);
    auto u01 = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    DelineationResult result;
    result.record_id = "rec_x";
    result.fs = 360.0;
    for (int i = 0; i < 20; ++i) {
        IntervalDelineation iv;
        iv.r_start = 100 + 180 * i;
        iv.r_end = 100 + 180 * (i + 1);
        for (KeypointKind k : all_keypoint_kinds()) {
            KeypointCall call;
            call.present = u01() < 0.7;
            call.confidence = u01();
            call.location = call.present
                                ? iv.r_start + static_cast<std::int64_t>(u01() * 180.0)
                                : -1;
            iv.keypoints[static_cast<int>(k)] = call;
        }
        result.intervals.push_back(iv);
    }
    const DelineationResult back = delineation_from_json(to_json(result));
    CHECK(back == result);
}

TEST_CASE("delineation JSON uses the documented field names") {
    DelineationResult result;
    result.record_id = "r";
    result.fs = 250.0;
    result.intervals.push_back({});
    const std::string json = to_json(result);
    for (const char* key : {"record_id", "fs", "intervals", "r_start", "r_end", "keypoints",
                            "PPeak", "present", "location", "confidence"})
        CHECK(json.find(key) != std::string::npos);
}
