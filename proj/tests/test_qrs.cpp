#include "doctest.h"

#include <cmath>

#include "keed/eval.hpp"
#include "keed/qrs.hpp"
#include "keed/synth.hpp"

using namespace keed;

namespace {

struct DetectorScore {
    double recall = 0.0;
    double precision = 0.0;
    double max_err_s = 0.0;
};

DetectorScore score(const synth::SynthRecord& rec, double tol_s) {
    const auto truth = rec.rpeaks();
    const auto det = qrs::detect_rpeaks(rec.record, {});
    const auto matched = eval::match_peaks(
        truth, det, static_cast<std::int64_t>(tol_s * rec.record.fs));
    DetectorScore s;
    int hits = 0;
    for (std::size_t i = 0; i < det.size(); ++i) {
        if (matched[i] < 0) continue;
        ++hits;
        s.max_err_s = std::max(
            s.max_err_s,
            std::fabs(static_cast<double>(det[i] - truth[static_cast<std::size_t>(matched[i])])) /
                rec.record.fs);
    }
    s.recall = static_cast<double>(hits) / static_cast<double>(truth.size());
    s.precision = det.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(det.size());
    return s;
}

}  // namespace

TEST_CASE("all-zero record yields no peaks") {
    TimeSeriesRecord rec;
    rec.fs = 250.0;
    rec.record_id = "flat";
    rec.samples.assign(2500, 0.0);
    CHECK(qrs::detect_rpeaks(rec, {}).empty());
}

TEST_CASE("input validation") {
    TimeSeriesRecord rec;
    rec.fs = 50.0;
    rec.samples.assign(500, 0.0);
    CHECK_THROWS(qrs::detect_rpeaks(rec, {}));  // fs too low
    rec.fs = 250.0;
    rec.samples.assign(100, 0.0);
    CHECK_THROWS(qrs::detect_rpeaks(rec, {}));  // too short
}

TEST_CASE("clean synthetic record: near-perfect detection") {
    synth::GenConfig cfg;
    cfg.n_beats = 100;
    cfg.seed = 21;
    const auto rec = synth::gen_record(cfg);
    const DetectorScore s = score(rec, 0.01);
    CHECK(s.recall >= 0.99);
    CHECK(s.precision >= 0.99);
    CHECK(s.max_err_s <= 0.01);
}

TEST_CASE("10 dB record: robust detection") {
    synth::GenConfig cfg;
    cfg.n_beats = 100;
    cfg.seed = 22;
    cfg.noise_snr_db = 10.0;
    const auto rec = synth::gen_record(cfg);
    const DetectorScore s = score(rec, 0.02);
    CHECK(s.recall >= 0.95);
    CHECK(s.precision >= 0.95);
    CHECK(s.max_err_s <= 0.02);
}

TEST_CASE("output is strictly increasing with the refractory gap enforced") {
    synth::GenConfig cfg;
    cfg.n_beats = 60;
    cfg.seed = 23;
    cfg.noise_snr_db = 12.0;
    const auto rec = synth::gen_record(cfg);
    qrs::QrsConfig qc;
    const auto det = qrs::detect_rpeaks(rec.record, qc);
    REQUIRE(det.size() >= 2);
    const auto min_gap = static_cast<std::int64_t>(qc.refractory * rec.record.fs);
    for (std::size_t i = 1; i < det.size(); ++i) CHECK(det[i] - det[i - 1] >= min_gap);
}

TEST_CASE("amplitude-scale invariance and determinism") {
    synth::GenConfig cfg;
    cfg.n_beats = 40;
    cfg.seed = 24;
    cfg.noise_snr_db = 15.0;
    const auto rec = synth::gen_record(cfg);
    const auto base = qrs::detect_rpeaks(rec.record, {});
    CHECK(qrs::detect_rpeaks(rec.record, {}) == base);  // determinism

    for (double c : {0.031, 4.2, 1750.0}) {
        TimeSeriesRecord scaled = rec.record;
        for (double& v : scaled.samples) v *= c;
        CHECK(qrs::detect_rpeaks(scaled, {}) == base);
    }
}
