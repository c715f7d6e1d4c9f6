#pragma once

#include <cstdint>
#include <vector>

#include "keed/core.hpp"

namespace keed::qrs {

struct QrsConfig {
    double band_low = 5.0;             // Hz
    double band_high = 15.0;           // Hz
    double integration_window = 0.150; // seconds
    double refractory = 0.200;         // seconds
    double twave_window = 0.360;       // seconds
    bool searchback = true;

    void validate(double fs) const;
};

// Pan-Tompkins R-peak detection: zero-phase band-pass (cascaded biquads,
// filtered forward and backward), 5-point derivative, squaring, centered
// moving-window integration, then dual adaptive thresholds with search-back
// and T-wave slope rejection. Detections are refined to the local maximum
// of the band-passed signal within +/-0.05 s; the first and last 0.2 s are
// ineligible. Requires fs >= 100 Hz and at least 2*fs samples.
std::vector<std::int64_t> detect_rpeaks(const TimeSeriesRecord& record, const QrsConfig& cfg = {});

}  // namespace keed::qrs
