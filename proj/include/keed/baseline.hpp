#pragma once

#include <cstdint>
#include <vector>

#include "keed/core.hpp"

namespace keed::baseline {

enum class WaveKind { P, T };

struct WtConfig {
    int n_scales = 5;
    // Search windows as fractions of the R-R interval: P late (before the
    // closing R), T early (after the opening R).
    double p_search_lo = 0.55, p_search_hi = 0.95;
    double t_search_lo = 0.05, t_search_hi = 0.55;
    double presence_factor = 0.25;  // epsilon_f, vs interval detail RMS
    double onset_factor = 0.05;
    double offset_factor = 0.10;

    void validate() const;
};

// Undecimated a trous decomposition with the quadratic-spline filter pair
// (low-pass [1,3,3,1]/8, high-pass [2,-2]); at scale s the filter taps are
// spaced 2^(s-1) samples apart. Symmetric boundary extension; the filter
// cascade's group delay is compensated per scale, so each detail vector is
// aligned with the input and has its length. Requires length > 2^n_scales.
std::vector<std::vector<double>> swt_decompose(const std::vector<double>& signal, int n_scales);

struct WaveDelineation {
    bool present = false;
    std::int64_t onset = -1;
    std::int64_t peak = -1;
    std::int64_t offset = -1;
};

// Modulus-maxima delineation at scale 4: inside the wave's fractional
// search window, the strongest opposite-sign maxima pair marks the wave;
// the zero crossing between the pair is the peak; onset/offset are where
// |detail| first falls below onset/offset_factor times the flanking
// maximum. Presence requires both maxima above
// presence_factor * RMS(scale-4 detail over the full R-R interval).
std::vector<WaveDelineation> delineate_wave_dwt(const TimeSeriesRecord& record,
                                                const std::vector<std::int64_t>& rpeaks,
                                                WaveKind kind, const WtConfig& cfg = {});

// Simple baseline: extremum of a band-limited a trous view of the signal
// inside the search window; present when the extremum departs from the
// smoothed window median by more than presence_factor * std of the raw
// window; onset/offset at the nearest flanking slope-sign changes.
std::vector<WaveDelineation> delineate_wave_peak(const TimeSeriesRecord& record,
                                                 const std::vector<std::int64_t>& rpeaks,
                                                 WaveKind kind, const WtConfig& cfg = {});

// Assembles P and T delineations of one method into the shared result
// schema (confidence is 1 when present, 0 otherwise).
DelineationResult assemble_result(const TimeSeriesRecord& record,
                                  const std::vector<std::int64_t>& rpeaks,
                                  const std::vector<WaveDelineation>& p,
                                  const std::vector<WaveDelineation>& t);

}  // namespace keed::baseline
