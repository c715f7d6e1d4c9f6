#include "keed/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace keed::baseline {

namespace {

// Quadratic-spline a trous pair.
constexpr double kLowpass[4] = {1.0 / 8.0, 3.0 / 8.0, 3.0 / 8.0, 1.0 / 8.0};
constexpr double kHighpass[2] = {2.0, -2.0};

// Whole-sample symmetric extension, repeated until the index lands inside.
std::size_t reflect(std::int64_t i, std::int64_t n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return static_cast<std::size_t>(i);
}

std::vector<double> dilated_conv(const std::vector<double>& x, const double* taps, int n_taps,
                                 std::int64_t spacing) {
    const std::int64_t n = static_cast<std::int64_t>(x.size());
    std::vector<double> y(x.size());
    for (std::int64_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int t = 0; t < n_taps; ++t) acc += taps[t] * x[reflect(i - t * spacing, n)];
        y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

std::vector<double> shift_left(const std::vector<double>& x, std::int64_t d) {
    const std::int64_t n = static_cast<std::int64_t>(x.size());
    std::vector<double> y(x.size());
    for (std::int64_t i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = x[reflect(i + d, n)];
    return y;
}

struct Cascade {
    std::vector<std::vector<double>> details;  // aligned, one per scale
    std::vector<std::vector<double>> approxs;  // aligned, one per scale
};

Cascade atrous_cascade(const std::vector<double>& signal, int n_scales) {
    if (n_scales < 1) throw std::invalid_argument("swt: n_scales must be >= 1");
    if (static_cast<std::int64_t>(signal.size()) <= (std::int64_t{1} << n_scales))
        throw std::invalid_argument("swt: signal too short for requested scales");
    Cascade out;
    std::vector<double> approx = signal;
    double h_delay = 0.0;  // accumulated low-pass group delay, in samples
    for (int s = 1; s <= n_scales; ++s) {
        const std::int64_t spacing = std::int64_t{1} << (s - 1);
        std::vector<double> detail = dilated_conv(approx, kHighpass, 2, spacing);
        approx = dilated_conv(approx, kLowpass, 4, spacing);
        // Causal filters delay by their centroid: 0.5*spacing for the
        // high-pass tap pair, 1.5*spacing per low-pass stage.
        const double d_delay = h_delay + 0.5 * static_cast<double>(spacing);
        h_delay += 1.5 * static_cast<double>(spacing);
        out.details.push_back(shift_left(detail, std::llround(d_delay)));
        out.approxs.push_back(shift_left(approx, std::llround(h_delay)));
    }
    return out;
}

struct Extremum {
    std::int64_t index;
    double value;
};

// Local maxima of |d| inside [lo, hi], kept with their sign.
std::vector<Extremum> modulus_maxima(const std::vector<double>& d, std::int64_t lo, std::int64_t hi) {
    std::vector<Extremum> out;
    for (std::int64_t i = std::max<std::int64_t>(lo, 1);
         i <= std::min<std::int64_t>(hi, static_cast<std::int64_t>(d.size()) - 2); ++i) {
        const double m = std::fabs(d[static_cast<std::size_t>(i)]);
        if (m >= std::fabs(d[static_cast<std::size_t>(i - 1)]) &&
            m > std::fabs(d[static_cast<std::size_t>(i + 1)]) && m > 0.0)
            out.push_back({i, d[static_cast<std::size_t>(i)]});
    }
    return out;
}

double window_rms(const std::vector<double>& d, std::int64_t lo, std::int64_t hi) {
    double acc = 0.0;
    std::int64_t cnt = 0;
    for (std::int64_t i = lo; i <= hi; ++i, ++cnt) {
        const double v = d[static_cast<std::size_t>(i)];
        acc += v * v;
    }
    return cnt > 0 ? std::sqrt(acc / static_cast<double>(cnt)) : 0.0;
}

struct SearchWindow {
    std::int64_t lo = 0, hi = -1;
    bool valid() const { return hi > lo; }
};

// Fractional window inside [a, b], with an absolute guard that keeps the
// search away from the QRS flanks at both R peaks.
SearchWindow make_window(std::int64_t a, std::int64_t b, double frac_lo, double frac_hi,
                         double fs) {
    const std::int64_t guard = std::llround(0.06 * fs);
    const double span = static_cast<double>(b - a);
    SearchWindow w;
    w.lo = std::max(a + guard, a + static_cast<std::int64_t>(std::llround(frac_lo * span)));
    w.hi = std::min(b - guard, a + static_cast<std::int64_t>(std::llround(frac_hi * span)));
    return w;
}

}  // namespace

void WtConfig::validate() const {
    if (n_scales < 4) throw std::invalid_argument("WtConfig: need n_scales >= 4");
    auto check_window = [](double lo, double hi) {
        if (!(0.0 < lo && lo < hi && hi < 1.0))
            throw std::invalid_argument("WtConfig: search windows must satisfy 0 < lo < hi < 1");
    };
    check_window(p_search_lo, p_search_hi);
    check_window(t_search_lo, t_search_hi);
    if (t_search_hi > p_search_lo)
        throw std::invalid_argument("WtConfig: P and T windows must not overlap");
    for (double f : {presence_factor, onset_factor, offset_factor}) {
        if (!(f > 0.0 && f < 1.0))
            throw std::invalid_argument("WtConfig: factors must lie in (0,1)");
    }
}

std::vector<std::vector<double>> swt_decompose(const std::vector<double>& signal, int n_scales) {
    return atrous_cascade(signal, n_scales).details;
}

std::vector<WaveDelineation> delineate_wave_dwt(const TimeSeriesRecord& record,
                                                const std::vector<std::int64_t>& rpeaks,
                                                WaveKind kind, const WtConfig& cfg) {
    record.validate();
    cfg.validate();
    if (rpeaks.size() < 2) throw std::invalid_argument("delineate_wave_dwt: needs >= 2 R peaks");

    const auto details = swt_decompose(record.samples, std::max(4, cfg.n_scales));
    const std::vector<double>& d4 = details[3];
    const double frac_lo = kind == WaveKind::P ? cfg.p_search_lo : cfg.t_search_lo;
    const double frac_hi = kind == WaveKind::P ? cfg.p_search_hi : cfg.t_search_hi;
    const std::int64_t max_sep = std::llround(0.30 * record.fs);

    std::vector<WaveDelineation> out;
    for (std::size_t k = 0; k + 1 < rpeaks.size(); ++k) {
        const std::int64_t a = rpeaks[k], b = rpeaks[k + 1];
        if (b <= a) throw std::invalid_argument("delineate_wave_dwt: R peaks not increasing");
        WaveDelineation res;
        const SearchWindow w = make_window(a, b, frac_lo, frac_hi, record.fs);
        if (!w.valid()) {
            out.push_back(res);
            continue;
        }

        const double eps = cfg.presence_factor * window_rms(d4, a, b);
        const auto maxima = modulus_maxima(d4, w.lo, w.hi);

        // Strongest opposite-sign pair, scored by its weaker side.
        double best_score = 0.0;
        Extremum m1{-1, 0.0}, m2{-1, 0.0};
        for (std::size_t i = 0; i < maxima.size(); ++i) {
            for (std::size_t j = i + 1; j < maxima.size(); ++j) {
                if (maxima[j].index - maxima[i].index > max_sep) break;
                if (maxima[i].value * maxima[j].value >= 0.0) continue;
                const double score = std::min(std::fabs(maxima[i].value), std::fabs(maxima[j].value));
                if (score > best_score) {
                    best_score = score;
                    m1 = maxima[i];
                    m2 = maxima[j];
                }
            }
        }
        if (m1.index < 0 || !(best_score > eps)) {
            out.push_back(res);
            continue;
        }

        // Peak: the steepest zero crossing between the pair.
        std::int64_t peak = (m1.index + m2.index) / 2;
        double best_step = -1.0;
        for (std::int64_t i = m1.index; i < m2.index; ++i) {
            const double v0 = d4[static_cast<std::size_t>(i)];
            const double v1 = d4[static_cast<std::size_t>(i + 1)];
            if (v0 == 0.0 || v0 * v1 < 0.0) {
                const double step = std::fabs(v1 - v0);
                if (step > best_step) {
                    best_step = step;
                    peak = std::fabs(v0) <= std::fabs(v1) ? i : i + 1;
                }
            }
        }

        // Onset: walk back from the first maximum until the detail falls
        // under onset_factor of it; offset symmetric from the second.
        std::int64_t onset = a;
        const double on_lim = cfg.onset_factor * std::fabs(m1.value);
        for (std::int64_t i = m1.index - 1; i >= a; --i) {
            if (std::fabs(d4[static_cast<std::size_t>(i)]) < on_lim) {
                onset = i;
                break;
            }
        }
        std::int64_t offset = b;
        const double off_lim = cfg.offset_factor * std::fabs(m2.value);
        for (std::int64_t i = m2.index + 1; i <= b; ++i) {
            if (std::fabs(d4[static_cast<std::size_t>(i)]) < off_lim) {
                offset = i;
                break;
            }
        }

        res.present = true;
        res.onset = std::min(onset, peak);
        res.peak = peak;
        res.offset = std::max(offset, peak);
        out.push_back(res);
    }
    return out;
}

std::vector<WaveDelineation> delineate_wave_peak(const TimeSeriesRecord& record,
                                                 const std::vector<std::int64_t>& rpeaks,
                                                 WaveKind kind, const WtConfig& cfg) {
    record.validate();
    cfg.validate();
    if (rpeaks.size() < 2) throw std::invalid_argument("delineate_wave_peak: needs >= 2 R peaks");

    // Band-limited view: the mean of the scale-5 and scale-6 band
    // components, (a4 - a6)/2. Low-pass enough to suppress sample noise,
    // high-pass enough to reject the T-wave tail and baseline drift.
    const Cascade cascade = atrous_cascade(record.samples, std::max(6, cfg.n_scales));
    std::vector<double> smooth(record.samples.size());
    for (std::size_t i = 0; i < smooth.size(); ++i)
        smooth[i] = 0.5 * (cascade.approxs[3][i] - cascade.approxs[5][i]);
    const double frac_lo = kind == WaveKind::P ? cfg.p_search_lo : cfg.t_search_lo;
    const double frac_hi = kind == WaveKind::P ? cfg.p_search_hi : cfg.t_search_hi;

    std::vector<WaveDelineation> out;
    for (std::size_t k = 0; k + 1 < rpeaks.size(); ++k) {
        const std::int64_t a = rpeaks[k], b = rpeaks[k + 1];
        if (b <= a) throw std::invalid_argument("delineate_wave_peak: R peaks not increasing");
        WaveDelineation res;
        const SearchWindow w = make_window(a, b, frac_lo, frac_hi, record.fs);
        if (!w.valid() || w.hi - w.lo < 4) {
            out.push_back(res);
            continue;
        }

        std::vector<double> win(smooth.begin() + w.lo, smooth.begin() + w.hi + 1);
        std::vector<double> sorted = win;
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
        const double median = sorted[sorted.size() / 2];

        // Interior extrema of the smoothed window only; a monotone window
        // yields none.
        std::int64_t ext = -1;
        double ext_dev = 0.0;
        for (std::int64_t i = 1; i + 1 < static_cast<std::int64_t>(win.size()); ++i) {
            const double v = win[static_cast<std::size_t>(i)];
            const double dl = v - win[static_cast<std::size_t>(i - 1)];
            const double dr = win[static_cast<std::size_t>(i + 1)] - v;
            if (dl * dr <= 0.0 && dl != 0.0) {
                const double dev = std::fabs(v - median);
                if (dev > ext_dev) {
                    ext_dev = dev;
                    ext = i;
                }
            }
        }
        if (ext < 0) {
            out.push_back(res);
            continue;
        }

        // Presence threshold against the raw window spread.
        double mean = 0.0;
        for (std::int64_t i = w.lo; i <= w.hi; ++i) mean += record.samples[static_cast<std::size_t>(i)];
        mean /= static_cast<double>(w.hi - w.lo + 1);
        double var = 0.0;
        for (std::int64_t i = w.lo; i <= w.hi; ++i) {
            const double d = record.samples[static_cast<std::size_t>(i)] - mean;
            var += d * d;
        }
        var /= static_cast<double>(w.hi - w.lo + 1);
        if (!(ext_dev > cfg.presence_factor * std::sqrt(var))) {
            out.push_back(res);
            continue;
        }

        // Flanking slope-sign changes around the extremum.
        std::int64_t onset = 0;
        for (std::int64_t i = ext - 1; i >= 1; --i) {
            const double dl = win[static_cast<std::size_t>(i)] - win[static_cast<std::size_t>(i - 1)];
            const double dr = win[static_cast<std::size_t>(i + 1)] - win[static_cast<std::size_t>(i)];
            if (dl * dr <= 0.0) {
                onset = i;
                break;
            }
        }
        std::int64_t offset = static_cast<std::int64_t>(win.size()) - 1;
        for (std::int64_t i = ext + 1; i + 1 < static_cast<std::int64_t>(win.size()); ++i) {
            const double dl = win[static_cast<std::size_t>(i)] - win[static_cast<std::size_t>(i - 1)];
            const double dr = win[static_cast<std::size_t>(i + 1)] - win[static_cast<std::size_t>(i)];
            if (dl * dr <= 0.0) {
                offset = i;
                break;
            }
        }

        res.present = true;
        res.onset = w.lo + onset;
        res.peak = w.lo + ext;
        res.offset = w.lo + offset;
        out.push_back(res);
    }
    return out;
}

DelineationResult assemble_result(const TimeSeriesRecord& record,
                                  const std::vector<std::int64_t>& rpeaks,
                                  const std::vector<WaveDelineation>& p,
                                  const std::vector<WaveDelineation>& t) {
    if (rpeaks.size() < 2 || p.size() != rpeaks.size() - 1 || t.size() != rpeaks.size() - 1)
        throw std::invalid_argument("assemble_result: per-interval lists misaligned");
    DelineationResult out;
    out.record_id = record.record_id;
    out.fs = record.fs;
    for (std::size_t i = 0; i + 1 < rpeaks.size(); ++i) {
        IntervalDelineation iv;
        iv.r_start = rpeaks[i];
        iv.r_end = rpeaks[i + 1];
        auto fill = [&](KeypointKind kind, bool present, std::int64_t loc) {
            iv.keypoints[static_cast<std::size_t>(static_cast<int>(kind))] =
                KeypointCall{present, present ? loc : -1, present ? 1.0 : 0.0};
        };
        fill(KeypointKind::POn, p[i].present, p[i].onset);
        fill(KeypointKind::PPeak, p[i].present, p[i].peak);
        fill(KeypointKind::POff, p[i].present, p[i].offset);
        fill(KeypointKind::TOn, t[i].present, t[i].onset);
        fill(KeypointKind::TPeak, t[i].present, t[i].peak);
        fill(KeypointKind::TOff, t[i].present, t[i].offset);
        out.intervals.push_back(iv);
    }
    return out;
}

}  // namespace keed::baseline
