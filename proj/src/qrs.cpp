#include "keed/qrs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace keed::qrs {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Biquad {
    double b0, b1, b2, a1, a2;  // normalized, a0 = 1
};

// RBJ cookbook sections, Butterworth Q = 1/sqrt(2).
Biquad design_lowpass(double fc, double fs) {
    const double w0 = 2.0 * kPi * fc / fs;
    const double alpha = std::sin(w0) / std::sqrt(2.0);
    const double cw = std::cos(w0);
    const double a0 = 1.0 + alpha;
    return {(1.0 - cw) / 2.0 / a0, (1.0 - cw) / a0, (1.0 - cw) / 2.0 / a0,
            -2.0 * cw / a0, (1.0 - alpha) / a0};
}

Biquad design_highpass(double fc, double fs) {
    const double w0 = 2.0 * kPi * fc / fs;
    const double alpha = std::sin(w0) / std::sqrt(2.0);
    const double cw = std::cos(w0);
    const double a0 = 1.0 + alpha;
    return {(1.0 + cw) / 2.0 / a0, -(1.0 + cw) / a0, (1.0 + cw) / 2.0 / a0,
            -2.0 * cw / a0, (1.0 - alpha) / a0};
}

void filter_forward(std::vector<double>& x, const Biquad& f) {
    double z1 = 0.0, z2 = 0.0;  // direct form II transposed
    for (double& v : x) {
        const double in = v;
        const double out = f.b0 * in + z1;
        z1 = f.b1 * in - f.a1 * out + z2;
        z2 = f.b2 * in - f.a2 * out;
        v = out;
    }
}

// Forward-backward pass for zero phase, so detected peaks stay aligned
// with the underlying waves.
std::vector<double> filtfilt(std::vector<double> x, const std::vector<Biquad>& cascade) {
    for (const Biquad& f : cascade) filter_forward(x, f);
    std::reverse(x.begin(), x.end());
    for (const Biquad& f : cascade) filter_forward(x, f);
    std::reverse(x.begin(), x.end());
    return x;
}

}  // namespace

void QrsConfig::validate(double fs) const {
    if (!(0.0 < band_low && band_low < band_high && band_high < fs / 2.0))
        throw std::invalid_argument("QrsConfig: need 0 < band_low < band_high < fs/2");
    if (!(integration_window > 0.0 && refractory > 0.0 && twave_window > 0.0))
        throw std::invalid_argument("QrsConfig: windows must be > 0");
}

std::vector<std::int64_t> detect_rpeaks(const TimeSeriesRecord& record, const QrsConfig& cfg) {
    record.validate();
    const double fs = record.fs;
    if (fs < 100.0) throw std::invalid_argument("detect_rpeaks: fs must be >= 100 Hz");
    const std::int64_t n = static_cast<std::int64_t>(record.samples.size());
    if (n < static_cast<std::int64_t>(2.0 * fs))
        throw std::invalid_argument("detect_rpeaks: record shorter than 2 s");
    cfg.validate(fs);

    // Band-pass -> derivative -> square -> moving integration.
    const std::vector<double> bp =
        filtfilt(record.samples, {design_highpass(cfg.band_low, fs), design_lowpass(cfg.band_high, fs)});

    std::vector<double> deriv(static_cast<std::size_t>(n), 0.0);
    for (std::int64_t i = 2; i < n - 2; ++i) {
        deriv[static_cast<std::size_t>(i)] =
            fs / 8.0 *
            (bp[static_cast<std::size_t>(i + 2)] + 2.0 * bp[static_cast<std::size_t>(i + 1)] -
             2.0 * bp[static_cast<std::size_t>(i - 1)] - bp[static_cast<std::size_t>(i - 2)]);
    }

    std::vector<double> integ(static_cast<std::size_t>(n), 0.0);
    {
        std::int64_t win = std::llround(cfg.integration_window * fs);
        if (win < 1) win = 1;
        if (win % 2 == 0) ++win;  // centered window
        const std::int64_t half = win / 2;
        double acc = 0.0;
        for (std::int64_t i = 0; i < std::min(win, n); ++i)
            acc += deriv[static_cast<std::size_t>(i)] * deriv[static_cast<std::size_t>(i)];
        for (std::int64_t i = 0; i < n; ++i) {
            const std::int64_t lo = i - half, hi = i + half;
            if (i > 0) {
                if (hi < n) {
                    const double d = deriv[static_cast<std::size_t>(hi)];
                    acc += d * d;
                }
                if (lo - 1 >= 0) {
                    const double d = deriv[static_cast<std::size_t>(lo - 1)];
                    acc -= d * d;
                }
            }
            const std::int64_t cnt = std::min(hi, n - 1) - std::max<std::int64_t>(lo, 0) + 1;
            integ[static_cast<std::size_t>(i)] = acc / static_cast<double>(cnt);
        }
    }

    // Candidate peaks: local maxima of the integrated signal.
    std::vector<std::int64_t> cand;
    for (std::int64_t i = 1; i + 1 < n; ++i) {
        const double v = integ[static_cast<std::size_t>(i)];
        if (v > integ[static_cast<std::size_t>(i - 1)] && v >= integ[static_cast<std::size_t>(i + 1)])
            cand.push_back(i);
    }

    // Threshold initialization from the first 2 seconds.
    const std::int64_t init_len = std::min<std::int64_t>(n, static_cast<std::int64_t>(2.0 * fs));
    double spk = 0.0, npk = 0.0;
    for (std::int64_t i = 0; i < init_len; ++i) {
        spk = std::max(spk, integ[static_cast<std::size_t>(i)]);
        npk += integ[static_cast<std::size_t>(i)];
    }
    npk /= static_cast<double>(init_len);
    double threshold = npk + 0.25 * (spk - npk);

    const std::int64_t refr = std::llround(cfg.refractory * fs);
    const std::int64_t tw = std::llround(cfg.twave_window * fs);
    const std::int64_t slope_win = std::llround(0.075 * fs);

    auto max_slope_near = [&](std::int64_t i) {
        double m = 0.0;
        for (std::int64_t j = std::max<std::int64_t>(0, i - slope_win);
             j <= std::min(n - 1, i + slope_win); ++j)
            m = std::max(m, std::fabs(deriv[static_cast<std::size_t>(j)]));
        return m;
    };

    std::vector<std::int64_t> accepted;  // integrator-stage indices
    std::deque<double> rr_hist;
    double last_slope = 0.0;

    auto accept = [&](std::int64_t i, double v, bool from_searchback) {
        if (!accepted.empty()) {
            const double rr = static_cast<double>(i - accepted.back());
            rr_hist.push_back(rr);
            if (rr_hist.size() > 8) rr_hist.pop_front();
        }
        spk = from_searchback ? 0.25 * v + 0.75 * spk : 0.125 * v + 0.875 * spk;
        threshold = npk + 0.25 * (spk - npk);
        last_slope = max_slope_near(i);
        accepted.push_back(i);
    };

    std::size_t next_cand = 0;
    for (std::size_t ci = 0; ci < cand.size(); ++ci) {
        const std::int64_t i = cand[ci];
        const double v = integ[static_cast<std::size_t>(i)];

        // Search-back: no qualifying peak for 1.66x the running RR average.
        if (cfg.searchback && !accepted.empty() && rr_hist.size() >= 2) {
            const double rr_avg = std::accumulate(rr_hist.begin(), rr_hist.end(), 0.0) /
                                  static_cast<double>(rr_hist.size());
            if (static_cast<double>(i - accepted.back()) > 1.66 * rr_avg) {
                std::int64_t best = -1;
                double best_v = 0.5 * threshold;
                for (std::size_t cj = next_cand; cj < ci; ++cj) {
                    const std::int64_t j = cand[cj];
                    if (j <= accepted.back() + refr || j >= i) continue;
                    const double vj = integ[static_cast<std::size_t>(j)];
                    if (vj > best_v) {
                        best_v = vj;
                        best = j;
                    }
                }
                if (best >= 0) accept(best, best_v, true);
            }
        }

        if (!accepted.empty()) {
            const std::int64_t since = i - accepted.back();
            if (since < refr) {
                // Same QRS complex: track the taller crest of the
                // integrated bump instead of its first ripple.
                if (v > integ[static_cast<std::size_t>(accepted.back())]) {
                    const std::int64_t old = accepted.back();
                    accepted.back() = i;
                    if (!rr_hist.empty()) rr_hist.back() += static_cast<double>(i - old);
                    spk = 0.125 * v + 0.875 * spk;
                    threshold = npk + 0.25 * (spk - npk);
                    last_slope = max_slope_near(i);
                }
                continue;
            }
            if (since < tw && max_slope_near(i) < 0.5 * last_slope) {
                npk = 0.125 * v + 0.875 * npk;  // T wave
                threshold = npk + 0.25 * (spk - npk);
                continue;
            }
        }

        if (v > threshold) {
            accept(i, v, false);
            next_cand = ci + 1;
        } else {
            npk = 0.125 * v + 0.875 * npk;
            threshold = npk + 0.25 * (spk - npk);
        }
    }

    // Refine to the band-passed signal's local maximum, then apply edge and
    // spacing rules.
    const std::int64_t refine_win = std::llround(0.05 * fs);
    const std::int64_t edge = std::llround(0.2 * fs);
    std::vector<std::int64_t> peaks;
    for (std::int64_t i : accepted) {
        std::int64_t best = i;
        for (std::int64_t j = std::max<std::int64_t>(0, i - refine_win);
             j <= std::min(n - 1, i + refine_win); ++j) {
            if (bp[static_cast<std::size_t>(j)] > bp[static_cast<std::size_t>(best)]) best = j;
        }
        if (best < edge || best >= n - edge) continue;
        peaks.push_back(best);
    }
    std::sort(peaks.begin(), peaks.end());
    std::vector<std::int64_t> out;
    for (std::int64_t p : peaks) {
        if (!out.empty()) {
            if (p == out.back()) continue;
            if (p - out.back() < refr) {
                if (bp[static_cast<std::size_t>(p)] > bp[static_cast<std::size_t>(out.back())])
                    out.back() = p;
                continue;
            }
        }
        out.push_back(p);
    }
    return out;
}

}  // namespace keed::qrs
