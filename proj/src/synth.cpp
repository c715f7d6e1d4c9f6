#include "keed/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace keed::synth {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTruncWidths = 10.0;   // bump support cut at 10 widths
constexpr double kFibAmpFrac = 0.12;    // fibrillatory amplitude vs P
}  // namespace

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

double normal01(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

void BeatTemplate::validate() const {
    for (const WaveSpec* w : {&p, &q, &r, &s, &t}) {
        if (!(w->width_s > 0.0)) throw std::invalid_argument("BeatTemplate: widths must be > 0");
    }
    const double ra = std::fabs(r.amplitude);
    if (!(ra > std::fabs(p.amplitude) && ra > std::fabs(q.amplitude) &&
          ra > std::fabs(s.amplitude) && ra > std::fabs(t.amplitude)))
        throw std::invalid_argument("BeatTemplate: R amplitude must dominate");
    if (!(p.center_frac < q.center_frac && q.center_frac < r.center_frac &&
          r.center_frac < s.center_frac && s.center_frac < t.center_frac))
        throw std::invalid_argument("BeatTemplate: wave centers must be ordered P<Q<R<S<T");
}

void GenConfig::validate() const {
    if (n_beats < 2) throw std::invalid_argument("gen_record: need >= 2 beats");
    if (fs < 100.0) throw std::invalid_argument("gen_record: fs must be >= 100 Hz");
    if (!(rr_mean > 0.2)) throw std::invalid_argument("gen_record: rr_mean too small");
    if (rr_jitter < 0.0 || rr_jitter >= 0.5)
        throw std::invalid_argument("gen_record: rr_jitter must be in [0, 0.5)");
    beat.validate();
    int prev_last = -1;
    for (const Episode& ep : p_dropout) {
        if (ep.first_beat < 0 || ep.last_beat >= n_beats || ep.first_beat > ep.last_beat)
            throw std::invalid_argument("gen_record: episode out of range");
        if (ep.first_beat <= prev_last)
            throw std::invalid_argument("gen_record: episodes must be sorted and disjoint");
        prev_last = ep.last_beat;
    }
}

std::vector<std::int64_t> SynthRecord::rpeaks() const {
    std::vector<std::int64_t> out;
    out.reserve(beats.size());
    for (const BeatTruth& b : beats) out.push_back(b.r);
    return out;
}

std::vector<FiducialAnnotation> SynthRecord::fiducials() const {
    std::vector<FiducialAnnotation> out;
    for (const BeatTruth& b : beats) {
        if (b.p) {
            out.push_back({KeypointKind::POn, b.p->onset, true});
            out.push_back({KeypointKind::PPeak, b.p->peak, true});
            out.push_back({KeypointKind::POff, b.p->offset, true});
        }
        if (b.t) {
            out.push_back({KeypointKind::TOn, b.t->onset, true});
            out.push_back({KeypointKind::TPeak, b.t->peak, true});
            out.push_back({KeypointKind::TOff, b.t->offset, true});
        }
    }
    std::sort(out.begin(), out.end(), [](const FiducialAnnotation& a, const FiducialAnnotation& b) {
        return a.sample_index < b.sample_index;
    });
    return out;
}

namespace {

void add_bump(std::vector<double>& signal, double fs, double center_s, double amp, double width_s) {
    const double lo = center_s - kTruncWidths * width_s;
    const double hi = center_s + kTruncWidths * width_s;
    std::int64_t i0 = static_cast<std::int64_t>(std::ceil(lo * fs));
    std::int64_t i1 = static_cast<std::int64_t>(std::floor(hi * fs));
    if (i0 < 0) i0 = 0;
    if (i1 >= static_cast<std::int64_t>(signal.size()))
        i1 = static_cast<std::int64_t>(signal.size()) - 1;
    const double denom = 2.0 * width_s * width_s;
    for (std::int64_t i = i0; i <= i1; ++i) {
        const double dt = i / fs - center_s;
        signal[static_cast<std::size_t>(i)] += amp * std::exp(-dt * dt / denom);
    }
}

struct FibComponent {
    double freq, amp, phase;
};

}  // namespace

SynthRecord gen_record(const GenConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);

    // Per-beat jittered R-R intervals. Beat i owns the interval between its
    // R and the next beat's R; wave offsets scale with the neighbouring
    // interval (previous one for P/Q, following one for S/T).
    std::vector<double> rr(static_cast<std::size_t>(cfg.n_beats));
    for (double& v : rr) v = cfg.rr_mean * (1.0 + cfg.rr_jitter * uniform(rng, -1.0, 1.0));

    const double lead_in = 0.6 * cfg.rr_mean;
    const double lead_out = 0.7 * cfg.rr_mean;
    std::vector<double> r_time(static_cast<std::size_t>(cfg.n_beats));
    r_time[0] = lead_in;
    for (int i = 1; i < cfg.n_beats; ++i)
        r_time[static_cast<std::size_t>(i)] = r_time[static_cast<std::size_t>(i - 1)] +
                                              rr[static_cast<std::size_t>(i - 1)];
    const double duration = r_time.back() + lead_out;
    const std::int64_t n_samples = static_cast<std::int64_t>(std::llround(duration * cfg.fs));

    std::vector<bool> p_absent(static_cast<std::size_t>(cfg.n_beats), false);
    for (const Episode& ep : cfg.p_dropout)
        for (int b = ep.first_beat; b <= ep.last_beat; ++b) p_absent[static_cast<std::size_t>(b)] = true;

    // Fibrillatory process: a fixed bank of low-frequency sinusoids, gated
    // onto the P region of each dropped beat with short cosine ramps.
    std::vector<FibComponent> fib;
    const double fib_total = kFibAmpFrac * std::fabs(cfg.beat.p.amplitude);
    for (double f : {4.6, 5.7, 6.9, 8.2}) {
        fib.push_back({f * uniform(rng, 0.9, 1.1), fib_total / 4.0, uniform(rng, 0.0, 2.0 * kPi)});
    }

    std::vector<double> signal(static_cast<std::size_t>(n_samples), 0.0);
    SynthRecord out;
    out.p_absent_episodes = cfg.p_dropout;
    const BeatTemplate& tpl = cfg.beat;

    for (int b = 0; b < cfg.n_beats; ++b) {
        const double t_r = r_time[static_cast<std::size_t>(b)];
        const double rr_prev = b > 0 ? rr[static_cast<std::size_t>(b - 1)] : rr[0];
        const double rr_next = rr[static_cast<std::size_t>(b)];

        BeatTruth truth;
        truth.r = std::llround(t_r * cfg.fs);

        auto place = [&](const WaveSpec& w) {
            const double scale = w.center_frac < 0.0 ? rr_prev : rr_next;
            return t_r + w.center_frac * scale;
        };
        auto wave_truth = [&](double center_s, double width_s) {
            WaveTruth wt;
            wt.peak = std::llround(center_s * cfg.fs);
            const std::int64_t half = std::llround(2.5 * width_s * cfg.fs);
            wt.onset = wt.peak - half;
            wt.offset = wt.peak + half;
            return wt;
        };

        add_bump(signal, cfg.fs, place(tpl.q), tpl.q.amplitude, tpl.q.width_s);
        add_bump(signal, cfg.fs, place(tpl.r), tpl.r.amplitude, tpl.r.width_s);
        add_bump(signal, cfg.fs, place(tpl.s), tpl.s.amplitude, tpl.s.width_s);

        const bool has_p = tpl.p_present && !p_absent[static_cast<std::size_t>(b)];
        if (has_p) {
            const double c = place(tpl.p);
            add_bump(signal, cfg.fs, c, tpl.p.amplitude, tpl.p.width_s);
            truth.p = wave_truth(c, tpl.p.width_s);
        } else if (tpl.p_present) {
            // Replace the P bump with fibrillatory activity across the P
            // region, faded in and out over 5% of the local interval.
            const double c = place(tpl.p);
            const double span = 6.0 * tpl.p.width_s;
            const double ramp = 0.05 * rr_prev;
            const std::int64_t i0 = std::max<std::int64_t>(
                0, static_cast<std::int64_t>(std::floor((c - span - ramp) * cfg.fs)));
            const std::int64_t i1 = std::min<std::int64_t>(
                n_samples - 1, static_cast<std::int64_t>(std::ceil((c + span + ramp) * cfg.fs)));
            for (std::int64_t i = i0; i <= i1; ++i) {
                const double t = i / cfg.fs;
                double env = 1.0;
                const double d_lo = t - (c - span - ramp);
                const double d_hi = (c + span + ramp) - t;
                if (d_lo < ramp) env = 0.5 - 0.5 * std::cos(kPi * d_lo / ramp);
                else if (d_hi < ramp) env = 0.5 - 0.5 * std::cos(kPi * d_hi / ramp);
                double v = 0.0;
                for (const FibComponent& fc : fib)
                    v += fc.amp * std::sin(2.0 * kPi * fc.freq * t + fc.phase);
                signal[static_cast<std::size_t>(i)] += env * v;
            }
        }

        if (tpl.t_present) {
            const double c = place(tpl.t);
            add_bump(signal, cfg.fs, c, tpl.t.amplitude, tpl.t.width_s);
            truth.t = wave_truth(c, tpl.t.width_s);
        }
        out.beats.push_back(truth);
    }

    if (cfg.noise_snr_db) {
        double power = 0.0;
        for (double v : signal) power += v * v;
        power /= static_cast<double>(signal.size());
        const double noise_std = std::sqrt(power / std::pow(10.0, *cfg.noise_snr_db / 10.0));
        for (double& v : signal) v += noise_std * normal01(rng);
    }

    out.record.samples = std::move(signal);
    out.record.fs = cfg.fs;
    out.record.record_id = cfg.record_id;
    out.record.lead = "synthI";
    out.record.validate();
    for (const BeatTruth& b : out.beats) {
        if (b.r < 0 || b.r >= static_cast<std::int64_t>(out.record.samples.size()))
            throw std::logic_error("gen_record: R truth outside record");
    }
    return out;
}

std::vector<TrainingPair> to_training_set(const std::vector<SynthRecord>& records, int length,
                                          const heatmap::DecodeConfig& cfg) {
    std::vector<TrainingPair> out;
    for (const SynthRecord& rec : records) {
        const auto rpeaks = rec.rpeaks();
        if (rpeaks.size() < 2) throw std::invalid_argument("to_training_set: record needs >= 2 beats");
        auto intervals = segmenter::split_intervals(rec.record, rpeaks, length);
        for (std::size_t i = 0; i < intervals.size(); ++i) {
            TrainingPair pair;
            pair.interval = std::move(intervals[i]);
            const BeatTruth& opening = rec.beats[i];      // T wave lives here
            const BeatTruth& closing = rec.beats[i + 1];  // P wave lives here
            auto set_kind = [&](KeypointKind kind, std::int64_t orig) {
                pair.truth[static_cast<std::size_t>(static_cast<int>(kind))] = {
                    true, segmenter::to_resampled(pair.interval, orig)};
            };
            if (closing.p) {
                set_kind(KeypointKind::POn, closing.p->onset);
                set_kind(KeypointKind::PPeak, closing.p->peak);
                set_kind(KeypointKind::POff, closing.p->offset);
            }
            if (opening.t) {
                set_kind(KeypointKind::TOn, opening.t->onset);
                set_kind(KeypointKind::TPeak, opening.t->peak);
                set_kind(KeypointKind::TOff, opening.t->offset);
            }
            pair.target = heatmap::make_target(pair.truth, length, cfg);
            out.push_back(std::move(pair));
        }
    }
    return out;
}

std::string to_csv(const SynthRecord& rec) {
    std::string out;
    out.reserve(rec.record.samples.size() * 20);
    char buf[40];
    for (double v : rec.record.samples) {
        std::snprintf(buf, sizeof(buf), "%.17g\n", v);
        out += buf;
    }
    return out;
}

std::string truth_json(const SynthRecord& rec) {
    nlohmann::json root;
    nlohmann::json beats = nlohmann::json::array();
    for (const BeatTruth& b : rec.beats) {
        nlohmann::json jb;
        jb["r"] = b.r;
        if (b.p)
            jb["p"] = {{"on", b.p->onset}, {"peak", b.p->peak}, {"off", b.p->offset}};
        else
            jb["p"] = nullptr;
        if (b.t)
            jb["t"] = {{"on", b.t->onset}, {"peak", b.t->peak}, {"off", b.t->offset}};
        else
            jb["t"] = nullptr;
        beats.push_back(std::move(jb));
    }
    root["beats"] = std::move(beats);
    return root.dump(2);
}

std::vector<BeatTruth> truth_from_json(const std::string& text) {
    nlohmann::json root = nlohmann::json::parse(text);
    std::vector<BeatTruth> out;
    for (const auto& jb : root.at("beats")) {
        BeatTruth b;
        b.r = jb.at("r").get<std::int64_t>();
        if (!jb.at("p").is_null()) {
            const auto& jp = jb.at("p");
            b.p = WaveTruth{jp.at("on").get<std::int64_t>(), jp.at("peak").get<std::int64_t>(),
                            jp.at("off").get<std::int64_t>()};
        }
        if (!jb.at("t").is_null()) {
            const auto& jt = jb.at("t");
            b.t = WaveTruth{jt.at("on").get<std::int64_t>(), jt.at("peak").get<std::int64_t>(),
                            jt.at("off").get<std::int64_t>()};
        }
        out.push_back(b);
    }
    return out;
}

}  // namespace keed::synth
