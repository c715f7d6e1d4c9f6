// Acceptance suite: one pass/fail line per criterion, exit code = number
// of failed criteria. Heavy stages (model training) run once and feed the
// later criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "keed/baseline.hpp"
#include "keed/eval.hpp"
#include "keed/heatmap.hpp"
#include "keed/io.hpp"
#include "keed/net.hpp"
#include "keed/qrs.hpp"
#include "keed/synth.hpp"
#include "keed/train.hpp"

using namespace keed;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

int g_failed = 0;

void report(int criterion, bool pass, const std::string& what, const std::string& detail) {
    std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, what.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failed;
}

void report_error(int criterion, const std::string& what, const std::string& err) {
    report(criterion, false, what, "exception: " + err);
}

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

double u01(std::mt19937_64& rng) { return synth::uniform01(rng); }

// ---- independent codec oracles (written against the format definition,
// ---- not the implementation) --------------------------------------------

std::vector<std::uint8_t> encode212(const std::vector<int>& samples) {
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i < samples.size(); i += 2) {
        const int a = samples[i] & 0xFFF;
        const int b = (i + 1 < samples.size() ? samples[i + 1] : 0) & 0xFFF;
        out.push_back(static_cast<std::uint8_t>(a & 0xFF));
        out.push_back(static_cast<std::uint8_t>(((a >> 8) & 0x0F) | (((b >> 8) & 0x0F) << 4)));
        out.push_back(static_cast<std::uint8_t>(b & 0xFF));
    }
    return out;
}

void put_word(std::vector<std::uint8_t>& out, int w) {
    out.push_back(static_cast<std::uint8_t>(w & 0xFF));
    out.push_back(static_cast<std::uint8_t>((w >> 8) & 0xFF));
}

std::vector<std::uint8_t> encode_annotations(const std::vector<io::WfdbAnnotation>& anns) {
    std::vector<std::uint8_t> out;
    std::int64_t time = 0;
    for (const io::WfdbAnnotation& ann : anns) {
        std::int64_t delta = ann.sample_index - time;
        if (delta > 1023) {
            put_word(out, 59 << 10);
            const auto jump = static_cast<std::uint32_t>(static_cast<std::int32_t>(delta));
            put_word(out, static_cast<int>((jump >> 16) & 0xFFFF));
            put_word(out, static_cast<int>(jump & 0xFFFF));
            delta = 0;
        }
        put_word(out, (ann.type_code << 10) | static_cast<int>(delta));
        time = ann.sample_index;
    }
    put_word(out, 0);
    return out;
}

// ---- shared synthetic datasets -------------------------------------------

synth::SynthRecord make_record(int beats, std::uint64_t seed, std::optional<double> snr,
                               double dropout_frac) {
    synth::GenConfig cfg;
    cfg.n_beats = beats;
    cfg.seed = seed;
    cfg.noise_snr_db = snr;
    cfg.record_id = "acc_" + std::to_string(seed);
    if (dropout_frac > 0.0) {
        const int len = std::max(1, static_cast<int>(std::llround(dropout_frac * beats)));
        std::mt19937_64 rng(seed ^ 0x5151ULL);
        const int start =
            1 + static_cast<int>(rng() % static_cast<std::uint64_t>(std::max(1, beats - len - 1)));
        cfg.p_dropout = {{start, start + len - 1}};
    }
    return synth::gen_record(cfg);
}

struct ModelEval {
    eval::ConfusionCounts counts;
    std::optional<double> mean_resampled_err;
    std::vector<double> confidences;  // PPeak channel max per interval
    std::vector<bool> truth;
};

ModelEval eval_model(const net::Parameters& params, const net::ModelConfig& cfg,
                     const std::vector<synth::TrainingPair>& pairs, double lambda) {
    ModelEval out;
    const int k_p = static_cast<int>(KeypointKind::PPeak);
    std::vector<bool> pred;
    double err_sum = 0.0;
    std::int64_t err_n = 0;
    const std::size_t batch_size = 64;
    for (std::size_t lo = 0; lo < pairs.size(); lo += batch_size) {
        const std::size_t hi = std::min(pairs.size(), lo + batch_size);
        net::Tensor batch({hi - lo, static_cast<std::size_t>(cfg.length)});
        for (std::size_t i = lo; i < hi; ++i)
            std::copy(pairs[i].interval.values.begin(), pairs[i].interval.values.end(),
                      batch.v.begin() + static_cast<std::ptrdiff_t>((i - lo) * cfg.length));
        const net::Tensor y = net::model_forward(params, cfg, batch);
        for (std::size_t i = lo; i < hi; ++i) {
            const auto maps = net::slice_heatmaps(y, i - lo);
            const auto peak = heatmap::channel_peak(maps, k_p);
            const bool truth_present = pairs[i].truth[static_cast<std::size_t>(k_p)].present;
            const bool pred_present = peak.max >= lambda;
            out.confidences.push_back(peak.max);
            out.truth.push_back(truth_present);
            pred.push_back(pred_present);
            if (truth_present && pred_present) {
                err_sum += std::abs(peak.argmax -
                                    pairs[i].truth[static_cast<std::size_t>(k_p)].resampled_index);
                ++err_n;
            }
        }
    }
    out.counts = eval::confusion(out.truth, pred);
    if (err_n > 0) out.mean_resampled_err = err_sum / static_cast<double>(err_n);
    return out;
}

eval::ConfusionCounts eval_dwt(const std::vector<synth::SynthRecord>& records) {
    std::vector<bool> truth, pred;
    for (const synth::SynthRecord& rec : records) {
        const auto rpeaks = rec.rpeaks();
        const auto del =
            baseline::delineate_wave_dwt(rec.record, rpeaks, baseline::WaveKind::P, {});
        for (std::size_t i = 0; i < del.size(); ++i) {
            truth.push_back(rec.beats[i + 1].p.has_value());
            pred.push_back(del[i].present);
        }
    }
    return eval::confusion(truth, pred);
}

std::string fmt(const char* f, double v) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

}  // namespace

int main() {
    const auto suite_start = clock_type::now();

    // ---- criterion 1: gradient correctness --------------------------------
    try {
        const auto t0 = clock_type::now();
        net::ModelConfig cfg;
        cfg.width = 4;
        cfg.depth = 2;
        cfg.n_blocks = 1;
        cfg.length = 32;
        cfg.keypoints = 2;
        const net::Parameters params = net::init_parameters(cfg, 1234);
        std::mt19937_64 rng(1234 * 31 + 5);
        net::Tensor batch({3, 32});
        for (double& v : batch.v) v = 2.0 * u01(rng) - 1.0;
        net::Tensor target({3, 2, 32});
        for (double& v : target.v) v = u01(rng) < 0.3 ? 1.0 : 0.0;

        const net::BackwardResult res = net::backward(params, cfg, batch, target);
        const double h = 1e-4;
        const int n_samples = 250;
        double worst = 0.0;
        for (int k = 0; k < n_samples; ++k) {
            const std::size_t pi = rng() % params.size();
            const std::size_t ei = rng() % params.tensors[pi].numel();
            net::Parameters probe = params;
            probe.tensors[pi].v[ei] += h;
            const double lp = net::bce_loss(net::model_forward(probe, cfg, batch), target);
            probe.tensors[pi].v[ei] -= 2.0 * h;
            const double lm = net::bce_loss(net::model_forward(probe, cfg, batch), target);
            const double fd = (lp - lm) / (2.0 * h);
            const double ad = res.grads.tensors[pi].v[ei];
            // floor in the denominator: parameters whose true gradient is 0
            // (a conv bias feeding a channel norm) leave only rounding noise
            // in the difference quotient
            worst = std::max(worst,
                             std::fabs(fd - ad) / std::max(1e-6, std::fabs(fd) + std::fabs(ad)));
        }
        const double dt = seconds_since(t0);
        report(1, worst < 1e-4 && dt < 60.0, "reverse-mode gradients match central differences",
               fmt("worst rel err %.3e", worst) + " over 250 params, " + fmt("%.1f s", dt));
    } catch (const std::exception& e) {
        report_error(1, "reverse-mode gradients match central differences", e.what());
    }

    // ---- criterion 2: codec exactness --------------------------------------
    try {
        std::mt19937_64 rng(20816);
        bool ok212 = true;
        for (int trial = 0; trial < 10000 && ok212; ++trial) {
            const std::size_t n = 1 + rng() % 64;
            std::vector<int> samples;
            for (std::size_t i = 0; i < n; ++i)
                samples.push_back(static_cast<int>(rng() % 4096) - 2048);
            ok212 =
                io::decode_format212(encode212(samples), static_cast<std::int64_t>(n)) == samples;
        }
        bool ok_ann = true;
        for (int trial = 0; trial < 10000 && ok_ann; ++trial) {
            std::vector<io::WfdbAnnotation> anns;
            std::int64_t t = 0;
            const std::size_t n = 1 + rng() % 24;
            for (std::size_t i = 0; i < n; ++i) {
                t += 1 + static_cast<std::int64_t>(rng() % 4000);
                anns.push_back({t, 1 + static_cast<int>(rng() % 40), ""});
            }
            ok_ann = io::read_wfdb_annotations(encode_annotations(anns)) == anns;
        }
        net::ModelConfig wcfg;
        wcfg.width = 8;
        wcfg.depth = 2;
        wcfg.n_blocks = 1;
        wcfg.length = 64;
        const net::Parameters wp = net::init_parameters(wcfg, 31337);
        const auto bytes = net::save_weights(wp, wcfg);
        const auto [loaded, lcfg] = net::load_weights(bytes);
        const bool ok_weights =
            loaded.tensors == wp.tensors && net::save_weights(loaded, lcfg) == bytes;
        report(2, ok212 && ok_ann && ok_weights, "codecs are bit-exact",
               std::string("10000 fuzzed 212 cases: ") + (ok212 ? "ok" : "FAIL") +
                   ", 10000 fuzzed annotation cases: " + (ok_ann ? "ok" : "FAIL") +
                   ", weight container: " + (ok_weights ? "bitwise equal" : "FAIL"));
    } catch (const std::exception& e) {
        report_error(2, "codecs are bit-exact", e.what());
    }

    // ---- criterion 3: detector oracle ---------------------------------------
    try {
        struct Score {
            double recall, precision, max_err;
        };
        auto score = [](const synth::SynthRecord& rec, double tol_s) {
            const auto truth = rec.rpeaks();
            const auto det = qrs::detect_rpeaks(rec.record, {});
            const auto matched =
                eval::match_peaks(truth, det, static_cast<std::int64_t>(tol_s * rec.record.fs));
            int hits = 0;
            double max_err = 0.0;
            for (std::size_t i = 0; i < det.size(); ++i) {
                if (matched[i] < 0) continue;
                ++hits;
                max_err = std::max(
                    max_err,
                    std::fabs(static_cast<double>(
                        det[i] - truth[static_cast<std::size_t>(matched[i])])) /
                        rec.record.fs);
            }
            return Score{
                static_cast<double>(hits) / static_cast<double>(truth.size()),
                det.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(det.size()),
                max_err};
        };
        const Score noisy = score(make_record(100, 42, 10.0, 0.0), 0.02);
        const Score clean = score(make_record(100, 2, std::nullopt, 0.0), 0.01);
        const bool pass = noisy.recall >= 0.95 && noisy.precision >= 0.95 &&
                          noisy.max_err <= 0.02 && clean.recall >= 0.99 &&
                          clean.precision >= 0.99 && clean.max_err <= 0.01;
        report(3, pass, "Pan-Tompkins matches the generator truth",
               fmt("10 dB: recall %.3f", noisy.recall) + fmt(" precision %.3f", noisy.precision) +
                   fmt(" err %.4f s", noisy.max_err) + fmt("; clean: recall %.3f", clean.recall) +
                   fmt(" precision %.3f", clean.precision) + fmt(" err %.4f s", clean.max_err));
    } catch (const std::exception& e) {
        report_error(3, "Pan-Tompkins matches the generator truth", e.what());
    }

    // ---- criterion 4: end-to-end learning (feeds 5, 6, 7) -------------------
    net::ModelConfig model_cfg;
    model_cfg.width = 24;
    model_cfg.depth = 4;
    model_cfg.n_blocks = 2;
    model_cfg.length = 256;
    model_cfg.keypoints = 6;
    net::Parameters model_params;
    ModelEval eval_mixed;
    bool model_ready = false;

    try {
        const auto t0 = clock_type::now();
        // 34 mixed-noise records x 60 intervals = 2040 pairs; each record's
        // dropout episode covers ~25% of its beats
        std::vector<synth::SynthRecord> train_recs;
        for (int r = 0; r < 34; ++r) {
            std::optional<double> snr;
            if (r % 3 == 1) snr = 20.0;
            if (r % 3 == 2) snr = 10.0;
            train_recs.push_back(make_record(61, 50000 + static_cast<std::uint64_t>(r), snr, 0.25));
        }
        heatmap::DecodeConfig dc;
        auto train_pairs = synth::to_training_set(train_recs, model_cfg.length, dc);
        train_pairs.resize(2000);
        std::int64_t absent = 0;
        for (const auto& p : train_pairs)
            if (!p.truth[static_cast<int>(KeypointKind::PPeak)].present) ++absent;

        // held-out set: 250 clean + 250 noisy intervals from fresh seeds
        std::vector<synth::SynthRecord> eval_recs;
        for (int r = 0; r < 10; ++r)
            eval_recs.push_back(
                make_record(26, 60000 + static_cast<std::uint64_t>(r), std::nullopt, 0.25));
        for (int r = 0; r < 10; ++r)
            eval_recs.push_back(make_record(26, 61000 + static_cast<std::uint64_t>(r), 10.0, 0.25));
        auto eval_pairs = synth::to_training_set(eval_recs, model_cfg.length, dc);
        eval_pairs.resize(500);

        model_params = net::init_parameters(model_cfg, 20250810);
        train::TrainConfig tc;
        tc.batch = 64;
        tc.lr = 1e-3;
        tc.weight_decay = 1e-6;
        tc.epochs = 10;
        tc.seed = 20250810;
        tc.early_stop_loss = 0.02;
        const auto stats = train::fit(model_params, model_cfg, train_pairs, tc);

        eval_mixed = eval_model(model_params, model_cfg, eval_pairs, 0.4);
        const auto m = eval::metrics(eval_mixed.counts);
        const double acc = *m.accuracy;
        const double err = eval_mixed.mean_resampled_err.value_or(1e9);
        const double dt = seconds_since(t0);
        model_ready = true;
        const bool pass = acc >= 0.95 && err <= 5.0 && dt <= 1800.0;
        report(4, pass, "end-to-end learning on held-out synthetic intervals",
               "trained 2000 intervals (" + std::to_string(absent) + " P-absent), " +
                   std::to_string(stats.size()) + " epochs, final loss " +
                   fmt("%.4f", stats.back().mean_loss) + "; eval 500: " + fmt("acc %.3f", acc) +
                   fmt(", peak err %.2f resampled samples", err) + fmt(", %.0f s", dt) +
                   " (limit 1800)");
    } catch (const std::exception& e) {
        report_error(4, "end-to-end learning on held-out synthetic intervals", e.what());
    }

    // ---- criterion 5: baseline sanity ----------------------------------------
    try {
        heatmap::DecodeConfig dc;
        std::vector<synth::SynthRecord> clean_recs, noisy_recs;
        for (int r = 0; r < 20; ++r)
            clean_recs.push_back(
                make_record(26, 62000 + static_cast<std::uint64_t>(r), std::nullopt, 0.25));
        for (int r = 0; r < 20; ++r)
            noisy_recs.push_back(make_record(26, 63000 + static_cast<std::uint64_t>(r), 10.0, 0.25));
        auto noisy_pairs = synth::to_training_set(noisy_recs, model_cfg.length, dc);
        noisy_pairs.resize(500);

        const auto dwt_clean = eval::metrics(eval_dwt(clean_recs));
        const auto dwt_noisy = eval::metrics(eval_dwt(noisy_recs));
        double model_noisy_acc = 0.0;
        if (model_ready)
            model_noisy_acc =
                *eval::metrics(eval_model(model_params, model_cfg, noisy_pairs, 0.4).counts)
                     .accuracy;
        const bool pass = model_ready && *dwt_clean.accuracy >= 0.90 &&
                          model_noisy_acc >= *dwt_noisy.accuracy;
        report(5, pass, "DWT baseline sanity; trained model wins under noise",
               fmt("dwt clean acc %.3f", *dwt_clean.accuracy) +
                   fmt(", dwt noisy acc %.3f", *dwt_noisy.accuracy) +
                   fmt(", model noisy acc %.3f", model_noisy_acc));
    } catch (const std::exception& e) {
        report_error(5, "DWT baseline sanity; trained model wins under noise", e.what());
    }

    // ---- criterion 6: lambda trade-off on cached heatmaps ---------------------
    try {
        if (!model_ready) throw std::runtime_error("model unavailable (criterion 4 failed)");
        std::vector<double> lambdas;
        for (int s = 1; s <= 9; ++s) lambdas.push_back(0.1 * s);
        const auto sweep = eval::lambda_sweep(eval_mixed.confidences, eval_mixed.truth, lambdas);
        bool monotone = true;
        for (std::size_t i = 1; i < sweep.size(); ++i) {
            const auto& prev = sweep[i - 1].second;
            const auto& cur = sweep[i].second;
            if (cur.tp + cur.fp > prev.tp + prev.fp) monotone = false;
            if (cur.fp > prev.fp) monotone = false;
            if (cur.fn < prev.fn) monotone = false;
        }
        std::string detail = "present count per lambda:";
        for (const auto& [l, c] : sweep) detail += " " + std::to_string(c.tp + c.fp);
        report(6, monotone, "lambda sweep is monotone (present count and fp down, fn up)", detail);
    } catch (const std::exception& e) {
        report_error(6, "lambda sweep is monotone (present count and fp down, fn up)", e.what());
    }

    // ---- criterion 7: throughput report through the CLI -----------------------
    try {
        if (!model_ready) throw std::runtime_error("model unavailable (criterion 4 failed)");
        const fs::path dir = fs::temp_directory_path() / "keed_acceptance";
        fs::create_directories(dir);
        const fs::path weights = dir / "acceptance_weights.bin";
        io::write_binary_file(weights.string(), net::save_weights(model_params, model_cfg));
        const fs::path out = dir / "bench.json";
        const std::string cmd = std::string(KEED_BIN) + " bench --weights " + weights.string() +
                                " --intervals 1000 --repeats 3 --seed 77 --format json --out " +
                                out.string() + " > " + (dir / "bench.log").string() + " 2>&1";
        const int rc = std::system(cmd.c_str());
        if (rc != 0) throw std::runtime_error("cmd_bench exited nonzero");
        std::ifstream f(out);
        std::stringstream ss;
        ss << f.rdbuf();
        const auto root = nlohmann::json::parse(ss.str());
        bool pass = root.at("intervals").get<long long>() >= 1000;
        double keed_s = 0.0, dwt_s = 0.0, peak_s = 0.0;
        for (const auto& m : root.at("methods")) {
            const double t = m.at("median_s").get<double>();
            pass = pass && m.at("deterministic").get<bool>() && t > 0.0;
            const std::string name = m.at("method").get<std::string>();
            if (name == "keed") keed_s = t;
            if (name == "dwt") dwt_s = t;
            if (name == "peak") peak_s = t;
        }
        report(7, pass, "cmd_bench: deterministic repeats, positive wall times",
               fmt("keed %.3f s", keed_s) + fmt(", dwt %.3f s", dwt_s) +
                   fmt(", peak %.3f s", peak_s) +
                   fmt("; speedup vs dwt %.2fx", keed_s > 0 ? dwt_s / keed_s : 0.0) +
                   fmt(", vs peak %.2fx (reported, not asserted)",
                       keed_s > 0 ? peak_s / keed_s : 0.0));
    } catch (const std::exception& e) {
        report_error(7, "cmd_bench: deterministic repeats, positive wall times", e.what());
    }

    // ---- criterion 8: heatmap codec ---------------------------------------------
    try {
        std::mt19937_64 rng(808);
        bool ok = true;
        for (int trial = 0; trial < 1000 && ok; ++trial) {
            heatmap::TargetSet fids{};
            for (int k = 0; k < kNumKeypointKinds; ++k)
                fids[static_cast<std::size_t>(k)] = {rng() % 2 == 0, static_cast<int>(rng() % 256)};
            const auto target = heatmap::make_target(fids, 256, {});
            for (int k = 0; k < kNumKeypointKinds && ok; ++k) {
                const auto peak = heatmap::channel_peak(target, k);
                const auto& f = fids[static_cast<std::size_t>(k)];
                if (f.present)
                    ok = peak.max == 1.0 && peak.argmax == f.resampled_index;
                else
                    ok = peak.max == 0.0;
            }
        }
        report(8, ok, "decode recovers make_target presence and argmax exactly",
               "1000 fuzzed fiducial sets");
    } catch (const std::exception& e) {
        report_error(8, "decode recovers make_target presence and argmax exactly", e.what());
    }

    // ---- criterion 9: metric correctness ----------------------------------------
    try {
        std::mt19937_64 rng(909);
        bool ok = true;
        for (int trial = 0; trial < 500 && ok; ++trial) {
            const std::size_t n = 1 + rng() % 400;
            std::vector<bool> truth(n), pred(n);
            std::vector<std::int64_t> tl(n), pl(n);
            for (std::size_t i = 0; i < n; ++i) {
                truth[i] = rng() % 2 == 0;
                pred[i] = rng() % 3 != 0;
                tl[i] = static_cast<std::int64_t>(rng() % 5000);
                pl[i] = static_cast<std::int64_t>(rng() % 5000);
            }
            const auto c = eval::confusion(truth, pred);
            std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
            double err = 0.0;
            std::int64_t ne = 0;
            for (std::size_t i = 0; i < n; ++i) {
                tp += truth[i] && pred[i];
                fn += truth[i] && !pred[i];
                fp += !truth[i] && pred[i];
                tn += !truth[i] && !pred[i];
                if (truth[i] && pred[i]) {
                    err += std::fabs(static_cast<double>(pl[i] - tl[i]));
                    ++ne;
                }
            }
            ok = c == eval::ConfusionCounts{tp, fp, fn, tn};
            if (!ok) break;
            const auto m = eval::metrics(c);
            ok = std::fabs(*m.accuracy -
                           static_cast<double>(tp + tn) / static_cast<double>(n)) < 1e-12;
            if (tp + fn > 0)
                ok = ok && std::fabs(*m.sensitivity - static_cast<double>(tp) /
                                                          static_cast<double>(tp + fn)) < 1e-12;
            else
                ok = ok && !m.sensitivity.has_value();
            if (tn + fp > 0)
                ok = ok && std::fabs(*m.specificity - static_cast<double>(tn) /
                                                          static_cast<double>(tn + fp)) < 1e-12;
            else
                ok = ok && !m.specificity.has_value();
            const auto pe = eval::peak_error(tl, pl, truth, pred);
            if (ne > 0)
                ok = ok && std::fabs(*pe - err / static_cast<double>(ne)) < 1e-12;
            else
                ok = ok && !pe.has_value();
        }
        // the zero-denominator rule, exercised explicitly
        const auto all_pos = eval::metrics({3, 0, 2, 0});
        const auto all_neg = eval::metrics({0, 1, 0, 4});
        ok = ok && !all_pos.specificity.has_value() && !all_neg.sensitivity.has_value() &&
             !eval::peak_error({1}, {2}, {true}, {false}).has_value();
        report(9, ok, "confusion/metrics/peak_error match brute force to 1e-12",
               "500 fuzzed inputs; zero-denominator ratios reported absent");
    } catch (const std::exception& e) {
        report_error(9, "confusion/metrics/peak_error match brute force to 1e-12", e.what());
    }

    std::printf("%d/9 criteria passed in %.0f s\n", 9 - g_failed, seconds_since(suite_start));
    return g_failed;
}
