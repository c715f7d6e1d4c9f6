// keed: ECG delineation by keypoint estimation.
//
// Subcommands: synth, train, delineate, eval, bench, fetch, config.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 network/checksum.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include "CLI11.hpp"

#include "keed/config.hpp"
#include "keed/core.hpp"
#include "keed/eval.hpp"
#include "keed/fetch.hpp"
#include "keed/io.hpp"
#include "keed/pipeline.hpp"
#include "keed/qrs.hpp"
#include "keed/synth.hpp"
#include "keed/train.hpp"

namespace fs = std::filesystem;
using namespace keed;

namespace {

struct SynthArgs {
    std::string out_dir;
    int records = 1;
    int beats = 120;
    double fs = 250.0;
    double rr = 0.8;
    double jitter = 0.08;
    double p_absent = 0.0;     // fraction of beats per record
    double snr = 0.0;
    bool snr_set = false;
    std::uint64_t seed = 7;
};

synth::GenConfig make_gen_config(const SynthArgs& a, int record_index) {
    synth::GenConfig g;
    g.n_beats = a.beats;
    g.fs = a.fs;
    g.rr_mean = a.rr;
    g.rr_jitter = a.jitter;
    g.seed = a.seed + 1000003ULL * static_cast<std::uint64_t>(record_index);
    char id[32];
    std::snprintf(id, sizeof(id), "synth_%03d", record_index);
    g.record_id = id;
    if (a.snr_set) g.noise_snr_db = a.snr;
    if (a.p_absent > 0.0) {
        const int len = std::min(a.beats, static_cast<int>(std::llround(a.p_absent * a.beats)));
        if (len > 0) {
            std::mt19937_64 rng(g.seed ^ 0xA5A5A5A5ULL);
            const int start = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(
                                                       std::max(1, a.beats - len - 1)));
            g.p_dropout = {{start, start + len - 1}};
        }
    }
    return g;
}

int cmd_synth(const SynthArgs& a) {
    fs::create_directories(a.out_dir);
    for (int r = 0; r < a.records; ++r) {
        const synth::SynthRecord rec = synth::gen_record(make_gen_config(a, r));
        const fs::path base = fs::path(a.out_dir) / rec.record.record_id;
        io::write_text_file(base.string() + ".csv", synth::to_csv(rec));
        io::write_text_file(base.string() + ".truth.json", synth::truth_json(rec));
        std::cout << "wrote " << base.string() << ".csv (" << rec.record.samples.size()
                  << " samples, " << rec.beats.size() << " beats)\n";
    }
    return 0;
}

struct Dataset {
    std::vector<synth::SynthRecord> records;
};

Dataset load_dataset(const std::string& dir, double fs) {
    Dataset d;
    std::vector<fs::path> csvs;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".csv") csvs.push_back(entry.path());
    }
    std::sort(csvs.begin(), csvs.end());
    for (const fs::path& csv : csvs) {
        fs::path truth = csv;
        truth.replace_extension(".truth.json");  // foo.csv -> foo.truth.json
        truth = csv.parent_path() / (csv.stem().string() + ".truth.json");
        if (!fs::exists(truth)) continue;
        synth::SynthRecord rec;
        rec.record = io::read_csv_record(io::read_text_file(csv.string()), fs, csv.stem().string());
        rec.beats = synth::truth_from_json(io::read_text_file(truth.string()));
        d.records.push_back(std::move(rec));
    }
    if (d.records.empty())
        throw std::runtime_error("no record/truth pairs found in: " + dir);
    return d;
}

TimeSeriesRecord load_record(const std::string& input, double fs, int lead) {
    if (fs::path(input).extension() == ".hea") {
        const io::WfdbHeader hdr = io::parse_wfdb_header(io::read_text_file(input));
        if (lead < 0 || lead >= hdr.n_signals)
            throw std::runtime_error("lead index out of range for " + input);
        const fs::path dat = fs::path(input).parent_path() / hdr.signals[static_cast<std::size_t>(lead)].file;
        return io::read_wfdb_record(io::read_text_file(input), io::read_binary_file(dat.string()),
                                    lead);
    }
    return io::read_csv_record(io::read_text_file(input), fs, fs::path(input).stem().string());
}

struct TrainArgs {
    std::string data_dir;
    std::string out = "keed_weights.bin";
    std::string loss_csv;
    double fs = 250.0;
    double val_fraction = 0.0;  // held-out records, by record
};

int cmd_train(const TrainArgs& a, const config::RunConfig& rc) {
    const Dataset data = load_dataset(a.data_dir, a.fs);
    std::size_t n_train = data.records.size();
    if (a.val_fraction > 0.0 && data.records.size() > 1) {
        n_train = data.records.size() -
                  std::max<std::size_t>(1, static_cast<std::size_t>(a.val_fraction *
                                                                    data.records.size()));
        n_train = std::max<std::size_t>(1, n_train);
    }
    // Split by record, never by interval, so adjacent beats cannot leak
    // across the split.
    std::vector<synth::SynthRecord> train_recs(data.records.begin(),
                                               data.records.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<synth::SynthRecord> val_recs(data.records.begin() + static_cast<std::ptrdiff_t>(n_train),
                                             data.records.end());

    const auto pairs = synth::to_training_set(train_recs, rc.model.length, rc.decode);
    net::Parameters params = net::init_parameters(rc.model, rc.seed);
    train::TrainConfig tc;
    tc.batch = rc.train_batch;
    tc.lr = rc.train_lr;
    tc.weight_decay = rc.train_weight_decay;
    tc.epochs = rc.train_epochs;
    tc.seed = rc.seed;

    std::string csv = "epoch,loss\n";
    const auto stats = train::fit(params, rc.model, pairs, tc, [&](const train::EpochStat& s) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%d,%.10g\n", s.epoch, s.mean_loss);
        csv += buf;
        std::cout << "epoch " << s.epoch << " loss " << s.mean_loss << "\n";
    });
    (void)stats;

    if (!val_recs.empty()) {
        const auto val_pairs = synth::to_training_set(val_recs, rc.model.length, rc.decode);
        double loss = 0.0;
        for (const synth::TrainingPair& p : val_pairs) {
            net::Tensor in({1, static_cast<std::size_t>(rc.model.length)});
            in.v = p.interval.values;
            loss += net::bce_loss(net::model_forward(params, rc.model, in),
                                  [&] {
                                      net::Tensor t({1, p.target.dim(0), p.target.dim(1)});
                                      t.v = p.target.v;
                                      return t;
                                  }());
        }
        std::cout << "validation loss " << loss / static_cast<double>(val_pairs.size()) << " over "
                  << val_pairs.size() << " intervals\n";
    }

    io::write_binary_file(a.out, net::save_weights(params, rc.model));
    if (!a.loss_csv.empty()) io::write_text_file(a.loss_csv, csv);
    std::cout << "wrote " << a.out << " (" << pairs.size() << " training intervals)\n";
    return 0;
}

struct DelineateArgs {
    std::string input;
    std::string weights;
    std::string method = "keed";
    std::string out;
    double fs = 250.0;
    int lead = 0;
};

pipeline::BaselineMethod baseline_of(const std::string& name) {
    if (name == "dwt") return pipeline::BaselineMethod::Dwt;
    if (name == "peak") return pipeline::BaselineMethod::Peak;
    throw std::runtime_error("unknown method: " + name);
}

int cmd_delineate(const DelineateArgs& a, const config::RunConfig& rc) {
    const TimeSeriesRecord record = load_record(a.input, a.fs, a.lead);
    const auto rpeaks = qrs::detect_rpeaks(record, rc.qrs);
    DelineationResult result;
    if (a.method == "keed") {
        if (a.weights.empty()) throw std::runtime_error("--weights is required for method keed");
        const auto [params, model] = net::load_weights(io::read_binary_file(a.weights));
        pipeline::KeedOptions opts;
        opts.decode = rc.decode;
        opts.batch = rc.train_batch;
        opts.threads = rc.threads > 0 ? rc.threads
                                      : static_cast<int>(std::thread::hardware_concurrency());
        result = pipeline::delineate_keed(record, rpeaks, params, model, opts);
    } else {
        result = pipeline::delineate_baseline(record, rpeaks, baseline_of(a.method), rc.wt);
    }
    const std::string json = to_json(result);
    if (a.out.empty()) std::cout << json << "\n";
    else io::write_text_file(a.out, json);
    return 0;
}

struct EvalArgs {
    std::string input;
    std::string truth;
    std::string ann;
    std::string weights;
    std::vector<std::string> methods{"keed", "dwt", "peak"};
    std::string rpeak_source = "detect";  // detect | truth
    std::string wave = "P";
    std::string out;
    std::string format = "table";
    std::string sweep_out;
    bool sweep = false;
    double fs = 250.0;
    int lead = 0;
};

struct PerInterval {
    std::vector<bool> truth_present, pred_present;
    std::vector<std::int64_t> truth_loc, pred_loc;
};

PerInterval collect(const eval::AlignedTruth& aligned, const DelineationResult& result,
                    KeypointKind kind, bool use_p) {
    PerInterval out;
    for (std::size_t i = 0; i < aligned.intervals.size(); ++i) {
        const eval::IntervalTruth& t = aligned.intervals[i];
        if (!t.scoreable) continue;
        const KeypointCall& call = result.intervals[i].keypoints[static_cast<int>(kind)];
        out.truth_present.push_back(use_p ? t.p_present : t.t_present);
        out.truth_loc.push_back(use_p ? t.p_peak : t.t_peak);
        out.pred_present.push_back(call.present);
        out.pred_loc.push_back(call.location);
    }
    return out;
}

int cmd_eval(const EvalArgs& a, const config::RunConfig& rc) {
    const TimeSeriesRecord record = load_record(a.input, a.fs, a.lead);
    std::vector<synth::BeatTruth> beats;
    if (!a.truth.empty()) {
        beats = synth::truth_from_json(io::read_text_file(a.truth));
    } else if (!a.ann.empty()) {
        auto code_map = rc.ann_code_map;
        auto aux_map = rc.ann_aux_map;
        if (code_map.empty() && aux_map.empty()) {
            code_map = {{24, KeypointKind::PPeak}, {27, KeypointKind::TPeak}};
            aux_map = {{"p", KeypointKind::PPeak}, {"t", KeypointKind::TPeak}};
        }
        beats = eval::beats_from_annotations(io::read_wfdb_annotations(io::read_binary_file(a.ann)),
                                             code_map, aux_map);
    } else {
        throw std::runtime_error("eval needs --truth or --ann");
    }

    std::vector<std::int64_t> rpeaks;
    if (a.rpeak_source == "truth") {
        for (const synth::BeatTruth& b : beats) rpeaks.push_back(b.r);
    } else {
        rpeaks = qrs::detect_rpeaks(record, rc.qrs);
    }
    if (rpeaks.size() < 2) throw std::runtime_error("fewer than 2 R peaks; cannot evaluate");
    const eval::AlignedTruth aligned = eval::align_truth(beats, rpeaks, record.fs);

    const bool use_p = a.wave != "T";
    const KeypointKind kind = use_p ? KeypointKind::PPeak : KeypointKind::TPeak;

    eval::EvalReport report;
    const int threads = rc.threads > 0 ? rc.threads
                                       : static_cast<int>(std::thread::hardware_concurrency());
    for (const std::string& method : a.methods) {
        DelineationResult result;
        std::vector<net::HeatmapSet> heatmaps;
        const auto t0 = std::chrono::steady_clock::now();
        if (method == "keed") {
            if (a.weights.empty()) throw std::runtime_error("--weights is required for method keed");
            const auto [params, model] = net::load_weights(io::read_binary_file(a.weights));
            pipeline::KeedOptions opts;
            opts.decode = rc.decode;
            opts.batch = rc.train_batch;
            opts.threads = threads;
            result = pipeline::delineate_keed_cached(record, rpeaks, params, model, opts,
                                                     a.sweep ? &heatmaps : nullptr);
        } else {
            result = pipeline::delineate_baseline(record, rpeaks, baseline_of(method), rc.wt);
        }
        const auto t1 = std::chrono::steady_clock::now();

        const PerInterval per = collect(aligned, result, kind, use_p);
        eval::MethodReport mr;
        mr.method = method;
        const eval::ConfusionCounts counts = eval::confusion(per.truth_present, per.pred_present);
        mr.presence = eval::metrics(counts);
        mr.mean_peak_error =
            eval::peak_error(per.truth_loc, per.pred_loc, per.truth_present, per.pred_present);
        mr.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
        mr.intervals_per_second = mr.wall_seconds > 0.0
                                      ? static_cast<double>(result.intervals.size()) / mr.wall_seconds
                                      : 0.0;
        report.methods.push_back(mr);

        if (method == "keed" && a.sweep) {
            std::vector<double> conf;
            std::vector<bool> truth_mask;
            for (std::size_t i = 0; i < aligned.intervals.size(); ++i) {
                if (!aligned.intervals[i].scoreable) continue;
                conf.push_back(heatmap::channel_peak(heatmaps[i], static_cast<int>(kind)).max);
                truth_mask.push_back(use_p ? aligned.intervals[i].p_present
                                           : aligned.intervals[i].t_present);
            }
            std::vector<double> lambdas;
            for (int s = 1; s <= 9; ++s) lambdas.push_back(0.1 * s);
            const auto sweep = eval::lambda_sweep(conf, truth_mask, lambdas);
            const std::string csv = eval::sweep_csv(sweep);
            if (!a.sweep_out.empty()) io::write_text_file(a.sweep_out, csv);
            else std::cout << csv;
        }
    }

    std::string text = a.format == "json" ? eval::report_json(report) : eval::report_table(report);
    if (aligned.excluded > 0) {
        text += "\nexcluded intervals (R-peak mismatch > 0.15 s): " +
                std::to_string(aligned.excluded) + "\n";
    }
    if (a.out.empty()) std::cout << text;
    else io::write_text_file(a.out, text);
    return 0;
}

struct BenchArgs {
    std::string weights;
    std::string out;
    std::string format = "table";
    int intervals = 1000;
    int repeats = 3;
    std::uint64_t seed = 11;
    double fs = 250.0;
};

int cmd_bench(const BenchArgs& a, const config::RunConfig& rc) {
    if (a.weights.empty()) throw std::runtime_error("--weights is required for bench");
    const auto [params, model] = net::load_weights(io::read_binary_file(a.weights));

    // Synthesize enough records to cover the requested interval count,
    // detect R peaks once, and time only the delineation stages.
    const int beats_per_record = 201;
    const int n_records = (a.intervals + beats_per_record - 2) / (beats_per_record - 1);
    std::vector<TimeSeriesRecord> records;
    std::vector<std::vector<std::int64_t>> rpeaks;
    std::int64_t total_intervals = 0;
    for (int r = 0; r < n_records; ++r) {
        SynthArgs sa;
        sa.beats = beats_per_record;
        sa.fs = a.fs;
        sa.seed = a.seed;
        sa.p_absent = 0.25;
        synth::GenConfig g = make_gen_config(sa, r);
        records.push_back(synth::gen_record(g).record);
        rpeaks.push_back(qrs::detect_rpeaks(records.back(), rc.qrs));
        total_intervals += static_cast<std::int64_t>(rpeaks.back().size()) - 1;
    }

    const int threads = rc.threads > 0 ? rc.threads
                                       : static_cast<int>(std::thread::hardware_concurrency());
    pipeline::KeedOptions opts;
    opts.decode = rc.decode;
    opts.batch = rc.train_batch;
    opts.threads = threads;

    struct Entry {
        std::string name;
        eval::BenchResult res;
    };
    std::vector<Entry> entries;
    auto bench_method = [&](const std::string& name,
                            const std::function<DelineationResult(std::size_t)>& one) {
        const auto run = [&]() {
            std::vector<DelineationResult> out;
            out.reserve(records.size());
            for (std::size_t i = 0; i < records.size(); ++i) out.push_back(one(i));
            return out;
        };
        entries.push_back({name, eval::benchmark(run, a.repeats, total_intervals)});
    };

    bench_method("keed", [&](std::size_t i) {
        return pipeline::delineate_keed(records[i], rpeaks[i], params, model, opts);
    });
    bench_method("dwt", [&](std::size_t i) {
        return pipeline::delineate_baseline(records[i], rpeaks[i], pipeline::BaselineMethod::Dwt,
                                            rc.wt);
    });
    bench_method("peak", [&](std::size_t i) {
        return pipeline::delineate_baseline(records[i], rpeaks[i], pipeline::BaselineMethod::Peak,
                                            rc.wt);
    });

    std::string text;
    if (a.format == "json") {
        std::string json = "{\n  \"intervals\": " + std::to_string(total_intervals) +
                           ",\n  \"methods\": [\n";
        for (std::size_t i = 0; i < entries.size(); ++i) {
            char buf[256];
            std::snprintf(buf, sizeof(buf),
                          "    {\"method\": \"%s\", \"median_s\": %.6f, "
                          "\"intervals_per_s\": %.2f, \"deterministic\": %s, \"repeats\": %d}%s\n",
                          entries[i].name.c_str(), entries[i].res.median_seconds,
                          entries[i].res.intervals_per_second,
                          entries[i].res.deterministic ? "true" : "false", entries[i].res.repeats,
                          i + 1 < entries.size() ? "," : "");
            text += buf;
        }
        text = json + text + "  ]\n}\n";
    } else {
        eval::EvalReport report;
        for (const Entry& e : entries) {
            eval::MethodReport mr;
            mr.method = e.name;
            mr.wall_seconds = e.res.median_seconds;
            mr.intervals_per_second = e.res.intervals_per_second;
            report.methods.push_back(mr);
        }
        text = eval::report_table(report);
        const double keed_time = entries[0].res.median_seconds;
        for (std::size_t i = 1; i < entries.size(); ++i) {
            char buf[128];
            std::snprintf(buf, sizeof(buf), "speedup vs %s: %.1fx\n", entries[i].name.c_str(),
                          keed_time > 0.0 ? entries[i].res.median_seconds / keed_time : 0.0);
            text += buf;
        }
        for (const Entry& e : entries)
            text += "deterministic " + e.name + ": " + (e.res.deterministic ? "yes" : "no") + "\n";
        text += "intervals: " + std::to_string(total_intervals) + "\n";
    }
    if (a.out.empty()) std::cout << text;
    else io::write_text_file(a.out, text);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    // The config file is applied before flag parsing so that flags given on
    // the command line always win: flags > file > defaults.
    config::RunConfig rc;
    std::string config_path;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
    }
    try {
        if (!config_path.empty())
            rc.apply(config::ConfigFile::parse(io::read_text_file(config_path)));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    CLI::App app{"ECG delineation by keypoint estimation"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_opt;
    app.add_option("--config", config_opt, "configuration file (applied before flags)");

    SynthArgs sa;
    sa.seed = rc.seed;
    auto* synth_cmd = app.add_subcommand("synth", "generate synthetic records with ground truth");
    synth_cmd->fallthrough();
    synth_cmd->add_option("--out-dir", sa.out_dir, "output directory")->required();
    synth_cmd->add_option("--records", sa.records, "number of records");
    synth_cmd->add_option("--beats", sa.beats, "beats per record");
    synth_cmd->add_option("--fs", sa.fs, "sampling rate, Hz");
    synth_cmd->add_option("--rr", sa.rr, "mean R-R, seconds");
    synth_cmd->add_option("--jitter", sa.jitter, "R-R jitter fraction");
    synth_cmd->add_option("--p-absent", sa.p_absent, "fraction of beats with dropped P waves");
    auto* snr_opt = synth_cmd->add_option("--snr", sa.snr, "additive noise SNR, dB");
    synth_cmd->add_option("--seed", sa.seed, "generator seed");

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "train the model on synthetic records");
    train_cmd->fallthrough();
    train_cmd->add_option("--data", ta.data_dir, "directory of record/truth pairs")->required();
    train_cmd->add_option("--out", ta.out, "weights output path");
    train_cmd->add_option("--loss-csv", ta.loss_csv, "loss curve CSV path");
    train_cmd->add_option("--fs", ta.fs, "sampling rate of the CSV records");
    train_cmd->add_option("--val-fraction", ta.val_fraction, "held-out record fraction");
    train_cmd->add_option("--epochs", rc.train_epochs, "training epochs");
    train_cmd->add_option("--batch", rc.train_batch, "batch size");
    train_cmd->add_option("--lr", rc.train_lr, "learning rate");
    train_cmd->add_option("--wd", rc.train_weight_decay, "weight decay");
    train_cmd->add_option("--seed", rc.seed, "training seed");
    train_cmd->add_option("--width", rc.model.width, "model width");
    train_cmd->add_option("--depth", rc.model.depth, "encoder/decoder levels");
    train_cmd->add_option("--blocks", rc.model.n_blocks, "hourglass blocks");
    train_cmd->add_option("--length", rc.model.length, "model input length");

    DelineateArgs da;
    auto* del_cmd = app.add_subcommand("delineate", "delineate one record");
    del_cmd->fallthrough();
    del_cmd->add_option("--input", da.input, "input record (.csv or .hea)")->required();
    del_cmd->add_option("--weights", da.weights, "weights file (method keed)");
    del_cmd->add_option("--method", da.method, "keed | dwt | peak");
    del_cmd->add_option("--out", da.out, "result JSON path (stdout when omitted)");
    del_cmd->add_option("--fs", da.fs, "sampling rate for CSV input");
    del_cmd->add_option("--lead", da.lead, "signal index for WFDB input");
    del_cmd->add_option("--lambda", rc.decode.lambda, "presence threshold");
    del_cmd->add_option("--threads", rc.threads, "worker threads (0 = all cores)");
    del_cmd->add_option("--batch", rc.train_batch, "inference batch size");

    EvalArgs ea;
    auto* eval_cmd = app.add_subcommand("eval", "score methods against ground truth");
    eval_cmd->fallthrough();
    eval_cmd->add_option("--input", ea.input, "input record (.csv or .hea)")->required();
    eval_cmd->add_option("--truth", ea.truth, "truth sidecar JSON");
    eval_cmd->add_option("--ann", ea.ann, "WFDB annotation file");
    eval_cmd->add_option("--weights", ea.weights, "weights file");
    eval_cmd->add_option("--methods", ea.methods, "methods to score")->delimiter(',');
    eval_cmd->add_option("--rpeaks", ea.rpeak_source, "detect | truth");
    eval_cmd->add_option("--wave", ea.wave, "P | T");
    eval_cmd->add_option("--out", ea.out, "report output path");
    eval_cmd->add_option("--format", ea.format, "table | json");
    eval_cmd->add_flag("--sweep", ea.sweep, "emit a lambda sweep CSV (keed only)");
    eval_cmd->add_option("--sweep-out", ea.sweep_out, "sweep CSV path");
    eval_cmd->add_option("--fs", ea.fs, "sampling rate for CSV input");
    eval_cmd->add_option("--lead", ea.lead, "signal index for WFDB input");
    eval_cmd->add_option("--lambda", rc.decode.lambda, "presence threshold");

    BenchArgs ba;
    auto* bench_cmd = app.add_subcommand("bench", "wall-clock benchmark on synthetic intervals");
    bench_cmd->fallthrough();
    bench_cmd->add_option("--weights", ba.weights, "weights file")->required();
    bench_cmd->add_option("--intervals", ba.intervals, "number of R-R intervals");
    bench_cmd->add_option("--repeats", ba.repeats, "timing repeats");
    bench_cmd->add_option("--seed", ba.seed, "generator seed");
    bench_cmd->add_option("--fs", ba.fs, "sampling rate");
    bench_cmd->add_option("--out", ba.out, "output path");
    bench_cmd->add_option("--format", ba.format, "table | json");
    bench_cmd->add_option("--threads", rc.threads, "worker threads (0 = all cores)");

    std::string fetch_id, fetch_dest = ".";
    auto* fetch_cmd = app.add_subcommand("fetch", "download a dataset from the catalog");
    fetch_cmd->fallthrough();
    fetch_cmd->add_option("--dataset", fetch_id, "catalog id")->required();
    fetch_cmd->add_option("--dest", fetch_dest, "destination directory");

    auto* config_cmd = app.add_subcommand("config", "print the effective configuration");
    config_cmd->fallthrough();
    config_cmd->add_option("--lambda", rc.decode.lambda, "presence threshold");
    config_cmd->add_option("--width", rc.model.width, "model width");
    config_cmd->add_option("--seed", rc.seed, "seed");
    config_cmd->add_option("--threads", rc.threads, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
            e.get_name() == "CallForVersion") {
            app.exit(e);
            return 0;
        }
        std::cerr << e.what() << "\n" << app.help() << "\n";
        return 1;
    }

    try {
        if (synth_cmd->parsed()) {
            sa.snr_set = snr_opt->count() > 0;
            return cmd_synth(sa);
        }
        if (train_cmd->parsed()) return cmd_train(ta, rc);
        if (del_cmd->parsed()) return cmd_delineate(da, rc);
        if (eval_cmd->parsed()) return cmd_eval(ea, rc);
        if (bench_cmd->parsed()) return cmd_bench(ba, rc);
        if (fetch_cmd->parsed()) {
            const auto it = rc.fetch_catalog.find(fetch_id);
            if (it == rc.fetch_catalog.end()) {
                std::cerr << "unknown dataset id: " << fetch_id << "\n";
                return 1;
            }
            return fetch::fetch_dataset(it->second, fetch_dest, std::cout);
        }
        if (config_cmd->parsed()) {
            std::cout << rc.dump();
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
