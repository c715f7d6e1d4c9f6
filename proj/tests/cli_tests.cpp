// Behavioural tests that drive the installed binary end to end.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

#define CHECK_MSG(cond, msg)                                                        \
    do {                                                                            \
        if (cond) {                                                                 \
            std::printf("[ ok ] %s\n", msg);                                        \
        } else {                                                                    \
            std::printf("[FAIL] %s (%s:%d)\n", msg, __FILE__, __LINE__);            \
            ++g_failures;                                                           \
        }                                                                           \
    } while (0)

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(KEED_BIN) + " " + args + " 2>&1";
    RunResult res;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return res;
    char buf[4096];
    while (std::fgets(buf, sizeof(buf), pipe)) res.output += buf;
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("keed_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int count_present(const std::string& json_text, const std::string& kind) {
    const auto root = nlohmann::json::parse(json_text);
    int count = 0;
    for (const auto& iv : root.at("intervals"))
        if (iv.at("keypoints").at(kind).at("present").get<bool>()) ++count;
    return count;
}

}  // namespace

int main() {
    const fs::path base = fresh_dir("suite");

    // --- synth determinism ------------------------------------------------
    {
        const fs::path a = base / "synth_a", b = base / "synth_b";
        const std::string flags = "--records 2 --beats 24 --p-absent 0.25 --snr 15 --seed 7";
        CHECK_MSG(run("synth --out-dir " + a.string() + " " + flags).exit_code == 0,
                  "synth exits 0");
        CHECK_MSG(run("synth --out-dir " + b.string() + " " + flags).exit_code == 0,
                  "synth exits 0 again");
        bool identical = true;
        for (const char* name : {"synth_000.csv", "synth_000.truth.json", "synth_001.csv",
                                 "synth_001.truth.json"}) {
            identical = identical && slurp(a / name) == slurp(b / name) && !slurp(a / name).empty();
        }
        CHECK_MSG(identical, "same seed produces byte-identical synth outputs");

        const fs::path c = base / "synth_c";
        run("synth --out-dir " + c.string() +
            " --records 2 --beats 24 --p-absent 0.25 --snr 15 --seed 8");
        CHECK_MSG(slurp(a / "synth_000.csv") != slurp(c / "synth_000.csv"),
                  "different seed produces different records");
    }

    // --- train: loss curve decreases --------------------------------------
    const fs::path data_dir = base / "data";
    const fs::path weights = base / "weights.bin";
    {
        run("synth --out-dir " + data_dir.string() +
            " --records 10 --beats 21 --p-absent 0.3 --seed 9");
        const fs::path loss_csv = base / "loss.csv";
        const RunResult tr = run("train --data " + data_dir.string() + " --out " +
                                 weights.string() + " --loss-csv " + loss_csv.string() +
                                 " --epochs 5 --batch 32 --width 8 --depth 2 --blocks 1 "
                                 "--length 64 --seed 3");
        CHECK_MSG(tr.exit_code == 0, "train exits 0");
        const std::string csv = slurp(loss_csv);
        std::vector<double> losses;
        std::istringstream ss(csv);
        std::string line;
        std::getline(ss, line);  // header
        while (std::getline(ss, line)) {
            if (line.empty()) continue;
            losses.push_back(std::strtod(line.substr(line.find(',') + 1).c_str(), nullptr));
        }
        CHECK_MSG(losses.size() >= 2, "loss CSV has at least 2 rows");
        CHECK_MSG(!losses.empty() && losses.back() < losses.front(),
                  "final loss is below the initial loss");
        CHECK_MSG(fs::exists(weights), "weights file written");
    }

    // --- delineate: lambda monotonicity through the full pipeline ---------
    {
        const fs::path rec = data_dir / "synth_000.csv";
        const fs::path out_lo = base / "res_lo.json", out_hi = base / "res_hi.json";
        const std::string common = "delineate --input " + rec.string() + " --weights " +
                                   weights.string() + " --method keed --out ";
        CHECK_MSG(run(common + out_lo.string() + " --lambda 0.1").exit_code == 0,
                  "delineate (lambda 0.1) exits 0");
        CHECK_MSG(run(common + out_hi.string() + " --lambda 0.9").exit_code == 0,
                  "delineate (lambda 0.9) exits 0");
        const int lo = count_present(slurp(out_lo), "PPeak");
        const int hi = count_present(slurp(out_hi), "PPeak");
        CHECK_MSG(hi <= lo, "present count at lambda 0.9 <= count at lambda 0.1");

        const fs::path out_dwt = base / "res_dwt.json";
        CHECK_MSG(run("delineate --input " + rec.string() + " --method dwt --out " +
                      out_dwt.string()).exit_code == 0,
                  "delineate with the dwt baseline exits 0");
        CHECK_MSG(slurp(out_dwt).find("\"TPeak\"") != std::string::npos,
                  "baseline result carries keypoint fields");
    }

    // --- eval against the truth sidecar ------------------------------------
    {
        const RunResult ev = run("eval --input " + (data_dir / "synth_001.csv").string() +
                                 " --truth " + (data_dir / "synth_001.truth.json").string() +
                                 " --weights " + weights.string() +
                                 " --methods keed,dwt,peak --sweep --sweep-out " +
                                 (base / "sweep.csv").string());
        CHECK_MSG(ev.exit_code == 0, "eval exits 0");
        CHECK_MSG(ev.output.find("Method | Accuracy (%)") != std::string::npos,
                  "eval prints the Table-I schema");
        const std::string sweep = slurp(base / "sweep.csv");
        CHECK_MSG(sweep.rfind("lambda,tp,fp,fn,tn\n", 0) == 0, "sweep CSV has the schema header");
    }

    // --- config precedence: flags > file > defaults ------------------------
    {
        const RunResult defaults = run("config");
        CHECK_MSG(defaults.exit_code == 0 &&
                      defaults.output.find("lambda = 0.4") != std::string::npos,
                  "built-in default lambda is 0.4");

        const fs::path conf = base / "keed.conf";
        std::ofstream(conf) << "[decode]\nlambda = 0.7\n[model]\nwidth = 12\n";
        const RunResult from_file = run("config --config " + conf.string());
        CHECK_MSG(from_file.output.find("lambda = 0.7") != std::string::npos,
                  "config file overrides the default");
        CHECK_MSG(from_file.output.find("width = 12") != std::string::npos,
                  "config file sets the model width");

        const RunResult from_flag = run("config --config " + conf.string() + " --lambda 0.2");
        CHECK_MSG(from_flag.output.find("lambda = 0.2") != std::string::npos,
                  "flag overrides the config file");
        CHECK_MSG(from_flag.output.find("width = 12") != std::string::npos,
                  "file values persist where no flag is given");
    }

    // --- exit codes ---------------------------------------------------------
    {
        CHECK_MSG(run("delineate --no-such-flag x").exit_code == 1, "invalid flag exits 1");
        CHECK_MSG(run("nonsense").exit_code == 1, "unknown subcommand exits 1");
        const RunResult missing = run("delineate --input /no/such/file.csv --method dwt");
        CHECK_MSG(missing.exit_code == 2, "missing input exits 2");
        CHECK_MSG(missing.output.find("/no/such/file.csv") != std::string::npos,
                  "missing-file message names the path");
        CHECK_MSG(run("fetch --dataset not-a-dataset --dest " + base.string()).exit_code == 1,
                  "unknown dataset id exits 1");
        CHECK_MSG(run("--help").exit_code == 0, "--help exits 0");
    }

    if (g_failures == 0) std::printf("all cli tests passed\n");
    return g_failures == 0 ? 0 : 1;
}
