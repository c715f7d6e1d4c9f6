#include "keed/config.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace keed::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double as_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw std::runtime_error("config: bad numeric value for " + key + ": " + value);
    return v;
}

std::int64_t as_int(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const std::int64_t v = std::strtoll(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw std::runtime_error("config: bad integer value for " + key + ": " + value);
    return v;
}

KeypointKind as_kind(const std::string& key, const std::string& value) {
    const auto kind = keypoint_kind_from_string(value);
    if (!kind) throw std::runtime_error("config: unknown keypoint kind for " + key + ": " + value);
    return *kind;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : value) {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
    ConfigFile out;
    std::istringstream ss(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        if (const auto hash = line.find_first_of("#;"); hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("config: unterminated section at line " +
                                         std::to_string(line_no));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: expected key = value at line " +
                                     std::to_string(line_no));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error("config: empty key at line " + std::to_string(line_no));
        out.values[section.empty() ? key : section + "." + key] = value;
    }
    return out;
}

std::optional<std::string> ConfigFile::get(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    return it->second;
}

void RunConfig::apply(const ConfigFile& file) {
    for (const auto& [key, value] : file.values) {
        if (key == "model.width") model.width = static_cast<int>(as_int(key, value));
        else if (key == "model.depth") model.depth = static_cast<int>(as_int(key, value));
        else if (key == "model.blocks") model.n_blocks = static_cast<int>(as_int(key, value));
        else if (key == "model.length") model.length = static_cast<int>(as_int(key, value));
        else if (key == "model.keypoints") model.keypoints = static_cast<int>(as_int(key, value));
        else if (key == "model.kernel") model.kernel_size = static_cast<int>(as_int(key, value));
        else if (key == "decode.lambda") decode.lambda = as_double(key, value);
        else if (key == "decode.sigma") decode.sigma = as_double(key, value);
        else if (key.rfind("decode.lambda.", 0) == 0) {
            const KeypointKind kind = as_kind(key, key.substr(14));
            decode.lambda_override[static_cast<int>(kind)] = as_double(key, value);
        } else if (key == "qrs.band_low") qrs.band_low = as_double(key, value);
        else if (key == "qrs.band_high") qrs.band_high = as_double(key, value);
        else if (key == "qrs.integration_window") qrs.integration_window = as_double(key, value);
        else if (key == "qrs.refractory") qrs.refractory = as_double(key, value);
        else if (key == "qrs.twave_window") qrs.twave_window = as_double(key, value);
        else if (key == "qrs.searchback") qrs.searchback = as_int(key, value) != 0;
        else if (key == "wt.scales") wt.n_scales = static_cast<int>(as_int(key, value));
        else if (key == "wt.p_search_lo") wt.p_search_lo = as_double(key, value);
        else if (key == "wt.p_search_hi") wt.p_search_hi = as_double(key, value);
        else if (key == "wt.t_search_lo") wt.t_search_lo = as_double(key, value);
        else if (key == "wt.t_search_hi") wt.t_search_hi = as_double(key, value);
        else if (key == "wt.presence_factor") wt.presence_factor = as_double(key, value);
        else if (key == "wt.onset_factor") wt.onset_factor = as_double(key, value);
        else if (key == "wt.offset_factor") wt.offset_factor = as_double(key, value);
        else if (key == "train.batch") train_batch = static_cast<int>(as_int(key, value));
        else if (key == "train.lr") train_lr = as_double(key, value);
        else if (key == "train.weight_decay") train_weight_decay = as_double(key, value);
        else if (key == "train.epochs") train_epochs = static_cast<int>(as_int(key, value));
        else if (key == "run.seed") seed = static_cast<std::uint64_t>(as_int(key, value));
        else if (key == "run.threads") threads = static_cast<int>(as_int(key, value));
        else if (key.rfind("annotations.code.", 0) == 0) {
            const int code = static_cast<int>(as_int(key, key.substr(17)));
            ann_code_map[code] = as_kind(key, value);
        } else if (key.rfind("annotations.aux.", 0) == 0) {
            ann_aux_map[key.substr(16)] = as_kind(key, value);
        } else if (key.rfind("fetch:", 0) == 0) {
            // [fetch:<id>] base_url / files / sha256.<file>
            const auto dot = key.find('.', 6);
            if (dot == std::string::npos) throw std::runtime_error("config: bad fetch key " + key);
            const std::string id = key.substr(6, dot - 6);
            const std::string field = key.substr(dot + 1);
            fetch::FetchSpec& spec = fetch_catalog[id];
            if (field == "base_url") spec.base_url = value;
            else if (field == "files") spec.files = split_list(value);
            else if (field.rfind("sha256.", 0) == 0) spec.sha256[field.substr(7)] = value;
            else throw std::runtime_error("config: unknown fetch field " + key);
        } else {
            throw std::runtime_error("config: unknown key " + key);
        }
    }
}

std::string RunConfig::dump() const {
    std::ostringstream out;
    out << "[model]\n";
    out << "width = " << model.width << "\n";
    out << "depth = " << model.depth << "\n";
    out << "blocks = " << model.n_blocks << "\n";
    out << "length = " << model.length << "\n";
    out << "keypoints = " << model.keypoints << "\n";
    out << "kernel = " << model.kernel_size << "\n";
    out << "\n[decode]\n";
    out << "lambda = " << decode.lambda << "\n";
    out << "sigma = " << decode.sigma << "\n";
    for (KeypointKind k : all_keypoint_kinds()) {
        const auto& ov = decode.lambda_override[static_cast<int>(k)];
        if (ov) out << "lambda." << to_string(k) << " = " << *ov << "\n";
    }
    out << "\n[qrs]\n";
    out << "band_low = " << qrs.band_low << "\n";
    out << "band_high = " << qrs.band_high << "\n";
    out << "integration_window = " << qrs.integration_window << "\n";
    out << "refractory = " << qrs.refractory << "\n";
    out << "twave_window = " << qrs.twave_window << "\n";
    out << "searchback = " << (qrs.searchback ? 1 : 0) << "\n";
    out << "\n[wt]\n";
    out << "scales = " << wt.n_scales << "\n";
    out << "p_search_lo = " << wt.p_search_lo << "\n";
    out << "p_search_hi = " << wt.p_search_hi << "\n";
    out << "t_search_lo = " << wt.t_search_lo << "\n";
    out << "t_search_hi = " << wt.t_search_hi << "\n";
    out << "presence_factor = " << wt.presence_factor << "\n";
    out << "onset_factor = " << wt.onset_factor << "\n";
    out << "offset_factor = " << wt.offset_factor << "\n";
    out << "\n[train]\n";
    out << "batch = " << train_batch << "\n";
    out << "lr = " << train_lr << "\n";
    out << "weight_decay = " << train_weight_decay << "\n";
    out << "epochs = " << train_epochs << "\n";
    out << "\n[run]\n";
    out << "seed = " << seed << "\n";
    out << "threads = " << threads << "\n";
    if (!ann_code_map.empty() || !ann_aux_map.empty()) {
        out << "\n[annotations]\n";
        for (const auto& [code, kind] : ann_code_map)
            out << "code." << code << " = " << to_string(kind) << "\n";
        for (const auto& [aux, kind] : ann_aux_map)
            out << "aux." << aux << " = " << to_string(kind) << "\n";
    }
    for (const auto& [id, spec] : fetch_catalog) {
        out << "\n[fetch:" << id << "]\n";
        out << "base_url = " << spec.base_url << "\n";
        out << "files =";
        for (const std::string& f : spec.files) out << " " << f;
        out << "\n";
        for (const auto& [file, digest] : spec.sha256)
            out << "sha256." << file << " = " << digest << "\n";
    }
    return out.str();
}

}  // namespace keed::config
