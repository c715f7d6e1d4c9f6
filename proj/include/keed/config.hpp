#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "keed/baseline.hpp"
#include "keed/core.hpp"
#include "keed/fetch.hpp"
#include "keed/heatmap.hpp"
#include "keed/net.hpp"
#include "keed/qrs.hpp"

namespace keed::config {

// Flat key-value file with INI-style sections:
//   [model]
//   width = 48
// becomes "model.width" -> "48". '#' and ';' start comments.
struct ConfigFile {
    std::map<std::string, std::string> values;

    static ConfigFile parse(const std::string& text);
    std::optional<std::string> get(const std::string& key) const;
};

// Everything the CLI commands share. Built-in defaults, overlaid by a
// config file, overlaid by command-line flags (handled in the CLI).
struct RunConfig {
    net::ModelConfig model;
    heatmap::DecodeConfig decode;
    qrs::QrsConfig qrs;
    baseline::WtConfig wt;

    int train_batch = 64;
    double train_lr = 1e-3;
    double train_weight_decay = 1e-6;
    int train_epochs = 10;
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = all available cores

    std::map<int, KeypointKind> ann_code_map;          // type code -> kind
    std::map<std::string, KeypointKind> ann_aux_map;   // aux text -> kind
    std::map<std::string, fetch::FetchSpec> fetch_catalog = fetch::default_catalog();

    // File overlay; throws std::runtime_error on malformed values.
    void apply(const ConfigFile& file);
    // The effective configuration in config-file syntax.
    std::string dump() const;
};

}  // namespace keed::config
