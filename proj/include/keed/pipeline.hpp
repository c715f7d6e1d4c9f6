#pragma once

#include <cstdint>
#include <vector>

#include "keed/baseline.hpp"
#include "keed/core.hpp"
#include "keed/heatmap.hpp"
#include "keed/net.hpp"
#include "keed/segmenter.hpp"

namespace keed::pipeline {

struct KeedOptions {
    heatmap::DecodeConfig decode;
    int batch = 64;
    int threads = 1;  // batches processed in parallel
};

// Model route: split into R-R intervals, resample + normalize, batched
// forward, decode with the lambda threshold, translate locations back to
// original coordinates. Deterministic for fixed weights and inputs
// regardless of the thread count.
DelineationResult delineate_keed(const TimeSeriesRecord& record,
                                 const std::vector<std::int64_t>& rpeaks,
                                 const net::Parameters& params, const net::ModelConfig& cfg,
                                 const KeedOptions& opts);

// As above, but also hands back each interval's heatmaps (for lambda
// sweeps over cached confidences).
DelineationResult delineate_keed_cached(const TimeSeriesRecord& record,
                                        const std::vector<std::int64_t>& rpeaks,
                                        const net::Parameters& params,
                                        const net::ModelConfig& cfg, const KeedOptions& opts,
                                        std::vector<net::HeatmapSet>* heatmaps_out);

enum class BaselineMethod { Dwt, Peak };

DelineationResult delineate_baseline(const TimeSeriesRecord& record,
                                     const std::vector<std::int64_t>& rpeaks,
                                     BaselineMethod method, const baseline::WtConfig& cfg);

}  // namespace keed::pipeline
