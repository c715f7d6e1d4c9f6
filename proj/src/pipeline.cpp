#include "keed/pipeline.hpp"

#include <atomic>
#include <stdexcept>
#include <thread>

namespace keed::pipeline {

DelineationResult delineate_keed(const TimeSeriesRecord& record,
                                 const std::vector<std::int64_t>& rpeaks,
                                 const net::Parameters& params, const net::ModelConfig& cfg,
                                 const KeedOptions& opts) {
    return delineate_keed_cached(record, rpeaks, params, cfg, opts, nullptr);
}

DelineationResult delineate_keed_cached(const TimeSeriesRecord& record,
                                        const std::vector<std::int64_t>& rpeaks,
                                        const net::Parameters& params,
                                        const net::ModelConfig& cfg, const KeedOptions& opts,
                                        std::vector<net::HeatmapSet>* heatmaps_out) {
    if (opts.batch < 1) throw std::invalid_argument("delineate_keed: batch must be >= 1");
    opts.decode.validate();
    const auto intervals = segmenter::split_intervals(record, rpeaks, cfg.length);
    const std::size_t n = intervals.size();

    DelineationResult result;
    result.record_id = record.record_id;
    result.fs = record.fs;
    result.intervals.resize(n);
    if (heatmaps_out) heatmaps_out->assign(n, net::HeatmapSet());

    const std::size_t batch_size = static_cast<std::size_t>(opts.batch);
    const std::size_t n_batches = (n + batch_size - 1) / batch_size;

    auto run_batch = [&](std::size_t bi) {
        const std::size_t lo = bi * batch_size;
        const std::size_t hi = std::min(n, lo + batch_size);
        net::Tensor batch({hi - lo, static_cast<std::size_t>(cfg.length)});
        for (std::size_t i = lo; i < hi; ++i) {
            std::copy(intervals[i].values.begin(), intervals[i].values.end(),
                      batch.v.begin() + static_cast<std::ptrdiff_t>((i - lo) * cfg.length));
        }
        const net::Tensor out = net::model_forward(params, cfg, batch);
        for (std::size_t i = lo; i < hi; ++i) {
            net::HeatmapSet maps = net::slice_heatmaps(out, i - lo);
            IntervalDelineation iv;
            iv.r_start = intervals[i].r_start;
            iv.r_end = intervals[i].r_end;
            iv.keypoints = heatmap::decode_keypoints(maps, intervals[i], opts.decode);
            result.intervals[i] = iv;
            if (heatmaps_out) (*heatmaps_out)[i] = std::move(maps);
        }
    };

    const int threads = std::max(1, opts.threads);
    if (threads == 1 || n_batches <= 1) {
        for (std::size_t bi = 0; bi < n_batches; ++bi) run_batch(bi);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        const int n_workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n_batches);
        for (int t = 0; t < n_workers; ++t) {
            pool.emplace_back([&]() {
                while (true) {
                    const std::size_t bi = next.fetch_add(1);
                    if (bi >= n_batches) return;
                    run_batch(bi);
                }
            });
        }
        for (std::thread& t : pool) t.join();
    }
    return result;
}

DelineationResult delineate_baseline(const TimeSeriesRecord& record,
                                     const std::vector<std::int64_t>& rpeaks,
                                     BaselineMethod method, const baseline::WtConfig& cfg) {
    const auto delineate = method == BaselineMethod::Dwt ? baseline::delineate_wave_dwt
                                                         : baseline::delineate_wave_peak;
    const auto p = delineate(record, rpeaks, baseline::WaveKind::P, cfg);
    const auto t = delineate(record, rpeaks, baseline::WaveKind::T, cfg);
    return baseline::assemble_result(record, rpeaks, p, t);
}

}  // namespace keed::pipeline
