#include "keed/train.hpp"

#include <numeric>
#include <random>
#include <stdexcept>

namespace keed::train {

std::vector<EpochStat> fit(net::Parameters& params, const net::ModelConfig& cfg,
                           const std::vector<synth::TrainingPair>& data, const TrainConfig& tc,
                           const std::function<void(const EpochStat&)>& on_epoch) {
    if (data.empty()) throw std::invalid_argument("fit: no training data");
    if (tc.batch < 1 || tc.epochs < 1) throw std::invalid_argument("fit: bad batch/epochs");
    for (const synth::TrainingPair& p : data) {
        if (static_cast<int>(p.interval.values.size()) != cfg.length)
            throw std::invalid_argument("fit: interval length does not match the model");
    }

    net::OptimizerState opt;
    opt.lr = tc.lr;
    opt.weight_decay = tc.weight_decay;

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<EpochStat> stats;

    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        std::mt19937_64 rng(tc.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng() % i);
            std::swap(order[i - 1], order[j]);
        }

        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t lo = 0; lo < order.size(); lo += static_cast<std::size_t>(tc.batch)) {
            const std::size_t hi = std::min(order.size(), lo + static_cast<std::size_t>(tc.batch));
            const std::size_t bs = hi - lo;
            net::Tensor batch({bs, static_cast<std::size_t>(cfg.length)});
            net::Tensor target({bs, static_cast<std::size_t>(cfg.keypoints),
                                static_cast<std::size_t>(cfg.length)});
            for (std::size_t i = lo; i < hi; ++i) {
                const synth::TrainingPair& pair = data[order[i]];
                std::copy(pair.interval.values.begin(), pair.interval.values.end(),
                          batch.v.begin() + static_cast<std::ptrdiff_t>((i - lo) * cfg.length));
                std::copy(pair.target.v.begin(), pair.target.v.end(),
                          target.v.begin() +
                              static_cast<std::ptrdiff_t>((i - lo) * cfg.keypoints * cfg.length));
            }
            net::BackwardResult res = net::backward(params, cfg, batch, target);
            net::adam_step(params, res.grads, opt);
            loss_sum += res.loss;
            ++n_batches;
        }

        EpochStat stat{epoch, loss_sum / static_cast<double>(n_batches)};
        stats.push_back(stat);
        if (on_epoch) on_epoch(stat);
        if (tc.early_stop_loss >= 0.0 && stat.mean_loss < tc.early_stop_loss) break;
    }
    return stats;
}

}  // namespace keed::train
