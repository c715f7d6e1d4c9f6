#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "keed/net.hpp"
#include "keed/synth.hpp"

namespace keed::train {

struct TrainConfig {
    int batch = 64;
    double lr = 1e-3;
    double weight_decay = 1e-6;
    int epochs = 10;
    std::uint64_t seed = 1;
    double early_stop_loss = -1.0;  // stop once the epoch mean drops below; <0 disables
};

struct EpochStat {
    int epoch = 0;
    double mean_loss = 0.0;
};

// Seeded, single-threaded Adam training over (interval, target) pairs.
// Shuffling is a hand-rolled Fisher-Yates on mt19937_64 so runs are
// bit-reproducible across platforms.
std::vector<EpochStat> fit(net::Parameters& params, const net::ModelConfig& cfg,
                           const std::vector<synth::TrainingPair>& data, const TrainConfig& tc,
                           const std::function<void(const EpochStat&)>& on_epoch = {});

}  // namespace keed::train
