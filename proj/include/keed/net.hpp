#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "keed/tensor.hpp"

namespace keed::net {

struct ModelConfig {
    int width = 48;        // channels per layer
    int depth = 4;         // encoder/decoder levels per block
    int n_blocks = 2;      // stacked hourglass blocks
    int length = 256;      // input length L
    int keypoints = 6;     // output channels K
    int kernel_size = 3;   // conv taps, odd

    void validate() const;
};

// Named tensor collection with stable iteration order.
struct Parameters {
    std::vector<std::string> names;
    std::vector<Tensor> tensors;

    std::size_t size() const { return names.size(); }
    int index_of(const std::string& name) const;  // -1 when missing
    Tensor& operator[](const std::string& name);
    const Tensor& operator[](const std::string& name) const;

    bool operator==(const Parameters&) const = default;
};

// The layout (names and shapes, all zeros) induced by a config.
Parameters parameter_layout(const ModelConfig& cfg);

// Fan-in-scaled uniform conv kernels, zero biases, unit norm scales and
// gates; bitwise deterministic for a given seed.
Parameters init_parameters(const ModelConfig& cfg, std::uint64_t seed);

// Test seam: replaces the tensor entering the encoder-decoder skip gate of
// (block, level) during the forward pass.
struct SkipOverride {
    int block = 0;
    int level = 0;
    Tensor tensor;
};

// Stem conv (1 -> width), n_blocks hourglass blocks (encoder levels of
// [residual unit, maxpool /2]; decoder levels of [nearest x2 + conv,
// gated skip add, residual unit]), then a 1x1 head conv (width -> K) and
// sigmoid. batch is {B, L}; the result is {B, K, L} in (0,1).
Tensor model_forward(const Parameters& params, const ModelConfig& cfg, const Tensor& batch);
Tensor model_forward_hooked(const Parameters& params, const ModelConfig& cfg, const Tensor& batch,
                            const std::vector<SkipOverride>& overrides);

// Mean of -[t ln p + (1-t) ln(1-p)] with p clamped to [1e-7, 1-1e-7].
double bce_loss(const Tensor& pred, const Tensor& target);

struct BackwardResult {
    double loss = 0.0;
    Parameters grads;  // shaped like the parameters
};

// Exact reverse-mode gradients of bce_loss(model_forward(...)) with
// respect to every parameter, gate scalars included.
BackwardResult backward(const Parameters& params, const ModelConfig& cfg, const Tensor& batch,
                        const Tensor& target);

struct OptimizerState {
    double lr = 1e-3;
    double weight_decay = 1e-6;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    std::vector<Tensor> m;  // first moments, lazily shaped
    std::vector<Tensor> v;  // second moments
};

// Classic Adam with bias correction; weight decay enters as an L2 term
// added to the gradient before the moment updates.
void adam_step(Parameters& params, const Parameters& grads, OptimizerState& state);

// Self-describing container: magic "KEED1", config, then named tensors as
// little-endian 64-bit floats. load(save(x)) is bit-exact.
std::vector<std::uint8_t> save_weights(const Parameters& params, const ModelConfig& cfg);
std::pair<Parameters, ModelConfig> load_weights(const std::vector<std::uint8_t>& bytes);

// Row b of a {B,K,L} batch output as a K x L heatmap set.
HeatmapSet slice_heatmaps(const Tensor& batch_output, std::size_t b);

}  // namespace keed::net
