#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace keed::net {

// Dense row-major tensor of doubles, rank <= 3. Activations are
// {batch, channels, length}, conv kernels {out, in, taps}, per-channel
// vectors {channels}, scalars {1}.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        v.assign(numel_of(shape), 0.0);
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return s.empty() ? 0 : n;
    }

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

    std::size_t numel() const { return v.size(); }
    std::size_t dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    double& at(std::size_t i) { return v[i]; }
    double at(std::size_t i) const { return v[i]; }

    // {a,b} indexing for rank-2, {a,b,c} for rank-3
    double& at2(std::size_t i, std::size_t j) { return v[i * shape[1] + j]; }
    double at2(std::size_t i, std::size_t j) const { return v[i * shape[1] + j]; }
    double& at3(std::size_t i, std::size_t j, std::size_t k) {
        return v[(i * shape[1] + j) * shape[2] + k];
    }
    double at3(std::size_t i, std::size_t j, std::size_t k) const {
        return v[(i * shape[1] + j) * shape[2] + k];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    bool operator==(const Tensor& other) const = default;
};

// K x L probability map: model output (entries in (0,1)) or training
// target (entries in [0,1]). Row k is the channel for keypoint kind k.
using HeatmapSet = Tensor;

}  // namespace keed::net
