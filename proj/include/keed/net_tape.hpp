#pragma once

#include <functional>
#include <vector>

#include "keed/tensor.hpp"

namespace keed::net {

// Reverse-mode tape covering exactly the operations the hourglass model
// needs. Ops append nodes; backward() walks them in reverse creation
// order, accumulating into parent gradients. Construct with record=false
// for inference (values only, no closures).
class Tape {
public:
    using Id = int;

    explicit Tape(bool record = true) : record_(record) {}

    Id leaf(Tensor value, bool requires_grad);

    // Zero same-padded 1D convolution: x {B,C,L}, w {Co,C,T} with T odd,
    // b {Co} -> {B,Co,L}.
    Id conv1d(Id x, Id w, Id b);
    Id relu(Id x);
    // Per-(batch, channel) normalization over the length axis with
    // learnable scale/shift {C}; batch statistics are never mixed.
    Id channel_norm(Id x, Id scale, Id shift);
    Id maxpool2(Id x);    // halves L; first index wins ties
    Id upsample2(Id x);   // nearest-neighbour doubling
    Id gate_add(Id alpha, Id skip, Id other);  // alpha{1} * skip + other
    Id sigmoid(Id x);
    // Mean binary cross-entropy with predictions clamped to
    // [1e-7, 1-1e-7]; returns a scalar node.
    Id bce_mean(Id pred, Id target);

    const Tensor& value(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    bool requires_grad(Id id) const {
        return nodes_[static_cast<std::size_t>(id)].requires_grad;
    }
    // Zero tensor when nothing flowed back into the node.
    const Tensor& grad(Id id);

    void backward(Id loss_id);

    static constexpr double kBceClamp = 1e-7;

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool grad_alloc = false;
        std::function<void(Tape&)> back;
    };

    std::vector<Node> nodes_;
    bool record_ = true;

    Id push(Tensor value, bool requires_grad, std::function<void(Tape&)> back);
    Tensor& grad_buf(Id id);
    friend struct TapeOps;
};

}  // namespace keed::net
