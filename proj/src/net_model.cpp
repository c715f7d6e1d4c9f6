#include "keed/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

#include "keed/net_tape.hpp"

namespace keed::net {

void ModelConfig::validate() const {
    if (width < 1 || depth < 1 || n_blocks < 1 || keypoints < 1)
        throw std::invalid_argument("ModelConfig: width, depth, n_blocks, keypoints must be >= 1");
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw std::invalid_argument("ModelConfig: kernel_size must be odd and >= 1");
    if (length < 2) throw std::invalid_argument("ModelConfig: length must be >= 2");
    if (length % (1 << depth) != 0)
        throw std::invalid_argument("ModelConfig: length must be divisible by 2^depth");
}

int Parameters::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

Tensor& Parameters::operator[](const std::string& name) {
    const int i = index_of(name);
    if (i < 0) throw std::out_of_range("Parameters: unknown tensor " + name);
    return tensors[static_cast<std::size_t>(i)];
}

const Tensor& Parameters::operator[](const std::string& name) const {
    const int i = index_of(name);
    if (i < 0) throw std::out_of_range("Parameters: unknown tensor " + name);
    return tensors[static_cast<std::size_t>(i)];
}

namespace {

void add_tensor(Parameters& p, const std::string& name, std::vector<std::size_t> shape) {
    p.names.push_back(name);
    p.tensors.emplace_back(std::move(shape));
}

void add_residual_unit(Parameters& p, const std::string& prefix, std::size_t width,
                       std::size_t taps) {
    add_tensor(p, prefix + ".n1.s", {width});
    add_tensor(p, prefix + ".n1.b", {width});
    add_tensor(p, prefix + ".c1.w", {width, width, taps});
    add_tensor(p, prefix + ".c1.b", {width});
    add_tensor(p, prefix + ".n2.s", {width});
    add_tensor(p, prefix + ".n2.b", {width});
    add_tensor(p, prefix + ".c2.w", {width, width, taps});
    add_tensor(p, prefix + ".c2.b", {width});
    add_tensor(p, prefix + ".gate", {1});
}

}  // namespace

Parameters parameter_layout(const ModelConfig& cfg) {
    cfg.validate();
    const std::size_t w = static_cast<std::size_t>(cfg.width);
    const std::size_t k = static_cast<std::size_t>(cfg.kernel_size);
    Parameters p;
    add_tensor(p, "stem.w", {w, 1, k});
    add_tensor(p, "stem.b", {w});
    for (int b = 0; b < cfg.n_blocks; ++b) {
        const std::string bp = "b" + std::to_string(b);
        for (int l = 0; l < cfg.depth; ++l)
            add_residual_unit(p, bp + ".enc" + std::to_string(l) + ".res", w, k);
        for (int l = cfg.depth - 1; l >= 0; --l) {
            const std::string lp = bp + ".dec" + std::to_string(l);
            add_tensor(p, lp + ".up.w", {w, w, k});
            add_tensor(p, lp + ".up.b", {w});
            add_tensor(p, bp + ".skip" + std::to_string(l) + ".gate", {1});
            add_residual_unit(p, lp + ".res", w, k);
        }
    }
    add_tensor(p, "head.w", {static_cast<std::size_t>(cfg.keypoints), w, 1});
    add_tensor(p, "head.b", {static_cast<std::size_t>(cfg.keypoints)});
    return p;
}

Parameters init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
    Parameters p = parameter_layout(cfg);
    std::mt19937_64 rng(seed);
    auto next_uniform = [&rng](double lo, double hi) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    };
    for (std::size_t i = 0; i < p.size(); ++i) {
        const std::string& name = p.names[i];
        Tensor& t = p.tensors[i];
        if (name.ends_with(".w")) {
            const double fan_in =
                static_cast<double>(t.dim(1)) * static_cast<double>(t.dim(2));
            const double bound = 1.0 / std::sqrt(fan_in);
            for (double& v : t.v) v = next_uniform(-bound, bound);
        } else if (name.ends_with(".gate") || name.ends_with(".s")) {
            for (double& v : t.v) v = 1.0;
        }
        // biases (.b) and norm shifts stay zero
    }
    return p;
}

namespace {

struct ParamIds {
    std::vector<Tape::Id> ids;
    const Parameters* params = nullptr;

    Tape::Id operator[](const std::string& name) const {
        const int i = params->index_of(name);
        if (i < 0) throw std::out_of_range("forward: missing parameter " + name);
        return ids[static_cast<std::size_t>(i)];
    }
};

Tape::Id build_residual(Tape& tape, const ParamIds& pid, const std::string& prefix, Tape::Id x) {
    Tape::Id h = tape.channel_norm(x, pid[prefix + ".n1.s"], pid[prefix + ".n1.b"]);
    h = tape.relu(h);
    h = tape.conv1d(h, pid[prefix + ".c1.w"], pid[prefix + ".c1.b"]);
    h = tape.channel_norm(h, pid[prefix + ".n2.s"], pid[prefix + ".n2.b"]);
    h = tape.relu(h);
    h = tape.conv1d(h, pid[prefix + ".c2.w"], pid[prefix + ".c2.b"]);
    return tape.gate_add(pid[prefix + ".gate"], x, h);  // gate * identity + branch
}

Tape::Id build_forward(Tape& tape, const Parameters& params, const ModelConfig& cfg,
                       Tape::Id input, const std::vector<SkipOverride>* overrides) {
    ParamIds pid;
    pid.params = &params;
    pid.ids.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
        pid.ids.push_back(tape.leaf(params.tensors[i], true));

    Tape::Id feat = tape.conv1d(input, pid["stem.w"], pid["stem.b"]);
    for (int b = 0; b < cfg.n_blocks; ++b) {
        const std::string bp = "b" + std::to_string(b);
        std::vector<Tape::Id> skips;
        Tape::Id cur = feat;
        for (int l = 0; l < cfg.depth; ++l) {
            cur = build_residual(tape, pid, bp + ".enc" + std::to_string(l) + ".res", cur);
            skips.push_back(cur);
            cur = tape.maxpool2(cur);
        }
        for (int l = cfg.depth - 1; l >= 0; --l) {
            const std::string lp = bp + ".dec" + std::to_string(l);
            cur = tape.upsample2(cur);
            cur = tape.conv1d(cur, pid[lp + ".up.w"], pid[lp + ".up.b"]);
            Tape::Id skip = skips[static_cast<std::size_t>(l)];
            if (overrides) {
                for (const SkipOverride& ov : *overrides) {
                    if (ov.block == b && ov.level == l) {
                        if (!ov.tensor.same_shape(tape.value(skip)))
                            throw std::invalid_argument("SkipOverride: shape mismatch");
                        skip = tape.leaf(ov.tensor, false);
                    }
                }
            }
            cur = tape.gate_add(pid[bp + ".skip" + std::to_string(l) + ".gate"], skip, cur);
            cur = build_residual(tape, pid, lp + ".res", cur);
        }
        feat = cur;
    }
    Tape::Id logits = tape.conv1d(feat, pid["head.w"], pid["head.b"]);
    return tape.sigmoid(logits);
}

Tensor reshape_batch(const Tensor& batch, const ModelConfig& cfg) {
    if (batch.shape.size() == 2) {
        if (batch.dim(1) != static_cast<std::size_t>(cfg.length))
            throw std::invalid_argument("model_forward: input length mismatch");
        Tensor x({batch.dim(0), 1, batch.dim(1)});
        x.v = batch.v;
        return x;
    }
    if (batch.shape.size() == 3 && batch.dim(1) == 1 &&
        batch.dim(2) == static_cast<std::size_t>(cfg.length))
        return batch;
    throw std::invalid_argument("model_forward: expected a {B, L} batch");
}

void check_finite(const Tensor& t, const char* what) {
    for (double v : t.v) {
        if (!std::isfinite(v)) throw std::runtime_error(std::string(what) + ": non-finite values");
    }
}

void check_params_match(const Parameters& params, const ModelConfig& cfg) {
    const Parameters layout = parameter_layout(cfg);
    if (params.names != layout.names)
        throw std::invalid_argument("model: parameter names do not match the config");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params.tensors[i].shape != layout.tensors[i].shape)
            throw std::invalid_argument("model: parameter shape mismatch at " + params.names[i]);
    }
}

}  // namespace

Tensor model_forward_hooked(const Parameters& params, const ModelConfig& cfg, const Tensor& batch,
                            const std::vector<SkipOverride>& overrides) {
    check_params_match(params, cfg);
    const Tensor x = reshape_batch(batch, cfg);
    check_finite(x, "model_forward input");
    Tape tape(false);
    const Tape::Id input = tape.leaf(x, false);
    const Tape::Id out = build_forward(tape, params, cfg, input, &overrides);
    Tensor result = tape.value(out);
    check_finite(result, "model_forward output");
    return result;
}

Tensor model_forward(const Parameters& params, const ModelConfig& cfg, const Tensor& batch) {
    return model_forward_hooked(params, cfg, batch, {});
}

double bce_loss(const Tensor& pred, const Tensor& target) {
    if (!pred.same_shape(target)) throw std::invalid_argument("bce_loss: shape mismatch");
    const double lo = Tape::kBceClamp, hi = 1.0 - Tape::kBceClamp;
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        const double p = std::clamp(pred.v[i], lo, hi);
        acc += -(target.v[i] * std::log(p) + (1.0 - target.v[i]) * std::log(1.0 - p));
    }
    return acc / static_cast<double>(pred.numel());
}

BackwardResult backward(const Parameters& params, const ModelConfig& cfg, const Tensor& batch,
                        const Tensor& target) {
    check_params_match(params, cfg);
    const Tensor x = reshape_batch(batch, cfg);
    check_finite(x, "backward input");
    if (target.shape.size() != 3 || target.dim(0) != x.dim(0) ||
        target.dim(1) != static_cast<std::size_t>(cfg.keypoints) ||
        target.dim(2) != static_cast<std::size_t>(cfg.length))
        throw std::invalid_argument("backward: target must be {B, K, L}");

    Tape tape(true);
    const Tape::Id input = tape.leaf(x, false);
    // Leaves are created first, in parameter order.
    const Tape::Id first_param = 1;
    const Tape::Id out = build_forward(tape, params, cfg, input, nullptr);
    const Tape::Id target_id = tape.leaf(target, false);
    const Tape::Id loss_id = tape.bce_mean(out, target_id);
    tape.backward(loss_id);

    BackwardResult result;
    result.loss = tape.value(loss_id).v[0];
    if (!std::isfinite(result.loss)) throw std::runtime_error("backward: non-finite loss");
    result.grads = parameter_layout(cfg);
    for (std::size_t i = 0; i < params.size(); ++i)
        result.grads.tensors[i] = tape.grad(first_param + static_cast<Tape::Id>(i));
    return result;
}

void adam_step(Parameters& params, const Parameters& grads, OptimizerState& state) {
    if (params.names != grads.names)
        throw std::invalid_argument("adam_step: gradient layout mismatch");
    if (state.m.empty()) {
        for (const Tensor& t : params.tensors) {
            state.m.emplace_back(t.shape);
            state.v.emplace_back(t.shape);
        }
    }
    if (state.m.size() != params.size())
        throw std::invalid_argument("adam_step: optimizer state mismatch");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& theta = params.tensors[i];
        const Tensor& g = grads.tensors[i];
        if (!theta.same_shape(g)) throw std::invalid_argument("adam_step: shape mismatch");
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        for (std::size_t j = 0; j < theta.numel(); ++j) {
            const double grad = g.v[j] + state.weight_decay * theta.v[j];
            m.v[j] = state.beta1 * m.v[j] + (1.0 - state.beta1) * grad;
            v.v[j] = state.beta2 * v.v[j] + (1.0 - state.beta2) * grad * grad;
            const double mhat = m.v[j] / bc1;
            const double vhat = v.v[j] / bc2;
            theta.v[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

namespace {

constexpr char kMagic[5] = {'K', 'E', 'E', 'D', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    put_u64(out, bits);
}

struct Reader {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > bytes.size()) throw std::runtime_error("load_weights: truncated file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + static_cast<std::size_t>(i)]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos + static_cast<std::size_t>(i)]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double d;
        std::memcpy(&d, &bits, sizeof(d));
        return d;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
        pos += n;
        return s;
    }
};

}  // namespace

std::vector<std::uint8_t> save_weights(const Parameters& params, const ModelConfig& cfg) {
    check_params_match(params, cfg);
    for (const Tensor& t : params.tensors) check_finite(t, "save_weights");
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 5);
    put_u32(out, static_cast<std::uint32_t>(cfg.width));
    put_u32(out, static_cast<std::uint32_t>(cfg.depth));
    put_u32(out, static_cast<std::uint32_t>(cfg.n_blocks));
    put_u32(out, static_cast<std::uint32_t>(cfg.length));
    put_u32(out, static_cast<std::uint32_t>(cfg.keypoints));
    put_u32(out, static_cast<std::uint32_t>(cfg.kernel_size));
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string& name = params.names[i];
        const Tensor& t = params.tensors[i];
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        for (std::size_t d : t.shape) put_u64(out, d);
        for (double v : t.v) put_f64(out, v);
    }
    return out;
}

std::pair<Parameters, ModelConfig> load_weights(const std::vector<std::uint8_t>& bytes) {
    Reader r{bytes};
    const std::string magic = r.str(5);
    if (magic != std::string(kMagic, 5)) throw std::runtime_error("load_weights: bad magic");
    ModelConfig cfg;
    cfg.width = static_cast<int>(r.u32());
    cfg.depth = static_cast<int>(r.u32());
    cfg.n_blocks = static_cast<int>(r.u32());
    cfg.length = static_cast<int>(r.u32());
    cfg.keypoints = static_cast<int>(r.u32());
    cfg.kernel_size = static_cast<int>(r.u32());
    cfg.validate();

    Parameters params;
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = r.u32();
        const std::string name = r.str(name_len);
        const std::uint32_t ndim = r.u32();
        std::vector<std::size_t> shape;
        for (std::uint32_t d = 0; d < ndim; ++d) shape.push_back(static_cast<std::size_t>(r.u64()));
        Tensor t(shape);
        for (double& v : t.v) v = r.f64();
        params.names.push_back(name);
        params.tensors.push_back(std::move(t));
    }
    if (r.pos != bytes.size()) throw std::runtime_error("load_weights: trailing bytes");
    check_params_match(params, cfg);
    return {std::move(params), cfg};
}

HeatmapSet slice_heatmaps(const Tensor& batch_output, std::size_t b) {
    if (batch_output.shape.size() != 3 || b >= batch_output.dim(0))
        throw std::invalid_argument("slice_heatmaps: bad index");
    const std::size_t k = batch_output.dim(1), l = batch_output.dim(2);
    HeatmapSet out({k, l});
    std::copy_n(&batch_output.v[b * k * l], k * l, out.v.begin());
    return out;
}

}  // namespace keed::net
