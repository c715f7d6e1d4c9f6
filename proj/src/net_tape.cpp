#include "keed/net_tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace keed::net {

Tape::Id Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&)> back) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad && record_;
    if (record_ && requires_grad) node.back = std::move(back);
    nodes_.push_back(std::move(node));
    return static_cast<Id>(nodes_.size() - 1);
}

Tensor& Tape::grad_buf(Id id) {
    Node& node = nodes_[static_cast<std::size_t>(id)];
    if (!node.grad_alloc) {
        node.grad = Tensor(node.value.shape);
        node.grad_alloc = true;
    }
    return node.grad;
}

const Tensor& Tape::grad(Id id) {
    return grad_buf(id);
}

void Tape::backward(Id loss_id) {
    if (!record_) throw std::logic_error("Tape: backward on a non-recording tape");
    Tensor& seed = grad_buf(loss_id);
    std::fill(seed.v.begin(), seed.v.end(), 1.0);
    for (Id id = loss_id; id >= 0; --id) {
        Node& node = nodes_[static_cast<std::size_t>(id)];
        if (node.grad_alloc && node.back) node.back(*this);
    }
}

Tape::Id Tape::leaf(Tensor value, bool requires_grad) {
    return push(std::move(value), requires_grad, nullptr);
}

Tape::Id Tape::conv1d(Id xi, Id wi, Id bi) {
    const Tensor& x = value(xi);
    const Tensor& w = value(wi);
    const Tensor& b = value(bi);
    if (x.shape.size() != 3 || w.shape.size() != 3 || b.shape.size() != 1)
        throw std::invalid_argument("conv1d: rank mismatch");
    const std::size_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
    const std::size_t cout = w.dim(0), taps = w.dim(2);
    if (w.dim(1) != cin || b.dim(0) != cout) throw std::invalid_argument("conv1d: shape mismatch");
    if (taps % 2 == 0) throw std::invalid_argument("conv1d: kernel must have odd taps");
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(taps / 2);
    const std::ptrdiff_t slen = static_cast<std::ptrdiff_t>(len);

    Tensor y({batch, cout, len});
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t co = 0; co < cout; ++co) {
            double* yr = &y.v[(n * cout + co) * len];
            const double bias = b.v[co];
            for (std::size_t j = 0; j < len; ++j) yr[j] = bias;
            for (std::size_t ci = 0; ci < cin; ++ci) {
                const double* xr = &x.v[(n * cin + ci) * len];
                const double* wr = &w.v[(co * cin + ci) * taps];
                for (std::size_t t = 0; t < taps; ++t) {
                    const double wv = wr[t];
                    const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(t) - pad;
                    const std::ptrdiff_t j0 = std::max<std::ptrdiff_t>(0, -off);
                    const std::ptrdiff_t j1 = std::min<std::ptrdiff_t>(slen, slen - off);
                    for (std::ptrdiff_t j = j0; j < j1; ++j) yr[j] += wv * xr[j + off];
                }
            }
        }
    }

    const bool needs = requires_grad(xi) || requires_grad(wi) || requires_grad(bi);
    Id yi = push(std::move(y), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(yi)].back = [this, xi, wi, bi, yi, batch, cin, cout, len,
                                                     taps, pad, slen](Tape& tape) {
            const Tensor& dy = tape.grad_buf(yi);
            const Tensor& xv = tape.value(xi);
            const Tensor& wv = tape.value(wi);
            const bool need_x = tape.requires_grad(xi);
            const bool need_w = tape.requires_grad(wi);
            const bool need_b = tape.requires_grad(bi);
            if (need_b) {
                Tensor& db = tape.grad_buf(bi);
                for (std::size_t n = 0; n < batch; ++n) {
                    for (std::size_t co = 0; co < cout; ++co) {
                        const double* dyr = &dy.v[(n * cout + co) * len];
                        double acc = 0.0;
                        for (std::size_t j = 0; j < len; ++j) acc += dyr[j];
                        db.v[co] += acc;
                    }
                }
            }
            double* dw = need_w ? tape.grad_buf(wi).v.data() : nullptr;
            double* dx = need_x ? tape.grad_buf(xi).v.data() : nullptr;
            for (std::size_t n = 0; n < batch; ++n) {
                for (std::size_t co = 0; co < cout; ++co) {
                    const double* dyr = &dy.v[(n * cout + co) * len];
                    for (std::size_t ci = 0; ci < cin; ++ci) {
                        const double* xr = &xv.v[(n * cin + ci) * len];
                        const double* wr = &wv.v[(co * cin + ci) * taps];
                        double* dxr = need_x ? dx + (n * cin + ci) * len : nullptr;
                        for (std::size_t t = 0; t < taps; ++t) {
                            const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(t) - pad;
                            const std::ptrdiff_t j0 = std::max<std::ptrdiff_t>(0, -off);
                            const std::ptrdiff_t j1 = std::min<std::ptrdiff_t>(slen, slen - off);
                            if (need_w) {
                                double acc = 0.0;
                                for (std::ptrdiff_t j = j0; j < j1; ++j)
                                    acc += dyr[j] * xr[j + off];
                                dw[(co * cin + ci) * taps + t] += acc;
                            }
                            if (need_x) {
                                const double w = wr[t];
                                for (std::ptrdiff_t j = j0; j < j1; ++j)
                                    dxr[j + off] += w * dyr[j];
                            }
                        }
                    }
                }
            }
        };
    }
    return yi;
}

Tape::Id Tape::relu(Id xi) {
    const Tensor& x = value(xi);
    Tensor y(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) y.v[i] = x.v[i] > 0.0 ? x.v[i] : 0.0;
    const bool needs = requires_grad(xi);
    Id yi = push(std::move(y), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(yi)].back = [this, xi, yi](Tape& tape) {
            const Tensor& dy = tape.grad_buf(yi);
            const Tensor& xv = tape.value(xi);
            Tensor& dx = tape.grad_buf(xi);
            for (std::size_t i = 0; i < dx.numel(); ++i)
                if (xv.v[i] > 0.0) dx.v[i] += dy.v[i];
        };
    }
    return yi;
}

Tape::Id Tape::channel_norm(Id xi, Id si, Id shi) {
    constexpr double kEps = 1e-5;
    const Tensor& x = value(xi);
    const Tensor& scale = value(si);
    const Tensor& shift = value(shi);
    if (x.shape.size() != 3) throw std::invalid_argument("channel_norm: rank mismatch");
    const std::size_t batch = x.dim(0), ch = x.dim(1), len = x.dim(2);
    if (scale.dim(0) != ch || shift.dim(0) != ch)
        throw std::invalid_argument("channel_norm: scale/shift mismatch");

    Tensor y(x.shape);
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t c = 0; c < ch; ++c) {
            const double* xr = &x.v[(n * ch + c) * len];
            double* yr = &y.v[(n * ch + c) * len];
            double mean = 0.0;
            for (std::size_t j = 0; j < len; ++j) mean += xr[j];
            mean /= static_cast<double>(len);
            double var = 0.0;
            for (std::size_t j = 0; j < len; ++j) var += (xr[j] - mean) * (xr[j] - mean);
            var /= static_cast<double>(len);
            const double inv = 1.0 / std::sqrt(var + kEps);
            const double s = scale.v[c], sh = shift.v[c];
            for (std::size_t j = 0; j < len; ++j) yr[j] = s * (xr[j] - mean) * inv + sh;
        }
    }

    const bool needs = requires_grad(xi) || requires_grad(si) || requires_grad(shi);
    Id yi = push(std::move(y), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(yi)].back = [this, xi, si, shi, yi, batch, ch,
                                                     len](Tape& tape) {
            const Tensor& dy = tape.grad_buf(yi);
            const Tensor& xv = tape.value(xi);
            const Tensor& scale = tape.value(si);
            const bool need_x = tape.requires_grad(xi);
            const bool need_s = tape.requires_grad(si);
            const bool need_sh = tape.requires_grad(shi);
            double* dsh = need_sh ? tape.grad_buf(shi).v.data() : nullptr;
            double* ds = need_s ? tape.grad_buf(si).v.data() : nullptr;
            double* dx = need_x ? tape.grad_buf(xi).v.data() : nullptr;
            for (std::size_t n = 0; n < batch; ++n) {
                for (std::size_t c = 0; c < ch; ++c) {
                    const double* xr = &xv.v[(n * ch + c) * len];
                    const double* dyr = &dy.v[(n * ch + c) * len];
                    double mean = 0.0;
                    for (std::size_t j = 0; j < len; ++j) mean += xr[j];
                    mean /= static_cast<double>(len);
                    double var = 0.0;
                    for (std::size_t j = 0; j < len; ++j) var += (xr[j] - mean) * (xr[j] - mean);
                    var /= static_cast<double>(len);
                    const double inv = 1.0 / std::sqrt(var + kEps);
                    const double s = scale.v[c];

                    if (need_sh) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < len; ++j) acc += dyr[j];
                        dsh[c] += acc;
                    }
                    if (need_s) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < len; ++j)
                            acc += dyr[j] * (xr[j] - mean) * inv;
                        ds[c] += acc;
                    }
                    if (need_x) {
                        // dxhat = dy * s; then the usual normalization pullback.
                        double sum_dxhat = 0.0, sum_dxhat_xm = 0.0;
                        for (std::size_t j = 0; j < len; ++j) {
                            const double dxh = dyr[j] * s;
                            sum_dxhat += dxh;
                            sum_dxhat_xm += dxh * (xr[j] - mean);
                        }
                        const double dvar = sum_dxhat_xm * (-0.5) * inv * inv * inv;
                        const double dmean = -inv * sum_dxhat;
                        double* dxr = dx + (n * ch + c) * len;
                        const double ln = static_cast<double>(len);
                        for (std::size_t j = 0; j < len; ++j) {
                            dxr[j] += dyr[j] * s * inv + dvar * 2.0 * (xr[j] - mean) / ln +
                                      dmean / ln;
                        }
                    }
                }
            }
        };
    }
    return yi;
}

Tape::Id Tape::maxpool2(Id xi) {
    const Tensor& x = value(xi);
    if (x.shape.size() != 3 || x.dim(2) % 2 != 0)
        throw std::invalid_argument("maxpool2: needs rank 3 with even length");
    const std::size_t batch = x.dim(0), ch = x.dim(1), len = x.dim(2), half = len / 2;
    Tensor y({batch, ch, half});
    auto arg = std::make_shared<std::vector<std::uint8_t>>(batch * ch * half);
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t c = 0; c < ch; ++c) {
            const double* xr = &x.v[(n * ch + c) * len];
            double* yr = &y.v[(n * ch + c) * half];
            std::uint8_t* ar = &(*arg)[(n * ch + c) * half];
            for (std::size_t j = 0; j < half; ++j) {
                const double a = xr[2 * j], b = xr[2 * j + 1];
                if (a >= b) {  // ties keep the first slot
                    yr[j] = a;
                    ar[j] = 0;
                } else {
                    yr[j] = b;
                    ar[j] = 1;
                }
            }
        }
    }
    const bool needs = requires_grad(xi);
    Id yi = push(std::move(y), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(yi)].back = [this, xi, yi, arg, batch, ch,
                                                     half](Tape& tape) {
            const Tensor& dy = tape.grad_buf(yi);
            Tensor& dx = tape.grad_buf(xi);
            const std::size_t len = half * 2;
            for (std::size_t n = 0; n < batch; ++n) {
                for (std::size_t c = 0; c < ch; ++c) {
                    const double* dyr = &dy.v[(n * ch + c) * half];
                    double* dxr = &dx.v[(n * ch + c) * len];
                    const std::uint8_t* ar = &(*arg)[(n * ch + c) * half];
                    for (std::size_t j = 0; j < half; ++j) dxr[2 * j + ar[j]] += dyr[j];
                }
            }
        };
    }
    return yi;
}

Tape::Id Tape::upsample2(Id xi) {
    const Tensor& x = value(xi);
    if (x.shape.size() != 3) throw std::invalid_argument("upsample2: needs rank 3");
    const std::size_t batch = x.dim(0), ch = x.dim(1), len = x.dim(2);
    Tensor y({batch, ch, len * 2});
    for (std::size_t i = 0; i < batch * ch; ++i) {
        const double* xr = &x.v[i * len];
        double* yr = &y.v[i * len * 2];
        for (std::size_t j = 0; j < len; ++j) {
            yr[2 * j] = xr[j];
            yr[2 * j + 1] = xr[j];
        }
    }
    const bool needs = requires_grad(xi);
    Id yi = push(std::move(y), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(yi)].back = [this, xi, yi, batch, ch, len](Tape& tape) {
            const Tensor& dy = tape.grad_buf(yi);
            Tensor& dx = tape.grad_buf(xi);
            for (std::size_t i = 0; i < batch * ch; ++i) {
                const double* dyr = &dy.v[i * len * 2];
                double* dxr = &dx.v[i * len];
                for (std::size_t j = 0; j < len; ++j) dxr[j] += dyr[2 * j] + dyr[2 * j + 1];
            }
        };
    }
    return yi;
}

Tape::Id Tape::gate_add(Id ai, Id skipi, Id otheri) {
    const Tensor& alpha = value(ai);
    const Tensor& skip = value(skipi);
    const Tensor& other = value(otheri);
    if (alpha.numel() != 1) throw std::invalid_argument("gate_add: alpha must be scalar");
    if (!skip.same_shape(other)) throw std::invalid_argument("gate_add: shape mismatch");
    const double a = alpha.v[0];
    Tensor y(skip.shape);
    for (std::size_t i = 0; i < y.numel(); ++i) y.v[i] = a * skip.v[i] + other.v[i];
    const bool needs = requires_grad(ai) || requires_grad(skipi) || requires_grad(otheri);
    Id yi = push(std::move(y), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(yi)].back = [this, ai, skipi, otheri, yi](Tape& tape) {
            const Tensor& dy = tape.grad_buf(yi);
            const Tensor& skip = tape.value(skipi);
            const double a = tape.value(ai).v[0];
            if (tape.requires_grad(ai)) {
                double acc = 0.0;
                for (std::size_t i = 0; i < dy.numel(); ++i) acc += skip.v[i] * dy.v[i];
                tape.grad_buf(ai).v[0] += acc;
            }
            if (tape.requires_grad(skipi)) {
                Tensor& ds = tape.grad_buf(skipi);
                for (std::size_t i = 0; i < dy.numel(); ++i) ds.v[i] += a * dy.v[i];
            }
            if (tape.requires_grad(otheri)) {
                Tensor& do_ = tape.grad_buf(otheri);
                for (std::size_t i = 0; i < dy.numel(); ++i) do_.v[i] += dy.v[i];
            }
        };
    }
    return yi;
}

Tape::Id Tape::sigmoid(Id xi) {
    const Tensor& x = value(xi);
    Tensor y(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) y.v[i] = 1.0 / (1.0 + std::exp(-x.v[i]));
    const bool needs = requires_grad(xi);
    Id yi = push(std::move(y), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(yi)].back = [this, xi, yi](Tape& tape) {
            const Tensor& dy = tape.grad_buf(yi);
            const Tensor& yv = tape.value(yi);
            Tensor& dx = tape.grad_buf(xi);
            for (std::size_t i = 0; i < dx.numel(); ++i)
                dx.v[i] += dy.v[i] * yv.v[i] * (1.0 - yv.v[i]);
        };
    }
    return yi;
}

Tape::Id Tape::bce_mean(Id pi, Id ti) {
    const Tensor& p = value(pi);
    const Tensor& t = value(ti);
    if (!p.same_shape(t)) throw std::invalid_argument("bce_mean: shape mismatch");
    const double lo = kBceClamp, hi = 1.0 - kBceClamp;
    double acc = 0.0;
    for (std::size_t i = 0; i < p.numel(); ++i) {
        const double pc = std::clamp(p.v[i], lo, hi);
        acc += -(t.v[i] * std::log(pc) + (1.0 - t.v[i]) * std::log(1.0 - pc));
    }
    Tensor y({1});
    y.v[0] = acc / static_cast<double>(p.numel());
    const bool needs = requires_grad(pi);
    Id yi = push(std::move(y), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(yi)].back = [this, pi, ti, yi, lo, hi](Tape& tape) {
            const double dl = tape.grad_buf(yi).v[0];
            const Tensor& p = tape.value(pi);
            const Tensor& t = tape.value(ti);
            Tensor& dp = tape.grad_buf(pi);
            const double inv_n = 1.0 / static_cast<double>(p.numel());
            for (std::size_t i = 0; i < p.numel(); ++i) {
                if (p.v[i] <= lo || p.v[i] >= hi) continue;  // clamped: flat
                dp.v[i] += dl * inv_n * (-t.v[i] / p.v[i] + (1.0 - t.v[i]) / (1.0 - p.v[i]));
            }
        };
    }
    return yi;
}

}  // namespace keed::net
