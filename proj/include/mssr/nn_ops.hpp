#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "mssr/parallel.hpp"
#include "mssr/random.hpp"
#include "mssr/tensor.hpp"

namespace mssr {

// Parameters of one 3x3 dilated convolution layer. padding == dilation keeps
// output spatial dims equal to the input's, which every network layer relies
// on.
template <typename T>
struct ConvParams {
    Tensor<T> weights;    // (C_out, C_in, 3, 3)
    std::vector<T> bias;  // C_out
    int dilation = 1;
    int padding = 1;

    int out_channels() const { return weights.dims().n; }
    int in_channels() const { return weights.dims().c; }
};

namespace detail {

struct ConvShape {
    int h_out;
    int w_out;
};

template <typename T>
inline ConvShape conv_output_shape(const Tensor<T>& input, const ConvParams<T>& p) {
    if (p.dilation < 1 || p.padding < 0) {
        throw ArgumentError("conv: dilation must be >= 1 and padding >= 0");
    }
    if (p.weights.dims().h != 3 || p.weights.dims().w != 3) {
        throw ShapeError("conv: kernel must be 3x3, got " + p.weights.dims().to_string());
    }
    if (static_cast<int>(p.bias.size()) != p.out_channels()) {
        throw ShapeError("conv: bias length != C_out");
    }
    if (input.dims().c != p.in_channels()) {
        throw ShapeError("conv: input channels " + std::to_string(input.dims().c) +
                         " != kernel C_in " + std::to_string(p.in_channels()));
    }
    const int extent = 2 * p.dilation + 1;
    const int h_out = input.dims().h + 2 * p.padding - 2 * p.dilation;
    const int w_out = input.dims().w + 2 * p.padding - 2 * p.dilation;
    if (input.dims().h + 2 * p.padding < extent || input.dims().w + 2 * p.padding < extent) {
        throw ShapeError("conv: padded input smaller than dilated kernel extent " +
                         std::to_string(extent));
    }
    return {h_out, w_out};
}

}  // namespace detail

// out[n,o,y,x] = bias[o] + sum_{c,ky,kx} input[n,c, y-p+l*ky, x-p+l*kx] * w[o,c,ky,kx]
// with zero contribution outside the input. Per-element accumulation order is
// (c, ky, kx), matching the naive quadruple loop bit for bit; parallelism is
// over independent (n, o) output planes only.
template <typename T>
Tensor<T> dilated_conv2d_forward(const Tensor<T>& input, const ConvParams<T>& p) {
    const auto shape = detail::conv_output_shape(input, p);
    const int batch = input.dims().n;
    const int c_in = input.dims().c;
    const int c_out = p.out_channels();
    const int h_in = input.dims().h;
    const int w_in = input.dims().w;
    const int h_out = shape.h_out;
    const int w_out = shape.w_out;
    const int l = p.dilation;
    const int pad = p.padding;

    Tensor<T> out = Tensor<T>::uninitialized({batch, c_out, h_out, w_out});

    parallel_chunks(static_cast<std::size_t>(batch) * c_out, [&](std::size_t begin, std::size_t end) {
        for (std::size_t unit = begin; unit < end; ++unit) {
            const int n = static_cast<int>(unit) / c_out;
            const int o = static_cast<int>(unit) % c_out;
            T* out_plane = out.plane(n, o);
            const T b = p.bias[o];
            std::fill(out_plane, out_plane + static_cast<std::size_t>(h_out) * w_out, b);
            for (int c = 0; c < c_in; ++c) {
                const T* in_plane = input.plane(n, c);
                for (int ky = 0; ky < 3; ++ky) {
                    const int dy = l * ky - pad;
                    // rows where y + dy lands inside the input
                    const int y_lo = std::max(0, -dy);
                    const int y_hi = std::min(h_out, h_in - dy);
                    for (int kx = 0; kx < 3; ++kx) {
                        const int dx = l * kx - pad;
                        const int x_lo = std::max(0, -dx);
                        const int x_hi = std::min(w_out, w_in - dx);
                        if (x_lo >= x_hi || y_lo >= y_hi) {
                            continue;
                        }
                        const T w = p.weights.at(o, c, ky, kx);
                        for (int y = y_lo; y < y_hi; ++y) {
                            T* orow = out_plane + static_cast<std::size_t>(y) * w_out;
                            const T* irow = in_plane + static_cast<std::size_t>(y + dy) * w_in + dx;
                            for (int x = x_lo; x < x_hi; ++x) {
                                orow[x] += w * irow[x];
                            }
                        }
                    }
                }
            }
        }
    });
    return out;
}

template <typename T>
struct ConvGrads {
    Tensor<T> input;        // empty when not requested
    Tensor<T> weights;      // same dims as params.weights
    std::vector<T> bias;    // length C_out
};

// Analytic adjoint of dilated_conv2d_forward. Accumulation orders are fixed
// per output element, so results are independent of the thread count.
template <typename T>
ConvGrads<T> dilated_conv2d_backward(const Tensor<T>& input, const ConvParams<T>& p,
                                     const Tensor<T>& grad_out, bool need_grad_input = true) {
    const auto shape = detail::conv_output_shape(input, p);
    const int batch = input.dims().n;
    const int c_in = input.dims().c;
    const int c_out = p.out_channels();
    const int h_in = input.dims().h;
    const int w_in = input.dims().w;
    const int h_out = shape.h_out;
    const int w_out = shape.w_out;
    const int l = p.dilation;
    const int pad = p.padding;

    if (grad_out.dims() != Dims{batch, c_out, h_out, w_out}) {
        throw ShapeError("conv backward: grad_out dims " + grad_out.dims().to_string() +
                         " do not match forward output " +
                         Dims{batch, c_out, h_out, w_out}.to_string());
    }

    ConvGrads<T> grads;
    grads.weights = Tensor<T>::zeros(p.weights.dims());
    grads.bias.assign(static_cast<std::size_t>(c_out), T(0));

    // grad_bias[o] = sum over n,y,x of grad_out; grad_weights[o,c,ky,kx] =
    // sum over n,y,x of grad_out * shifted input. One (o,c) pair per unit.
    // Reductions run over kLanes fixed interleaved partial sums folded in a
    // fixed order, so results stay deterministic while the lane loop
    // vectorizes.
    constexpr int kLanes = 16;
    parallel_chunks(static_cast<std::size_t>(c_out) * c_in, [&](std::size_t begin, std::size_t end) {
        for (std::size_t unit = begin; unit < end; ++unit) {
            const int o = static_cast<int>(unit) / c_in;
            const int c = static_cast<int>(unit) % c_in;
            for (int ky = 0; ky < 3; ++ky) {
                const int dy = l * ky - pad;
                const int y_lo = std::max(0, -dy);
                const int y_hi = std::min(h_out, h_in - dy);
                for (int kx = 0; kx < 3; ++kx) {
                    const int dx = l * kx - pad;
                    const int x_lo = std::max(0, -dx);
                    const int x_hi = std::min(w_out, w_in - dx);
                    T lanes[kLanes] = {};
                    T tail = T(0);
                    for (int n = 0; n < batch; ++n) {
                        const T* go_plane = grad_out.plane(n, o);
                        const T* in_plane = input.plane(n, c);
                        for (int y = y_lo; y < y_hi; ++y) {
                            const T* grow = go_plane + static_cast<std::size_t>(y) * w_out;
                            const T* irow = in_plane + static_cast<std::size_t>(y + dy) * w_in + dx;
                            int x = x_lo;
                            for (; x + kLanes <= x_hi; x += kLanes) {
                                for (int j = 0; j < kLanes; ++j) {
                                    lanes[j] += grow[x + j] * irow[x + j];
                                }
                            }
                            for (; x < x_hi; ++x) {
                                tail += grow[x] * irow[x];
                            }
                        }
                    }
                    T acc = T(0);
                    for (int j = 0; j < kLanes; ++j) {
                        acc += lanes[j];
                    }
                    grads.weights.at(o, c, ky, kx) = acc + tail;
                }
            }
            if (c == 0) {
                T lanes[kLanes] = {};
                T tail = T(0);
                for (int n = 0; n < batch; ++n) {
                    const T* go_plane = grad_out.plane(n, o);
                    const std::size_t count = static_cast<std::size_t>(h_out) * w_out;
                    std::size_t i = 0;
                    for (; i + kLanes <= count; i += kLanes) {
                        for (int j = 0; j < kLanes; ++j) {
                            lanes[j] += go_plane[i + j];
                        }
                    }
                    for (; i < count; ++i) {
                        tail += go_plane[i];
                    }
                }
                T acc = T(0);
                for (int j = 0; j < kLanes; ++j) {
                    acc += lanes[j];
                }
                grads.bias[o] = acc + tail;
            }
        }
    });

    if (need_grad_input) {
        grads.input = Tensor<T>::zeros(input.dims());
        // grad_input[n,c,iy,ix] += w[o,c,ky,kx] * grad_out[n,o,iy-dy,ix-dx]
        parallel_chunks(static_cast<std::size_t>(batch) * c_in, [&](std::size_t begin, std::size_t end) {
            for (std::size_t unit = begin; unit < end; ++unit) {
                const int n = static_cast<int>(unit) / c_in;
                const int c = static_cast<int>(unit) % c_in;
                T* gi_plane = grads.input.plane(n, c);
                for (int o = 0; o < c_out; ++o) {
                    const T* go_plane = grad_out.plane(n, o);
                    for (int ky = 0; ky < 3; ++ky) {
                        const int dy = l * ky - pad;
                        const int y_lo = std::max(0, -dy);
                        const int y_hi = std::min(h_out, h_in - dy);
                        for (int kx = 0; kx < 3; ++kx) {
                            const int dx = l * kx - pad;
                            const int x_lo = std::max(0, -dx);
                            const int x_hi = std::min(w_out, w_in - dx);
                            if (x_lo >= x_hi || y_lo >= y_hi) {
                                continue;
                            }
                            const T w = p.weights.at(o, c, ky, kx);
                            for (int y = y_lo; y < y_hi; ++y) {
                                T* girow = gi_plane + static_cast<std::size_t>(y + dy) * w_in + dx;
                                const T* grow = go_plane + static_cast<std::size_t>(y) * w_out;
                                for (int x = x_lo; x < x_hi; ++x) {
                                    girow[x] += w * grow[x];
                                }
                            }
                        }
                    }
                }
            }
        });
    }
    return grads;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
    Tensor<T> out = Tensor<T>::uninitialized(x.dims());
    const T* px = x.data();
    T* po = out.data();
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        po[i] = px[i] > T(0) ? px[i] : T(0);
    }
    return out;
}

// Subgradient at exactly 0 is 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
    if (x.dims() != grad_out.dims()) {
        throw ShapeError("relu_backward: dims mismatch " + x.dims().to_string() + " vs " +
                         grad_out.dims().to_string());
    }
    Tensor<T> out = Tensor<T>::uninitialized(x.dims());
    const T* px = x.data();
    const T* pg = grad_out.data();
    T* po = out.data();
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        po[i] = px[i] > T(0) ? pg[i] : T(0);
    }
    return out;
}

// Channel concatenation in input order; all inputs must share N, H, W.
template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>> inputs) {
    if (inputs.empty()) {
        throw ArgumentError("concat_channels: empty input list");
    }
    const Dims first = inputs[0].dims();
    int c_total = 0;
    for (const Tensor<T>& t : inputs) {
        if (t.dims().n != first.n || t.dims().h != first.h || t.dims().w != first.w) {
            throw ShapeError("concat_channels: N/H/W mismatch " + t.dims().to_string() +
                             " vs " + first.to_string());
        }
        c_total += t.dims().c;
    }
    Tensor<T> out = Tensor<T>::uninitialized({first.n, c_total, first.h, first.w});
    const std::size_t plane_sz = static_cast<std::size_t>(first.h) * first.w;
    for (int n = 0; n < first.n; ++n) {
        int c_off = 0;
        for (const Tensor<T>& t : inputs) {
            for (int c = 0; c < t.dims().c; ++c) {
                std::copy_n(t.plane(n, c), plane_sz, out.plane(n, c_off + c));
            }
            c_off += t.dims().c;
        }
    }
    return out;
}

// Adjoint of concat_channels: slices along C in order.
template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& t, std::span<const int> sizes) {
    int total = 0;
    for (const int s : sizes) {
        total += s;
    }
    if (total != t.dims().c) {
        throw ShapeError("split_channels: sizes sum " + std::to_string(total) +
                         " != C " + std::to_string(t.dims().c));
    }
    std::vector<Tensor<T>> out;
    out.reserve(sizes.size());
    const std::size_t plane_sz = static_cast<std::size_t>(t.dims().h) * t.dims().w;
    int c_off = 0;
    for (const int s : sizes) {
        Tensor<T> piece = Tensor<T>::uninitialized({t.dims().n, s, t.dims().h, t.dims().w});
        for (int n = 0; n < t.dims().n; ++n) {
            for (int c = 0; c < s; ++c) {
                std::copy_n(t.plane(n, c_off + c), plane_sz, piece.plane(n, c));
            }
        }
        c_off += s;
        out.push_back(std::move(piece));
    }
    return out;
}

template <typename T>
struct LossResult {
    double loss = 0.0;
    Tensor<T> grad_pred;
};

// loss = sum((pred - target)^2) / (2 * B * P) where P is the per-sample
// element count, so reported magnitudes are independent of batch and patch
// size. grad is the exact gradient of that scalar.
template <typename T>
LossResult<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    if (pred.dims() != target.dims()) {
        throw ShapeError("mse_loss: dims mismatch " + pred.dims().to_string() + " vs " +
                         target.dims().to_string());
    }
    LossResult<T> result;
    result.grad_pred = Tensor<T>::uninitialized(pred.dims());
    const T* pp = pred.data();
    const T* pt = target.data();
    T* pg = result.grad_pred.data();
    const std::size_t n = pred.size();
    const double inv_norm = 1.0 / static_cast<double>(n);  // 1/(B*P)
    double sum = 0.0;
    double comp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(pp[i]) - static_cast<double>(pt[i]);
        pg[i] = static_cast<T>(d * inv_norm);
        const double sq = d * d;
        const double y = sq - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    result.loss = 0.5 * sum * inv_norm;
    return result;
}

// Uniform(-b, b) with b = sqrt(6 / fan_in); deterministic per rng state.
template <typename T>
Tensor<T> he_uniform_init(Dims dims, int fan_in, std::mt19937_64& rng) {
    if (fan_in < 1) {
        throw ArgumentError("he_uniform_init: fan_in must be >= 1");
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    Tensor<T> out = Tensor<T>::uninitialized(dims);
    for (T& v : out.values()) {
        v = static_cast<T>((2.0 * uniform_unit(rng) - 1.0) * bound);
    }
    return out;
}

}  // namespace mssr
