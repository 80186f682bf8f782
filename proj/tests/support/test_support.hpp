#pragma once

// Shared test-only helpers: deterministic pattern generators matching the
// golden-data generator bit for bit, the literal dilated-convolution oracle,
// and central finite-difference utilities. Nothing here may call into the
// implementation paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "mssr/imaging.hpp"
#include "mssr/nn_ops.hpp"
#include "mssr/tensor.hpp"

namespace testsup {

// Same LCG as gen_golden.py: s <- (1103515245 s + 12345) mod 2^31.
class Lcg {
public:
    explicit Lcg(std::uint32_t seed) : state_(seed & 0x7FFFFFFFu) {}

    float next() {
        state_ = static_cast<std::uint32_t>(
            (1103515245ull * state_ + 12345ull) % (1ull << 31));
        return static_cast<float>(static_cast<double>(state_) / static_cast<double>(1u << 31));
    }

private:
    std::uint32_t state_;
};

inline mssr::ImagePlane lcg_pattern(int w, int h, std::uint32_t seed) {
    Lcg lcg(seed);
    mssr::ImagePlane img(w, h, mssr::ColorSpace::Y);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.at(0, y, x) = lcg.next();
        }
    }
    return img;
}

// LCG noise blurred with a clamped 5x5 box filter (matches gen_golden.py's
// lcg_smooth: float32 base, float64 accumulation, float32 result).
inline mssr::ImagePlane smooth_pattern(int n, std::uint32_t seed) {
    const mssr::ImagePlane base = lcg_pattern(n, n, seed);
    mssr::ImagePlane out(n, n, mssr::ColorSpace::Y);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            double acc = 0.0;
            for (int dy = -2; dy <= 2; ++dy) {
                for (int dx = -2; dx <= 2; ++dx) {
                    const int sy = std::clamp(y + dy, 0, n - 1);
                    const int sx = std::clamp(x + dx, 0, n - 1);
                    acc += static_cast<double>(base.at(0, sy, sx));
                }
            }
            out.at(0, y, x) = static_cast<float>(acc / 25.0);
        }
    }
    return out;
}

template <typename T>
mssr::Tensor<T> random_tensor(mssr::Dims dims, std::mt19937_64& rng, double lo = -1.0,
                              double hi = 1.0) {
    mssr::Tensor<T> t = mssr::Tensor<T>::uninitialized(dims);
    for (T& v : t.values()) {
        v = static_cast<T>(lo + (hi - lo) * mssr::uniform_unit(rng));
    }
    return t;
}

template <typename T>
mssr::ConvParams<T> random_conv(int c_out, int c_in, int dilation, std::mt19937_64& rng,
                                bool zero_bias = false) {
    mssr::ConvParams<T> p;
    p.weights = random_tensor<T>({c_out, c_in, 3, 3}, rng);
    p.bias.resize(static_cast<std::size_t>(c_out));
    for (T& b : p.bias) {
        b = zero_bias ? T(0) : static_cast<T>(2.0 * mssr::uniform_unit(rng) - 1.0);
    }
    p.dilation = dilation;
    p.padding = dilation;
    return p;
}

// Literal dilated-convolution oracle: for every output position, gather the
// nine taps t in {-1,0,1}^2 at source s = center + l*t, zero outside the
// input. Element-gather form, independent of the plane-scatter implementation.
template <typename T>
mssr::Tensor<T> conv_oracle(const mssr::Tensor<T>& input, const mssr::ConvParams<T>& p) {
    const int l = p.dilation;
    const int pad = p.padding;
    const int h_out = input.dims().h + 2 * pad - 2 * l;
    const int w_out = input.dims().w + 2 * pad - 2 * l;
    const int c_out = p.weights.dims().n;
    const int c_in = input.dims().c;
    mssr::Tensor<T> out = mssr::Tensor<T>::zeros({input.dims().n, c_out, h_out, w_out});
    for (int n = 0; n < input.dims().n; ++n) {
        for (int o = 0; o < c_out; ++o) {
            for (int y = 0; y < h_out; ++y) {
                for (int x = 0; x < w_out; ++x) {
                    T acc = p.bias[static_cast<std::size_t>(o)];
                    const int cy = y - pad + l;  // tap-grid center in input coords
                    const int cx = x - pad + l;
                    for (int c = 0; c < c_in; ++c) {
                        for (int i = -1; i <= 1; ++i) {
                            for (int j = -1; j <= 1; ++j) {
                                const int sy = cy + l * i;
                                const int sx = cx + l * j;
                                if (sy < 0 || sy >= input.dims().h || sx < 0 ||
                                    sx >= input.dims().w) {
                                    continue;
                                }
                                acc += input.at(n, c, sy, sx) * p.weights.at(o, c, i + 1, j + 1);
                            }
                        }
                    }
                    out.at(n, o, y, x) = acc;
                }
            }
        }
    }
    return out;
}

template <typename T>
double max_abs_diff(const mssr::Tensor<T>& a, const mssr::Tensor<T>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(a.data()[i]) -
                                         static_cast<double>(b.data()[i])));
    }
    return worst;
}

// Central difference (f(x+h) - f(x-h)) / 2h of a scalar functional with
// respect to one storage location.
template <typename Fn>
double central_difference(Fn&& f, double& slot, double step) {
    const double saved = slot;
    slot = saved + step;
    const double hi = f();
    slot = saved - step;
    const double lo = f();
    slot = saved;
    return (hi - lo) / (2.0 * step);
}

// Gradient-check comparator: relative error against the larger magnitude,
// absolute fallback for near-zero gradients.
inline bool gradient_matches(double analytic, double numeric, double rel_tol = 1e-4,
                             double abs_tol = 1e-7) {
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    if (scale < abs_tol) {
        return true;
    }
    return std::abs(analytic - numeric) / scale < rel_tol;
}

inline double gradient_rel_error(double analytic, double numeric, double abs_tol = 1e-7) {
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    if (scale < abs_tol) {
        return 0.0;
    }
    return std::abs(analytic - numeric) / scale;
}

}  // namespace testsup

#include "mssr/model.hpp"

namespace testsup {

// Finite differences are only valid away from the ReLU kinks. Fresh networks
// have all-zero biases, which puts fully-dead conv windows exactly at 0, so
// a generic check point needs randomized biases and a verified margin.
template <typename T>
void randomize_biases(mssr::MSSRNet<T>& net, std::mt19937_64& rng, double amplitude = 0.3) {
    mssr::detail::visit_parameters(net, [&](mssr::ParamView<T> view) {
        if (view.record_dims.size() == 1) {
            for (std::size_t i = 0; i < view.size; ++i) {
                view.data[i] = static_cast<T>((2.0 * mssr::uniform_unit(rng) - 1.0) * amplitude);
            }
        }
    });
}

template <typename T>
double min_abs_preactivation(const mssr::ForwardCache<T>& cache) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& stage : cache.stages) {
        for (const auto& pre : stage.branch_pre) {
            for (const T v : pre.values()) {
                lo = std::min(lo, std::abs(static_cast<double>(v)));
            }
        }
        for (const T v : stage.fuse_pre.values()) {
            lo = std::min(lo, std::abs(static_cast<double>(v)));
        }
    }
    return lo;
}

// Signature of all ReLU on/off decisions in one forward pass.
template <typename T>
std::uint64_t relu_mask_hash(const mssr::ForwardCache<T>& cache) {
    std::uint64_t h = 1469598103934665603ull;
    auto feed = [&h](bool bit) { h = (h ^ (bit ? 1u : 0u)) * 1099511628211ull; };
    for (const auto& stage : cache.stages) {
        for (const auto& pre : stage.branch_pre) {
            for (const T v : pre.values()) {
                feed(v > T(0));
            }
        }
        for (const T v : stage.fuse_pre.values()) {
            feed(v > T(0));
        }
    }
    return h;
}

struct FdReport {
    double max_rel_error = 0.0;   // over valid (differentiable) comparisons
    std::size_t checked = 0;      // parameters compared
    std::size_t straddling = 0;   // parameters whose +-step probe flips a ReLU;
                                  // central differences are undefined there
};

// Whole-network gradient check: analytic backward vs central differences of
// the training loss, one probe per parameter. A parameter whose probe changes
// any ReLU mask makes the loss non-C1 on the probe interval, so its finite
// difference does not estimate the derivative; such parameters are counted
// separately instead of compared.
inline FdReport whole_net_fd_check(mssr::MSSRNet<double>& net, const mssr::TensorD& x,
                                   const mssr::TensorD& target, double step = 1e-3) {
    using mssr::ForwardCache;
    using mssr::TensorD;

    auto probe = [&] {
        ForwardCache<double> cache;
        const TensorD residual = mssr::forward(net, x, &cache);
        return std::pair<double, std::uint64_t>(mssr::mse_loss(residual, target).loss,
                                                relu_mask_hash(cache));
    };

    ForwardCache<double> cache;
    const TensorD residual = mssr::forward(net, x, &cache);
    const std::uint64_t mask0 = relu_mask_hash(cache);
    auto loss = mssr::mse_loss(residual, target);
    mssr::MSSRNet<double> grads = mssr::backward(net, cache, loss.grad_pred);

    auto params = mssr::collect_parameters(net);
    auto grad_views = mssr::collect_parameters(grads);

    FdReport report;
    for (std::size_t r = 0; r < params.size(); ++r) {
        for (std::size_t i = 0; i < params[r].size; ++i) {
            double& slot = params[r].data[i];
            const double saved = slot;
            slot = saved + step;
            const auto [hi, mask_hi] = probe();
            slot = saved - step;
            const auto [lo, mask_lo] = probe();
            slot = saved;
            if (mask_hi != mask0 || mask_lo != mask0) {
                ++report.straddling;
                continue;
            }
            const double numeric = (hi - lo) / (2.0 * step);
            report.max_rel_error = std::max(
                report.max_rel_error, gradient_rel_error(grad_views[r].data[i], numeric));
            ++report.checked;
        }
    }
    return report;
}

}  // namespace testsup
