#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "mssr/nn_ops.hpp"
#include "mssr/tensor.hpp"

namespace mssr {

struct NetConfig {
    int n = 8;             // filters per dilated branch; concat width is 3n
    int m = 5;             // feature-enhancement iterations
    int c = 1;             // image channels (1 = luminance)
    std::uint64_t seed = 0;

    bool operator==(const NetConfig&) const = default;

    bool valid() const { return n >= 1 && m >= 0 && (c == 1 || c == 3); }
};

// Three parallel 3x3 convolutions with dilations 1, 2, 3 over the same input;
// their ReLU'd outputs concatenate to 3n channels.
template <typename T>
struct InceptionModule {
    std::array<ConvParams<T>, 3> branches;
};

// Feature extraction (inception + fusion conv), m enhancement blocks of the
// same shape, and a reconstruction conv producing the residual image. Every
// layer preserves spatial dims. The same struct doubles as the gradient
// container returned by backward(): gradients have exactly the parameter
// shapes.
template <typename T>
struct MSSRNet {
    struct Block {
        InceptionModule<T> inception;  // C_in = 3n
        ConvParams<T> fuse;            // 3n -> 3n, dilation 1
    };

    NetConfig cfg;
    InceptionModule<T> fe_inception;  // C_in = c
    ConvParams<T> fe_fuse;            // 3n -> 3n, dilation 1
    std::vector<Block> blocks;        // m entries
    ConvParams<T> recon;              // 3n -> c, dilation 1, no trailing ReLU
};

// Flat view over one parameter record (weights or bias) in build order.
template <typename T>
struct ParamView {
    T* data = nullptr;
    std::size_t size = 0;
    std::vector<std::uint32_t> record_dims;  // rank 4 for weights, rank 1 for bias
};

namespace detail {

template <typename T, typename Fn>
void visit_conv(ConvParams<T>& p, Fn&& fn) {
    const auto& d = p.weights.dims();
    fn(ParamView<T>{p.weights.data(), p.weights.size(),
                    {static_cast<std::uint32_t>(d.n), static_cast<std::uint32_t>(d.c),
                     static_cast<std::uint32_t>(d.h), static_cast<std::uint32_t>(d.w)}});
    fn(ParamView<T>{p.bias.data(), p.bias.size(),
                    {static_cast<std::uint32_t>(p.bias.size())}});
}

template <typename T, typename Fn>
void visit_conv(const ConvParams<T>& p, Fn&& fn) {
    const auto& d = p.weights.dims();
    fn(ParamView<const T>{p.weights.data(), p.weights.size(),
                          {static_cast<std::uint32_t>(d.n), static_cast<std::uint32_t>(d.c),
                           static_cast<std::uint32_t>(d.h), static_cast<std::uint32_t>(d.w)}});
    fn(ParamView<const T>{p.bias.data(), p.bias.size(),
                          {static_cast<std::uint32_t>(p.bias.size())}});
}

// Fixed build order: fe_inception branches 1..3 (weights then bias each),
// fe_fuse, then per block its branches and fuse conv, then recon. The weight
// file and the optimizer state both depend on this order.
template <typename Net, typename Fn>
void visit_parameters(Net& net, Fn&& fn) {
    for (auto& branch : net.fe_inception.branches) {
        visit_conv(branch, fn);
    }
    visit_conv(net.fe_fuse, fn);
    for (auto& block : net.blocks) {
        for (auto& branch : block.inception.branches) {
            visit_conv(branch, fn);
        }
        visit_conv(block.fuse, fn);
    }
    visit_conv(net.recon, fn);
}

}  // namespace detail

template <typename T>
std::vector<ParamView<T>> collect_parameters(MSSRNet<T>& net) {
    std::vector<ParamView<T>> views;
    detail::visit_parameters(net, [&](ParamView<T> v) { views.push_back(std::move(v)); });
    return views;
}

// Exact element count of all weights and biases in build order.
inline std::int64_t parameter_count(const NetConfig& cfg) {
    if (!cfg.valid()) {
        throw ArgumentError("parameter_count: invalid config");
    }
    const std::int64_t n = cfg.n;
    const std::int64_t c = cfg.c;
    const std::int64_t m = cfg.m;
    const std::int64_t width = 3 * n;
    const std::int64_t fe_inception = 3 * (9 * c * n + n);
    const std::int64_t fuse_convs = (m + 1) * (9 * width * width + width);
    const std::int64_t block_inceptions = m * 3 * (9 * width * n + n);
    const std::int64_t recon = 9 * width * c + c;
    return fe_inception + fuse_convs + block_inceptions + recon;
}

// Input extent that can influence one output pixel: the widest inception
// branch (dilation 3) adds 6 per module, each plain 3x3 conv adds 2.
inline int receptive_field(const NetConfig& cfg) {
    if (!cfg.valid()) {
        throw ArgumentError("receptive_field: invalid config");
    }
    return 1 + 6 * (cfg.m + 1) + 2 * (cfg.m + 2);
}

namespace detail {

template <typename T>
ConvParams<T> make_conv(int c_out, int c_in, int dilation, std::mt19937_64& rng) {
    ConvParams<T> p;
    p.weights = he_uniform_init<T>({c_out, c_in, 3, 3}, c_in * 9, rng);
    p.bias.assign(static_cast<std::size_t>(c_out), T(0));
    p.dilation = dilation;
    p.padding = dilation;
    return p;
}

template <typename T>
InceptionModule<T> make_inception(int c_in, int n, std::mt19937_64& rng) {
    InceptionModule<T> module;
    for (int b = 0; b < 3; ++b) {
        module.branches[b] = make_conv<T>(n, c_in, b + 1, rng);
    }
    return module;
}

}  // namespace detail

// He-uniform weights (fan_in = C_in * 9), zero biases; deterministic per seed.
template <typename T>
MSSRNet<T> build_network(const NetConfig& cfg) {
    if (!cfg.valid()) {
        throw ArgumentError("build_network: invalid config (need n >= 1, m >= 0, c in {1,3})");
    }
    std::mt19937_64 rng(cfg.seed);
    const int width = 3 * cfg.n;
    MSSRNet<T> net;
    net.cfg = cfg;
    net.fe_inception = detail::make_inception<T>(cfg.c, cfg.n, rng);
    net.fe_fuse = detail::make_conv<T>(width, width, 1, rng);
    net.blocks.resize(static_cast<std::size_t>(cfg.m));
    for (auto& block : net.blocks) {
        block.inception = detail::make_inception<T>(width, cfg.n, rng);
        block.fuse = detail::make_conv<T>(width, width, 1, rng);
    }
    net.recon = detail::make_conv<T>(cfg.c, width, 1, rng);
    return net;
}

// Gradient container with the same layout as the network, all zeros.
template <typename T>
MSSRNet<T> zeros_like(const MSSRNet<T>& net) {
    MSSRNet<T> out;
    out.cfg = net.cfg;
    auto zero_conv = [](const ConvParams<T>& p) {
        ConvParams<T> z;
        z.weights = Tensor<T>::zeros(p.weights.dims());
        z.bias.assign(p.bias.size(), T(0));
        z.dilation = p.dilation;
        z.padding = p.padding;
        return z;
    };
    for (int b = 0; b < 3; ++b) {
        out.fe_inception.branches[b] = zero_conv(net.fe_inception.branches[b]);
    }
    out.fe_fuse = zero_conv(net.fe_fuse);
    out.blocks.resize(net.blocks.size());
    for (std::size_t i = 0; i < net.blocks.size(); ++i) {
        for (int b = 0; b < 3; ++b) {
            out.blocks[i].inception.branches[b] = zero_conv(net.blocks[i].inception.branches[b]);
        }
        out.blocks[i].fuse = zero_conv(net.blocks[i].fuse);
    }
    out.recon = zero_conv(net.recon);
    return out;
}

// Activations retained for backward. One stage = inception + fusion conv.
template <typename T>
struct ForwardCache {
    struct Stage {
        std::array<Tensor<T>, 3> branch_pre;  // pre-ReLU branch outputs
        Tensor<T> concat_act;                 // post-ReLU, concatenated (fusion input)
        Tensor<T> fuse_pre;                   // pre-ReLU fusion output
        Tensor<T> fuse_act;                   // post-ReLU (next stage / recon input)
    };

    NetConfig cfg;
    Tensor<T> input;
    std::vector<Stage> stages;  // m + 1 entries
};

namespace detail {

template <typename T>
typename ForwardCache<T>::Stage run_stage(const InceptionModule<T>& inception,
                                          const ConvParams<T>& fuse, const Tensor<T>& x) {
    typename ForwardCache<T>::Stage stage;
    std::array<Tensor<T>, 3> branch_act;
    for (int b = 0; b < 3; ++b) {
        stage.branch_pre[b] = dilated_conv2d_forward(x, inception.branches[b]);
        branch_act[b] = relu_forward(stage.branch_pre[b]);
    }
    stage.concat_act = concat_channels(std::span<const Tensor<T>>(branch_act));
    stage.fuse_pre = dilated_conv2d_forward(stage.concat_act, fuse);
    stage.fuse_act = relu_forward(stage.fuse_pre);
    return stage;
}

}  // namespace detail

// Residual prediction: inception -> per-branch ReLU -> concat -> fusion conv
// -> ReLU, for the extraction stage and each enhancement block, then the
// reconstruction conv with no trailing ReLU (residuals must go negative).
// Pass a cache to retain activations for backward().
template <typename T>
Tensor<T> forward(const MSSRNet<T>& net, const Tensor<T>& x, ForwardCache<T>* cache = nullptr) {
    if (x.dims().c != net.cfg.c) {
        throw ShapeError("forward: input channels " + std::to_string(x.dims().c) +
                         " != network c " + std::to_string(net.cfg.c));
    }
    ForwardCache<T> local;
    ForwardCache<T>& cc = cache != nullptr ? *cache : local;
    cc.cfg = net.cfg;
    cc.stages.clear();
    cc.stages.reserve(net.blocks.size() + 1);
    cc.input = x;

    cc.stages.push_back(detail::run_stage(net.fe_inception, net.fe_fuse, x));
    for (const auto& block : net.blocks) {
        cc.stages.push_back(
            detail::run_stage(block.inception, block.fuse, cc.stages.back().fuse_act));
    }
    return dilated_conv2d_forward(cc.stages.back().fuse_act, net.recon);
}

// clamp(lr_interp + residual, 0, 1); inference-only range restriction.
template <typename T>
Tensor<T> predict_hr(const MSSRNet<T>& net, const Tensor<T>& lr_interp) {
    Tensor<T> residual = forward(net, lr_interp);
    Tensor<T> out = add(lr_interp, residual);
    for (T& v : out.values()) {
        v = std::clamp(v, T(0), T(1));
    }
    return out;
}

// Reverse-mode pass; returns gradients in a network-shaped container.
template <typename T>
MSSRNet<T> backward(const MSSRNet<T>& net, const ForwardCache<T>& cache,
                    const Tensor<T>& grad_residual) {
    if (cache.stages.size() != net.blocks.size() + 1 || !(cache.cfg == net.cfg) ||
        cache.input.empty()) {
        throw StateError("backward: cache does not match this network");
    }
    const Dims expect{cache.input.dims().n, net.cfg.c, cache.input.dims().h,
                      cache.input.dims().w};
    if (grad_residual.dims() != expect) {
        throw StateError("backward: grad_residual dims " + grad_residual.dims().to_string() +
                         " do not match forward output " + expect.to_string());
    }

    MSSRNet<T> grads = zeros_like(net);
    const std::array<int, 3> split_sizes{net.cfg.n, net.cfg.n, net.cfg.n};

    // Reconstruction conv.
    auto recon_grads =
        dilated_conv2d_backward(cache.stages.back().fuse_act, net.recon, grad_residual, true);
    grads.recon.weights = std::move(recon_grads.weights);
    grads.recon.bias = std::move(recon_grads.bias);
    Tensor<T> grad_act = std::move(recon_grads.input);  // d loss / d fuse_act of last stage

    // Stages in reverse; stage 0 skips the input gradient (input is data).
    for (int s = static_cast<int>(cache.stages.size()) - 1; s >= 0; --s) {
        const auto& stage = cache.stages[static_cast<std::size_t>(s)];
        const InceptionModule<T>& inception =
            s == 0 ? net.fe_inception : net.blocks[static_cast<std::size_t>(s - 1)].inception;
        const ConvParams<T>& fuse =
            s == 0 ? net.fe_fuse : net.blocks[static_cast<std::size_t>(s - 1)].fuse;
        InceptionModule<T>& g_inception =
            s == 0 ? grads.fe_inception : grads.blocks[static_cast<std::size_t>(s - 1)].inception;
        ConvParams<T>& g_fuse =
            s == 0 ? grads.fe_fuse : grads.blocks[static_cast<std::size_t>(s - 1)].fuse;
        const Tensor<T>& stage_input =
            s == 0 ? cache.input : cache.stages[static_cast<std::size_t>(s - 1)].fuse_act;

        Tensor<T> grad_fuse_pre = relu_backward(stage.fuse_pre, grad_act);
        auto fuse_grads = dilated_conv2d_backward(stage.concat_act, fuse, grad_fuse_pre, true);
        g_fuse.weights = std::move(fuse_grads.weights);
        g_fuse.bias = std::move(fuse_grads.bias);

        std::vector<Tensor<T>> branch_grads =
            split_channels(fuse_grads.input, std::span<const int>(split_sizes));
        Tensor<T> grad_input;
        const bool need_input_grad = s > 0;
        for (int b = 0; b < 3; ++b) {
            Tensor<T> g_pre = relu_backward(stage.branch_pre[b], branch_grads[b]);
            auto conv_grads =
                dilated_conv2d_backward(stage_input, inception.branches[b], g_pre, need_input_grad);
            g_inception.branches[b].weights = std::move(conv_grads.weights);
            g_inception.branches[b].bias = std::move(conv_grads.bias);
            if (need_input_grad) {
                grad_input = b == 0 ? std::move(conv_grads.input)
                                    : add(grad_input, conv_grads.input);
            }
        }
        if (need_input_grad) {
            grad_act = std::move(grad_input);
        }
    }
    return grads;
}

}  // namespace mssr
