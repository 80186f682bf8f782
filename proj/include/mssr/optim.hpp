#pragma once
#include <algorithm>

#include <cmath>
#include <cstdint>
#include <vector>

#include "mssr/errors.hpp"
#include "mssr/model.hpp"

namespace mssr {

// Per-parameter first/second moment accumulators, aligned with the build-order
// parameter views. t == 0 before the first step.
template <typename T>
struct AdamState {
    std::vector<std::vector<T>> m;
    std::vector<std::vector<T>> v;
    std::int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
AdamState<T> make_adam_state(const std::vector<ParamView<T>>& params) {
    AdamState<T> state;
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const auto& p : params) {
        state.m.emplace_back(p.size, T(0));
        state.v.emplace_back(p.size, T(0));
    }
    return state;
}

// Standard Adam with bias correction, applied in place:
//   m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2
//   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
// A non-finite gradient element aborts the step before touching any
// parameter or moment.
template <typename T>
void adam_step(std::vector<ParamView<T>>& params, const std::vector<ParamView<T>>& grads,
               AdamState<T>& state, double lr) {
    if (lr <= 0.0) {
        throw ArgumentError("adam_step: lr must be > 0");
    }
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw ShapeError("adam_step: parameter/gradient/state record counts differ");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size != grads[i].size || params[i].size != state.m[i].size()) {
            throw ShapeError("adam_step: record " + std::to_string(i) + " shape mismatch");
        }
        for (std::size_t j = 0; j < grads[i].size; ++j) {
            if (!std::isfinite(static_cast<double>(grads[i].data[j]))) {
                throw NumericError("adam_step: non-finite gradient in record " +
                                   std::to_string(i) + ", step aborted");
            }
        }
    }

    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        T* p = params[i].data;
        const T* g = grads[i].data;
        T* m = state.m[i].data();
        T* v = state.v[i].data();
        const std::size_t count = params[i].size;
        for (std::size_t j = 0; j < count; ++j) {
            const double gj = static_cast<double>(g[j]);
            const double mj = state.beta1 * static_cast<double>(m[j]) + (1.0 - state.beta1) * gj;
            const double vj = state.beta2 * static_cast<double>(v[j]) + (1.0 - state.beta2) * gj * gj;
            m[j] = static_cast<T>(mj);
            v[j] = static_cast<T>(vj);
            const double m_hat = mj / bc1;
            const double v_hat = vj / bc2;
            p[j] = static_cast<T>(static_cast<double>(p[j]) - lr * m_hat / (std::sqrt(v_hat) + state.eps));
        }
    }
}

// Staged schedule: 1e-3 for the first half of training, 1e-4 up to 80%,
// 1e-5 for the rest. With the default 100 epochs the boundaries fall at
// epochs 50 and 80.
inline double learning_rate_for_epoch(int epoch, int total_epochs = 100) {
    if (total_epochs < 1 || epoch < 1 || epoch > total_epochs) {
        throw ArgumentError("learning_rate_for_epoch: epoch " + std::to_string(epoch) +
                            " out of range [1, " + std::to_string(total_epochs) + "]");
    }
    // ceil on the midpoint so short desk-scale runs still start at the full
    // rate; floor on the 80% mark so the final stage survives rounding
    const int first = (total_epochs + 1) / 2;
    const int second = std::max(first, 4 * total_epochs / 5);
    if (epoch <= first) {
        return 1e-3;
    }
    if (epoch <= second) {
        return 1e-4;
    }
    return 1e-5;
}

}  // namespace mssr
