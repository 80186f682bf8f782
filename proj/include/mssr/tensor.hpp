#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mssr/errors.hpp"

namespace mssr {

// Logical shape of a rank-4 NCHW tensor.
struct Dims {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;

    bool operator==(const Dims&) const = default;

    std::size_t count() const {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) *
               static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    }

    std::string to_string() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) +
               "," + std::to_string(w) + ")";
    }
};

// Dense rank-4 array in fixed row-major NCHW layout:
//   index = ((n*C + c)*H + h)*W + w
// No views, no broadcasting; shape adaptation is always explicit. T is float
// for training/inference and double for gradient-check suites.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    Tensor(Dims dims, T fill) : Tensor(dims, Uninit{}) {
        std::fill(data_.begin(), data_.end(), fill);
    }

    static Tensor zeros(Dims dims) { return Tensor(dims, T(0)); }

    // Storage left unwritten; for ops that overwrite every element.
    static Tensor uninitialized(Dims dims) { return Tensor(dims, Uninit{}); }

    const Dims& dims() const { return dims_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    std::span<T> values() { return {data_.data(), data_.size()}; }
    std::span<const T> values() const { return {data_.data(), data_.size()}; }

    std::size_t index(int n, int c, int h, int w) const {
        return ((static_cast<std::size_t>(n) * dims_.c + c) * dims_.h + h) * dims_.w + w;
    }

    T& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
    T at(int n, int c, int h, int w) const { return data_[index(n, c, h, w)]; }

    // Start of the (n, c) spatial plane, h*w contiguous elements.
    T* plane(int n, int c) { return data_.data() + index(n, c, 0, 0); }
    const T* plane(int n, int c) const { return data_.data() + index(n, c, 0, 0); }

    bool operator==(const Tensor&) const = default;

private:
    struct Uninit {};

    Tensor(Dims dims, Uninit) : dims_(dims) {
        validate_dims(dims);
        data_.resize(dims.count());
    }

    static void validate_dims(const Dims& dims) {
        if (dims.n < 1 || dims.c < 1 || dims.h < 1 || dims.w < 1) {
            throw ShapeError("tensor dims must all be >= 1, got " + dims.to_string());
        }
        // Guard against overflow of the flat index space.
        constexpr std::uint64_t kMaxElements = std::uint64_t(1) << 40;
        std::uint64_t total = 1;
        for (const std::uint64_t d : {dims.n, dims.c, dims.h, dims.w}) {
            total *= static_cast<std::uint64_t>(d);
            if (total > kMaxElements) {
                throw ShapeError("tensor dims overflow: " + dims.to_string());
            }
        }
    }

    Dims dims_{};
    std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

template <typename T>
Tensor<T> create(Dims dims, T fill) {
    return Tensor<T>(dims, fill);
}

namespace detail {

template <typename T, typename Op>
Tensor<T> elementwise(const Tensor<T>& a, const Tensor<T>& b, Op op, const char* name) {
    if (a.dims() != b.dims()) {
        throw ShapeError(std::string(name) + ": dims mismatch " + a.dims().to_string() +
                         " vs " + b.dims().to_string());
    }
    Tensor<T> out = Tensor<T>::uninitialized(a.dims());
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
        po[i] = op(pa[i], pb[i]);
    }
    return out;
}

}  // namespace detail

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    return detail::elementwise(a, b, [](T x, T y) { return x + y; }, "add");
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    return detail::elementwise(a, b, [](T x, T y) { return x - y; }, "sub");
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    return detail::elementwise(a, b, [](T x, T y) { return x * y; }, "mul");
}

// (sum of squares) / element count, Kahan-compensated so the result is stable
// independent of tensor size.
template <typename T>
double reduce_mean_square(const Tensor<T>& a) {
    double sum = 0.0;
    double comp = 0.0;
    for (const T v : a.values()) {
        const double sq = static_cast<double>(v) * static_cast<double>(v);
        const double y = sq - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum / static_cast<double>(a.size());
}

}  // namespace mssr
