#pragma once

#include <array>
#include <filesystem>
#include <random>
#include <utility>
#include <vector>

#include "mssr/imaging.hpp"
#include "mssr/random.hpp"
#include "mssr/tensor.hpp"

namespace mssr {

// The 8 dihedral variants {rot0, rot90, rot180, rot270} x {identity, hflip}.
// Orientation convention fixed by: rot90 of the 2x1 column [a; b] is the
// 1x2 row [b a].
std::array<ImagePlane, 8> augment(const ImagePlane& img);

// Training corpus: augmented HR luminance planes with their degraded
// counterparts for one scale factor. Eager mode precomputes every
// (lr_interp, residual) pair; lazy mode stores only the HR planes and
// degrades per sampled image, trading time for 3x less memory.
class TrainCorpus {
public:
    TrainCorpus(std::vector<ImagePlane> hr_luma_sources, int scale, int patch_size = 48,
                bool augment_sources = true, bool eager = true);

    // Loads every readable .bmp/.png under dir (sorted by filename),
    // converts to luminance. Non-image files are skipped with a warning on
    // stderr. Images too small for one patch after modcrop are skipped too.
    static std::vector<ImagePlane> load_directory(const std::filesystem::path& dir, int scale,
                                                  int patch_size = 48);

    std::size_t size() const { return entries_.size(); }
    int scale() const { return scale_; }
    int patch_size() const { return patch_; }

    // B aligned (input, residual-target) patch pairs drawn uniformly with
    // replacement over (image, offset). Deterministic for a given rng state.
    template <typename T>
    std::pair<Tensor<T>, Tensor<T>> sample_batch(int batch, std::mt19937_64& rng) const;

    // Degraded planes for entry i (computed on demand in lazy mode).
    DegradeResult entry(std::size_t i) const;

private:
    struct Entry {
        ImagePlane hr;               // modcropped luminance
        ImagePlane lr_interp;        // empty in lazy mode
        ImagePlane residual_target;  // empty in lazy mode
    };

    int scale_;
    int patch_;
    bool eager_;
    std::vector<Entry> entries_;
};

template <typename T>
std::pair<Tensor<T>, Tensor<T>> TrainCorpus::sample_batch(int batch, std::mt19937_64& rng) const {
    if (entries_.empty()) {
        throw StateError("sample_batch: corpus is empty");
    }
    if (batch < 1) {
        throw ArgumentError("sample_batch: batch must be >= 1");
    }
    Tensor<T> x = Tensor<T>::uninitialized({batch, 1, patch_, patch_});
    Tensor<T> y = Tensor<T>::uninitialized({batch, 1, patch_, patch_});
    for (int b = 0; b < batch; ++b) {
        const std::size_t idx = uniform_index(rng, entries_.size());
        const Entry& e = entries_[idx];
        const int max_y = e.hr.height - patch_;
        const int max_x = e.hr.width - patch_;
        const int y0 = max_y > 0 ? static_cast<int>(uniform_index(rng, max_y + 1)) : 0;
        const int x0 = max_x > 0 ? static_cast<int>(uniform_index(rng, max_x + 1)) : 0;

        const ImagePlane* lr = &e.lr_interp;
        const ImagePlane* res = &e.residual_target;
        DegradeResult lazy;
        if (!eager_) {
            lazy = degrade(e.hr, scale_);
            lr = &lazy.lr_interp;
            res = &lazy.residual_target;
        }
        T* px = x.plane(b, 0);
        T* py = y.plane(b, 0);
        for (int r = 0; r < patch_; ++r) {
            const float* src_x = lr->channel(0) + static_cast<std::size_t>(y0 + r) * lr->width + x0;
            const float* src_y = res->channel(0) + static_cast<std::size_t>(y0 + r) * res->width + x0;
            for (int c = 0; c < patch_; ++c) {
                px[static_cast<std::size_t>(r) * patch_ + c] = static_cast<T>(src_x[c]);
                py[static_cast<std::size_t>(r) * patch_ + c] = static_cast<T>(src_y[c]);
            }
        }
    }
    return {std::move(x), std::move(y)};
}

}  // namespace mssr
