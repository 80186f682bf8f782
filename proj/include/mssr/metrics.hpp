#pragma once

#include <string>
#include <vector>

#include "mssr/imaging.hpp"

namespace mssr {

// PSNR in dB over the 8-bit value scale: both planes are cropped by `shave`
// pixels on every border, then psnr = 10*log10(255^2 / mean((255a - 255b)^2)).
// Identical images return +infinity.
double psnr(const ImagePlane& a, const ImagePlane& b, int shave);

// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), K1=0.01,
// K2=0.03, L=255, valid-window convolution. Both planes shaved as in psnr.
double ssim(const ImagePlane& a, const ImagePlane& b, int shave);

struct ImageScore {
    std::string name;
    double psnr_db = 0.0;
    double ssim = 0.0;
};

// Per-image metric rows plus dataset arithmetic means. Images with infinite
// PSNR are excluded from the PSNR average (with a note in the table).
struct EvalReport {
    int scale = 0;
    int shave = 0;
    std::vector<ImageScore> images;

    double average_psnr() const;
    double average_ssim() const;
    std::size_t infinite_psnr_count() const;

    // Human-readable table.
    std::string to_table() const;
    // One "image<TAB>psnr_db<TAB>ssim" line per image, then an "average" line.
    std::string to_tsv() const;
};

}  // namespace mssr
