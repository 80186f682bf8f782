#pragma once

#include <filesystem>
#include <vector>

#include "mssr/errors.hpp"

namespace mssr {

enum class ColorSpace {
    RGB,    // 3 channels
    Y,      // 1 channel, BT.601 studio-swing luminance
    YCbCr,  // 3 channels
};

// 2-D pixel grid, channel-planar row-major floats. Values are kept in [0,1]
// by load and every documented op; the one exception is a residual plane
// (HR minus bicubic), which lives in [-1,1] by construction.
struct ImagePlane {
    int width = 0;
    int height = 0;
    ColorSpace color = ColorSpace::Y;
    std::vector<float> samples;

    ImagePlane() = default;
    ImagePlane(int w, int h, ColorSpace cs)
        : width(w), height(h), color(cs),
          samples(static_cast<std::size_t>(w) * h * (cs == ColorSpace::Y ? 1 : 3), 0.0f) {}

    int channels() const { return color == ColorSpace::Y ? 1 : 3; }
    std::size_t plane_size() const { return static_cast<std::size_t>(width) * height; }

    float& at(int ch, int y, int x) {
        return samples[ch * plane_size() + static_cast<std::size_t>(y) * width + x];
    }
    float at(int ch, int y, int x) const {
        return samples[ch * plane_size() + static_cast<std::size_t>(y) * width + x];
    }
    float* channel(int ch) { return samples.data() + ch * plane_size(); }
    const float* channel(int ch) const { return samples.data() + ch * plane_size(); }
};

// Decodes a 24-bit uncompressed BMP or an 8/16-bit RGB/grayscale PNG into an
// RGB plane (grayscale replicated; alpha dropped). 8-bit sample s maps to
// s/255.
ImagePlane load_image(const std::filesystem::path& path);

// Encodes as .bmp (24-bit, bottom-up, BITMAPINFOHEADER) or .png (8-bit) by
// extension; sample s maps to round(s*255) clamped to [0,255], halves away
// from zero.
void save_image(const ImagePlane& img, const std::filesystem::path& path);

// ITU-R BT.601 studio-swing transforms on [0,1] samples:
//   Y  = (16 + 65.481 R + 128.553 G + 24.966 B) / 255
//   Cb = (128 - 37.797 R - 74.203 G + 112 B) / 255
//   Cr = (128 + 112 R - 93.786 G - 18.214 B) / 255
// ycbcr_to_rgb applies the exact matrix inverse, then clamps to [0,1].
ImagePlane rgb_to_y(const ImagePlane& img);
ImagePlane rgb_to_ycbcr(const ImagePlane& img);
ImagePlane ycbcr_to_rgb(const ImagePlane& img);

// Separable Keys cubic (a = -0.5) resampler, src = (dst+0.5)*(in/out) - 0.5,
// clamped edge indices, weights renormalized. Downscaling widens the kernel
// by the scale ratio (antialiasing). Output clamped to [0,1].
ImagePlane bicubic_resize(const ImagePlane& img, int out_width, int out_height);

// Top-left crop to the largest multiple of `scale` in each dimension.
ImagePlane modcrop(const ImagePlane& img, int scale);

struct DegradeResult {
    ImagePlane hr;               // modcropped ground truth
    ImagePlane lr_interp;        // bicubic down+up, the network input
    ImagePlane residual_target;  // hr - lr_interp, unclamped, in [-1,1]
};

// lr = resize(hr, w/s, h/s); lr_interp = resize(lr, w, h); target = hr - lr_interp.
// hr is modcropped first. Deterministic.
DegradeResult degrade(const ImagePlane& hr_luma, int scale);

namespace imaging_detail {
// Keys kernel, a = -0.5. Exposed for tests.
double keys_cubic(double d);
}  // namespace imaging_detail

}  // namespace mssr
