#include "mssr/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace mssr {

namespace imaging_detail {

double keys_cubic(double d) {
    const double a = std::abs(d);
    if (a <= 1.0) {
        return (1.5 * a - 2.5) * a * a + 1.0;
    }
    if (a <= 2.0) {
        return ((-0.5 * a + 2.5) * a - 4.0) * a + 2.0;
    }
    return 0.0;
}

}  // namespace imaging_detail

namespace {

constexpr std::array<std::array<double, 3>, 3> kRgbToYcbcr{{
    {65.481, 128.553, 24.966},
    {-37.797, -74.203, 112.0},
    {112.0, -93.786, -18.214},
}};
constexpr std::array<double, 3> kYcbcrOffset{16.0, 128.0, 128.0};

std::array<std::array<double, 3>, 3> invert3x3(const std::array<std::array<double, 3>, 3>& m) {
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    const double inv_det = 1.0 / det;
    std::array<std::array<double, 3>, 3> r;
    r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv_det;
    r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_det;
    r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_det;
    r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv_det;
    r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_det;
    r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_det;
    r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv_det;
    r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_det;
    r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_det;
    return r;
}

void require_rgb(const ImagePlane& img, const char* op) {
    if (img.color != ColorSpace::RGB) {
        throw ArgumentError(std::string(op) + ": expected an RGB plane");
    }
}

// Precomputed contribution window of one output row/column position.
struct Taps {
    int start = 0;                // first source index (clamped range start)
    std::vector<double> weights;  // normalized; index i maps to source start+i
};

// Keys taps for one axis. Downscale widens the kernel by the ratio and the
// weights are renormalized to preserve constants.
std::vector<Taps> make_taps(int in_size, int out_size) {
    const double ratio = static_cast<double>(in_size) / static_cast<double>(out_size);
    const double kernel_scale = out_size < in_size ? static_cast<double>(out_size) / in_size : 1.0;
    const double radius = 2.0 / kernel_scale;

    std::vector<Taps> taps(static_cast<std::size_t>(out_size));
    for (int o = 0; o < out_size; ++o) {
        const double center = (o + 0.5) * ratio - 0.5;
        const int lo = static_cast<int>(std::ceil(center - radius));
        const int hi = static_cast<int>(std::floor(center + radius));
        Taps t;
        t.start = lo;
        t.weights.resize(static_cast<std::size_t>(hi - lo + 1));
        double sum = 0.0;
        for (int i = lo; i <= hi; ++i) {
            const double w = imaging_detail::keys_cubic((center - i) * kernel_scale);
            t.weights[static_cast<std::size_t>(i - lo)] = w;
            sum += w;
        }
        for (double& w : t.weights) {
            w /= sum;
        }
        taps[static_cast<std::size_t>(o)] = std::move(t);
    }
    return taps;
}

// Resample one channel horizontally into a double buffer (height unchanged).
std::vector<double> resize_rows(const float* src, int in_w, int height,
                                const std::vector<Taps>& taps) {
    const int out_w = static_cast<int>(taps.size());
    std::vector<double> out(static_cast<std::size_t>(out_w) * height);
    for (int y = 0; y < height; ++y) {
        const float* row = src + static_cast<std::size_t>(y) * in_w;
        double* orow = out.data() + static_cast<std::size_t>(y) * out_w;
        for (int x = 0; x < out_w; ++x) {
            const Taps& t = taps[static_cast<std::size_t>(x)];
            double acc = 0.0;
            for (std::size_t i = 0; i < t.weights.size(); ++i) {
                const int sx = std::clamp(t.start + static_cast<int>(i), 0, in_w - 1);
                acc += t.weights[i] * static_cast<double>(row[sx]);
            }
            orow[x] = acc;
        }
    }
    return out;
}

}  // namespace

ImagePlane rgb_to_y(const ImagePlane& img) {
    require_rgb(img, "rgb_to_y");
    ImagePlane out(img.width, img.height, ColorSpace::Y);
    const std::size_t count = img.plane_size();
    const float* r = img.channel(0);
    const float* g = img.channel(1);
    const float* b = img.channel(2);
    for (std::size_t i = 0; i < count; ++i) {
        const double y = kYcbcrOffset[0] + kRgbToYcbcr[0][0] * r[i] + kRgbToYcbcr[0][1] * g[i] +
                         kRgbToYcbcr[0][2] * b[i];
        out.samples[i] = static_cast<float>(y / 255.0);
    }
    return out;
}

ImagePlane rgb_to_ycbcr(const ImagePlane& img) {
    require_rgb(img, "rgb_to_ycbcr");
    ImagePlane out(img.width, img.height, ColorSpace::YCbCr);
    const std::size_t count = img.plane_size();
    for (int ch = 0; ch < 3; ++ch) {
        const float* r = img.channel(0);
        const float* g = img.channel(1);
        const float* b = img.channel(2);
        float* dst = out.channel(ch);
        for (std::size_t i = 0; i < count; ++i) {
            const double v = kYcbcrOffset[static_cast<std::size_t>(ch)] +
                             kRgbToYcbcr[ch][0] * r[i] + kRgbToYcbcr[ch][1] * g[i] +
                             kRgbToYcbcr[ch][2] * b[i];
            dst[i] = static_cast<float>(v / 255.0);
        }
    }
    return out;
}

ImagePlane ycbcr_to_rgb(const ImagePlane& img) {
    if (img.color != ColorSpace::YCbCr) {
        throw ArgumentError("ycbcr_to_rgb: expected a YCbCr plane");
    }
    static const std::array<std::array<double, 3>, 3> inv = invert3x3(kRgbToYcbcr);
    ImagePlane out(img.width, img.height, ColorSpace::RGB);
    const std::size_t count = img.plane_size();
    const float* y = img.channel(0);
    const float* cb = img.channel(1);
    const float* cr = img.channel(2);
    for (std::size_t i = 0; i < count; ++i) {
        const double v0 = 255.0 * y[i] - kYcbcrOffset[0];
        const double v1 = 255.0 * cb[i] - kYcbcrOffset[1];
        const double v2 = 255.0 * cr[i] - kYcbcrOffset[2];
        for (int ch = 0; ch < 3; ++ch) {
            const double v = inv[ch][0] * v0 + inv[ch][1] * v1 + inv[ch][2] * v2;
            out.channel(ch)[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return out;
}

ImagePlane bicubic_resize(const ImagePlane& img, int out_width, int out_height) {
    if (out_width < 1 || out_height < 1) {
        throw ArgumentError("bicubic_resize: output dims must be >= 1");
    }
    if (img.width < 1 || img.height < 1) {
        throw ArgumentError("bicubic_resize: empty input");
    }
    const std::vector<Taps> h_taps = make_taps(img.width, out_width);
    const std::vector<Taps> v_taps = make_taps(img.height, out_height);

    ImagePlane out(out_width, out_height, img.color);
    for (int ch = 0; ch < img.channels(); ++ch) {
        // horizontal pass into doubles, then vertical pass
        std::vector<double> mid = resize_rows(img.channel(ch), img.width, img.height, h_taps);
        float* dst = out.channel(ch);
        for (int y = 0; y < out_height; ++y) {
            const Taps& t = v_taps[static_cast<std::size_t>(y)];
            for (int x = 0; x < out_width; ++x) {
                double acc = 0.0;
                for (std::size_t i = 0; i < t.weights.size(); ++i) {
                    const int sy = std::clamp(t.start + static_cast<int>(i), 0, img.height - 1);
                    acc += t.weights[i] * mid[static_cast<std::size_t>(sy) * out_width + x];
                }
                dst[static_cast<std::size_t>(y) * out_width + x] =
                    static_cast<float>(std::clamp(acc, 0.0, 1.0));
            }
        }
    }
    return out;
}

ImagePlane modcrop(const ImagePlane& img, int scale) {
    if (scale < 1) {
        throw ArgumentError("modcrop: scale must be >= 1");
    }
    const int w = (img.width / scale) * scale;
    const int h = (img.height / scale) * scale;
    if (w < 1 || h < 1) {
        throw ArgumentError("modcrop: image smaller than scale factor");
    }
    if (w == img.width && h == img.height) {
        return img;
    }
    ImagePlane out(w, h, img.color);
    for (int ch = 0; ch < img.channels(); ++ch) {
        for (int y = 0; y < h; ++y) {
            const float* src = img.channel(ch) + static_cast<std::size_t>(y) * img.width;
            std::copy_n(src, w, out.channel(ch) + static_cast<std::size_t>(y) * w);
        }
    }
    return out;
}

DegradeResult degrade(const ImagePlane& hr_luma, int scale) {
    if (scale < 1) {
        throw ArgumentError("degrade: scale must be >= 1");
    }
    if (hr_luma.width < scale || hr_luma.height < scale) {
        throw ArgumentError("degrade: image smaller than scale factor");
    }
    DegradeResult result;
    result.hr = modcrop(hr_luma, scale);
    const ImagePlane lr =
        bicubic_resize(result.hr, result.hr.width / scale, result.hr.height / scale);
    result.lr_interp = bicubic_resize(lr, result.hr.width, result.hr.height);
    result.residual_target = result.hr;
    for (std::size_t i = 0; i < result.residual_target.samples.size(); ++i) {
        result.residual_target.samples[i] = result.hr.samples[i] - result.lr_interp.samples[i];
    }
    return result;
}

}  // namespace mssr
