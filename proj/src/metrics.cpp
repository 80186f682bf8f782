#include "mssr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace mssr {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

void check_metric_inputs(const ImagePlane& a, const ImagePlane& b, int shave, const char* op) {
    if (a.width != b.width || a.height != b.height || a.channels() != b.channels()) {
        throw ShapeError(std::string(op) + ": image dims differ");
    }
    if (a.channels() != 1) {
        throw ArgumentError(std::string(op) + ": expects single-channel luminance planes");
    }
    if (shave < 0 || 2 * shave >= std::min(a.width, a.height)) {
        throw ArgumentError(std::string(op) + ": shave too large for image");
    }
}

// Shaved region in 255 scale as doubles, row-major.
std::vector<double> shaved255(const ImagePlane& img, int shave, int& w, int& h) {
    w = img.width - 2 * shave;
    h = img.height - 2 * shave;
    std::vector<double> out(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        const float* src = img.channel(0) + static_cast<std::size_t>(y + shave) * img.width + shave;
        double* dst = out.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            dst[x] = 255.0 * static_cast<double>(src[x]);
        }
    }
    return out;
}

std::vector<double> gaussian_kernel() {
    std::vector<double> k(kWindow);
    const int radius = kWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - radius;
        k[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
        sum += k[static_cast<std::size_t>(i)];
    }
    for (double& v : k) {
        v /= sum;
    }
    return k;
}

// Separable valid-mode convolution with the 11-tap window.
std::vector<double> filter_valid(const std::vector<double>& img, int w, int h,
                                 const std::vector<double>& k, int& out_w, int& out_h) {
    const int taps = static_cast<int>(k.size());
    out_w = w - taps + 1;
    out_h = h - taps + 1;
    std::vector<double> mid(static_cast<std::size_t>(out_w) * h);
    for (int y = 0; y < h; ++y) {
        const double* row = img.data() + static_cast<std::size_t>(y) * w;
        double* orow = mid.data() + static_cast<std::size_t>(y) * out_w;
        for (int x = 0; x < out_w; ++x) {
            double acc = 0.0;
            for (int i = 0; i < taps; ++i) {
                acc += k[static_cast<std::size_t>(i)] * row[x + i];
            }
            orow[x] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(out_w) * out_h);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            double acc = 0.0;
            for (int i = 0; i < taps; ++i) {
                acc += k[static_cast<std::size_t>(i)] * mid[static_cast<std::size_t>(y + i) * out_w + x];
            }
            out[static_cast<std::size_t>(y) * out_w + x] = acc;
        }
    }
    return out;
}

}  // namespace

double psnr(const ImagePlane& a, const ImagePlane& b, int shave) {
    check_metric_inputs(a, b, shave, "psnr");
    int w = 0;
    int h = 0;
    const std::vector<double> pa = shaved255(a, shave, w, h);
    const std::vector<double> pb = shaved255(b, shave, w, h);
    double sum = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const double d = pa[i] - pb[i];
        sum += d * d;
    }
    const double mse = sum / static_cast<double>(pa.size());
    if (mse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const ImagePlane& a, const ImagePlane& b, int shave) {
    check_metric_inputs(a, b, shave, "ssim");
    int w = 0;
    int h = 0;
    const std::vector<double> pa = shaved255(a, shave, w, h);
    const std::vector<double> pb = shaved255(b, shave, w, h);
    if (w < kWindow || h < kWindow) {
        throw ArgumentError("ssim: image smaller than the 11x11 window after shave");
    }

    const std::vector<double> kernel = gaussian_kernel();
    std::vector<double> aa(pa.size());
    std::vector<double> bb(pa.size());
    std::vector<double> ab(pa.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        aa[i] = pa[i] * pa[i];
        bb[i] = pb[i] * pb[i];
        ab[i] = pa[i] * pb[i];
    }
    int vw = 0;
    int vh = 0;
    const std::vector<double> mu_a = filter_valid(pa, w, h, kernel, vw, vh);
    const std::vector<double> mu_b = filter_valid(pb, w, h, kernel, vw, vh);
    const std::vector<double> e_aa = filter_valid(aa, w, h, kernel, vw, vh);
    const std::vector<double> e_bb = filter_valid(bb, w, h, kernel, vw, vh);
    const std::vector<double> e_ab = filter_valid(ab, w, h, kernel, vw, vh);

    double sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i];
        const double mb = mu_b[i];
        const double var_a = e_aa[i] - ma * ma;
        const double var_b = e_bb[i] - mb * mb;
        const double cov = e_ab[i] - ma * mb;
        const double num = (2.0 * ma * mb + kC1) * (2.0 * cov + kC2);
        const double den = (ma * ma + mb * mb + kC1) * (var_a + var_b + kC2);
        sum += num / den;
    }
    return sum / static_cast<double>(mu_a.size());
}

double EvalReport::average_psnr() const {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& s : images) {
        if (std::isfinite(s.psnr_db)) {
            sum += s.psnr_db;
            ++count;
        }
    }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

double EvalReport::average_ssim() const {
    if (images.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& s : images) {
        sum += s.ssim;
    }
    return sum / static_cast<double>(images.size());
}

std::size_t EvalReport::infinite_psnr_count() const {
    std::size_t count = 0;
    for (const auto& s : images) {
        if (!std::isfinite(s.psnr_db)) {
            ++count;
        }
    }
    return count;
}

std::string EvalReport::to_table() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    std::size_t name_width = 5;
    for (const auto& s : images) {
        name_width = std::max(name_width, s.name.size());
    }
    os << "scale x" << scale << ", shave " << shave << " px\n";
    for (const auto& s : images) {
        os << s.name << std::string(name_width - s.name.size() + 2, ' ');
        if (std::isfinite(s.psnr_db)) {
            os.precision(2);
            os << s.psnr_db;
        } else {
            os << "inf";
        }
        os << " dB  ";
        os.precision(4);
        os << s.ssim << "\n";
    }
    os << "average" << std::string(name_width > 7 ? name_width - 7 + 2 : 2, ' ');
    os.precision(2);
    os << average_psnr() << " dB  ";
    os.precision(4);
    os << average_ssim() << "\n";
    if (infinite_psnr_count() > 0) {
        os << "note: " << infinite_psnr_count()
           << " image(s) with infinite PSNR excluded from the PSNR average\n";
    }
    return os.str();
}

std::string EvalReport::to_tsv() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(6);
    for (const auto& s : images) {
        os << s.name << "\t";
        if (std::isfinite(s.psnr_db)) {
            os << s.psnr_db;
        } else {
            os << "inf";
        }
        os << "\t" << s.ssim << "\n";
    }
    os << "average\t" << average_psnr() << "\t" << average_ssim() << "\n";
    return os.str();
}

}  // namespace mssr
