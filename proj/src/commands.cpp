#include "mssr/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "mssr/nn_ops.hpp"
#include "mssr/optim.hpp"
#include "mssr/weights_io.hpp"

namespace mssr {

namespace {

constexpr double kLossEmaAlpha = 0.01;  // ~100-iteration smoothing horizon

std::string format_psnr(double v) {
    if (std::isnan(v)) {
        return "-";
    }
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(3);
    os << v;
    return os.str();
}

std::string format_loss(double v) {
    std::ostringstream os;
    os.precision(6);
    os << std::scientific << v;
    return os.str();
}

void ensure_out_dir(const std::string& dir) {
    if (!dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) {
            throw IoError("cannot create output dir " + dir + ": " + ec.message());
        }
    }
}

// Check an explicit --n/--m request against a weight-file header.
void check_weight_compat(const RunConfig& cfg, const NetConfig& header_cfg) {
    if ((cfg.n_explicit && cfg.n != header_cfg.n) || (cfg.m_explicit && cfg.m != header_cfg.m)) {
        throw CompatibilityError("weight file has n=" + std::to_string(header_cfg.n) +
                                 ", m=" + std::to_string(header_cfg.m) +
                                 " but the command requested n=" + std::to_string(cfg.n) +
                                 ", m=" + std::to_string(cfg.m));
    }
}

void warn_scale_mismatch(std::uint32_t file_scale, int requested) {
    if (file_scale != 0 && file_scale != static_cast<std::uint32_t>(requested)) {
        std::cerr << "warning: weight file was trained for scale x" << file_scale
                  << " but running at x" << requested << "\n";
    }
}

}  // namespace

template <typename T>
Tensor<T> luma_to_tensor(const ImagePlane& plane) {
    if (plane.channels() != 1) {
        throw ArgumentError("luma_to_tensor: expected a single-channel plane");
    }
    Tensor<T> t = Tensor<T>::uninitialized({1, 1, plane.height, plane.width});
    T* dst = t.data();
    const float* src = plane.channel(0);
    const std::size_t count = plane.plane_size();
    for (std::size_t i = 0; i < count; ++i) {
        dst[i] = static_cast<T>(src[i]);
    }
    return t;
}

template <typename T>
ImagePlane tensor_to_luma(const Tensor<T>& t) {
    if (t.dims().n != 1 || t.dims().c != 1) {
        throw ArgumentError("tensor_to_luma: expected a (1,1,H,W) tensor");
    }
    ImagePlane plane(t.dims().w, t.dims().h, ColorSpace::Y);
    const T* src = t.data();
    for (std::size_t i = 0; i < plane.samples.size(); ++i) {
        plane.samples[i] = static_cast<float>(src[i]);
    }
    return plane;
}

template Tensor<float> luma_to_tensor<float>(const ImagePlane&);
template Tensor<double> luma_to_tensor<double>(const ImagePlane&);
template ImagePlane tensor_to_luma<float>(const Tensor<float>&);
template ImagePlane tensor_to_luma<double>(const Tensor<double>&);

template <typename T>
double mean_psnr_network(const MSSRNet<T>& net, const std::vector<ImagePlane>& hr_luma,
                         int scale) {
    if (hr_luma.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double sum = 0.0;
    for (const ImagePlane& hr : hr_luma) {
        const DegradeResult d = degrade(hr, scale);
        const Tensor<T> out = predict_hr(net, luma_to_tensor<T>(d.lr_interp));
        sum += psnr(d.hr, tensor_to_luma(out), scale);
    }
    return sum / static_cast<double>(hr_luma.size());
}

template double mean_psnr_network<float>(const MSSRNet<float>&, const std::vector<ImagePlane>&, int);
template double mean_psnr_network<double>(const MSSRNet<double>&, const std::vector<ImagePlane>&, int);

double mean_psnr_bicubic(const std::vector<ImagePlane>& hr_luma, int scale) {
    if (hr_luma.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double sum = 0.0;
    for (const ImagePlane& hr : hr_luma) {
        const DegradeResult d = degrade(hr, scale);
        sum += psnr(d.hr, d.lr_interp, scale);
    }
    return sum / static_cast<double>(hr_luma.size());
}

template <typename T>
TrainResult run_training(const RunConfig& cfg, const TrainCorpus& corpus,
                         const std::vector<ImagePlane>& holdout_hr, std::ostream* log) {
    if (cfg.epochs < 1 || cfg.iters_per_epoch < 1 || cfg.batch < 1) {
        throw ArgumentError("run_training: epochs, iterations and batch must be >= 1");
    }
    ensure_out_dir(cfg.out_dir);
    const std::filesystem::path out_dir = cfg.out_dir.empty() ? "." : cfg.out_dir;

    NetConfig net_cfg;
    net_cfg.n = cfg.n;
    net_cfg.m = cfg.m;
    net_cfg.c = 1;
    net_cfg.seed = cfg.seed;
    MSSRNet<T> net = build_network<T>(net_cfg);
    std::vector<ParamView<T>> params = collect_parameters(net);
    AdamState<T> adam = make_adam_state(params);

    // Separate stream from weight init so batch draws do not depend on n, m.
    std::mt19937_64 sample_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

    TrainResult result;
    result.smoothed_loss.reserve(static_cast<std::size_t>(cfg.epochs) * cfg.iters_per_epoch);
    double ema = 0.0;
    std::int64_t step = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = learning_rate_for_epoch(epoch, cfg.epochs);
        for (int iter = 0; iter < cfg.iters_per_epoch; ++iter) {
            auto [x, y] = corpus.sample_batch<T>(cfg.batch, sample_rng);
            ForwardCache<T> cache;
            const Tensor<T> residual = forward(net, x, &cache);
            LossResult<T> loss = mse_loss(residual, y);
            if (!std::isfinite(loss.loss)) {
                throw NumericError("training aborted: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", iteration " +
                                   std::to_string(iter + 1) +
                                   " (last checkpoint retained in " + out_dir.string() + ")");
            }
            MSSRNet<T> grads = backward(net, cache, loss.grad_pred);
            std::vector<ParamView<T>> grad_views = collect_parameters(grads);
            adam_step(params, grad_views, adam, lr);

            ++step;
            ema = (1.0 - kLossEmaAlpha) * ema + kLossEmaAlpha * loss.loss;
            const double corrected =
                ema / (1.0 - std::pow(1.0 - kLossEmaAlpha, static_cast<double>(step)));
            result.smoothed_loss.push_back(corrected);
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.lr = lr;
        entry.train_loss = result.smoothed_loss.back();
        entry.holdout_psnr = mean_psnr_network(net, holdout_hr, cfg.scale);
        result.epochs.push_back(entry);
        if (log != nullptr) {
            (*log) << epoch << "\t" << lr << "\t" << format_loss(entry.train_loss) << "\t"
                   << format_psnr(entry.holdout_psnr) << "\n";
            log->flush();
        }
        if (epoch % 10 == 0 && epoch != cfg.epochs) {
            save_weights(net, static_cast<std::uint32_t>(cfg.scale),
                         out_dir / ("ckpt_" + std::to_string(epoch) + ".mssr"));
        }
    }

    result.weights_path = out_dir / "weights.mssr";
    save_weights(net, static_cast<std::uint32_t>(cfg.scale), result.weights_path);
    result.final_holdout_psnr = mean_psnr_network(net, holdout_hr, cfg.scale);
    result.bicubic_holdout_psnr = mean_psnr_bicubic(holdout_hr, cfg.scale);
    return result;
}

template TrainResult run_training<float>(const RunConfig&, const TrainCorpus&,
                                         const std::vector<ImagePlane>&, std::ostream*);
template TrainResult run_training<double>(const RunConfig&, const TrainCorpus&,
                                          const std::vector<ImagePlane>&, std::ostream*);

TrainResult cmd_train(const RunConfig& cfg) {
    std::vector<ImagePlane> planes =
        TrainCorpus::load_directory(cfg.data_dir, cfg.scale, cfg.patch);
    if (planes.empty()) {
        throw IoError("no usable training images in " + cfg.data_dir);
    }

    // Filename-sorted, evenly spaced holdout selection.
    std::vector<ImagePlane> train_planes;
    std::vector<ImagePlane> holdout_planes;
    const std::size_t total = planes.size();
    std::size_t holdout_count =
        static_cast<std::size_t>(std::floor(static_cast<double>(total) * cfg.holdout + 0.5));
    holdout_count = std::min(holdout_count, total - 1);
    std::vector<bool> is_holdout(total, false);
    for (std::size_t k = 0; k < holdout_count; ++k) {
        is_holdout[k * total / holdout_count] = true;
    }
    for (std::size_t i = 0; i < total; ++i) {
        (is_holdout[i] ? holdout_planes : train_planes).push_back(std::move(planes[i]));
    }

    TrainCorpus corpus(std::move(train_planes), cfg.scale, cfg.patch);

    ensure_out_dir(cfg.out_dir);
    const std::filesystem::path out_dir = cfg.out_dir.empty() ? "." : cfg.out_dir;
    std::ofstream log_file(out_dir / "train.log");
    struct Tee : std::ostream, std::streambuf {
        std::ostream& a;
        std::ostream& b;
        Tee(std::ostream& a_, std::ostream& b_) : std::ostream(this), a(a_), b(b_) {}
        int overflow(int c) override {
            if (c != EOF) {
                a.put(static_cast<char>(c));
                b.put(static_cast<char>(c));
            }
            return c;
        }
    } tee(std::cout, log_file);

    if (cfg.precision == RunConfig::Precision::high) {
        return run_training<double>(cfg, corpus, holdout_planes, &tee);
    }
    return run_training<float>(cfg, corpus, holdout_planes, &tee);
}

namespace {

template <typename T>
ImagePlane sr_one_image(const MSSRNet<T>& net, const ImagePlane& rgb, int scale) {
    const ImagePlane ycbcr = rgb_to_ycbcr(rgb);
    const ImagePlane up =
        bicubic_resize(ycbcr, ycbcr.width * scale, ycbcr.height * scale);

    ImagePlane y_only(up.width, up.height, ColorSpace::Y);
    std::copy_n(up.channel(0), up.plane_size(), y_only.channel(0));
    const Tensor<T> sr_y = predict_hr(net, luma_to_tensor<T>(y_only));

    ImagePlane merged = up;
    const ImagePlane sr_plane = tensor_to_luma(sr_y);
    std::copy_n(sr_plane.channel(0), merged.plane_size(), merged.channel(0));
    return ycbcr_to_rgb(merged);
}

std::vector<std::filesystem::path> collect_inputs(const std::string& data) {
    std::vector<std::filesystem::path> inputs;
    const std::filesystem::path p(data);
    if (std::filesystem::is_directory(p)) {
        for (const auto& entry : std::filesystem::directory_iterator(p)) {
            if (entry.is_regular_file()) {
                inputs.push_back(entry.path());
            }
        }
        std::sort(inputs.begin(), inputs.end());
    } else if (std::filesystem::is_regular_file(p)) {
        inputs.push_back(p);
    } else {
        throw IoError("input not found: " + data);
    }
    return inputs;
}

}  // namespace

std::vector<std::filesystem::path> cmd_sr(const RunConfig& cfg) {
    if (cfg.weights_path.empty()) {
        throw ArgumentError("sr: --weights is required");
    }
    std::uint32_t file_scale = 0;
    const MSSRNet<float> net = load_weights(cfg.weights_path, &file_scale);
    check_weight_compat(cfg, net.cfg);
    warn_scale_mismatch(file_scale, cfg.scale);
    ensure_out_dir(cfg.out_dir);
    const std::filesystem::path out_dir = cfg.out_dir.empty() ? "." : cfg.out_dir;

    std::vector<std::filesystem::path> written;
    for (const auto& path : collect_inputs(cfg.data_dir)) {
        ImagePlane rgb;
        try {
            rgb = load_image(path);
        } catch (const FormatError&) {
            std::cerr << "warning: skipping non-image file " << path.filename().string() << "\n";
            continue;
        }
        const ImagePlane out = sr_one_image(net, rgb, cfg.scale);
        const std::filesystem::path dst =
            out_dir / (path.stem().string() + "_x" + std::to_string(cfg.scale) +
                       path.extension().string());
        save_image(out, dst);
        written.push_back(dst);
    }
    return written;
}

EvalReport cmd_eval(const RunConfig& cfg) {
    MSSRNet<float> net;
    bool have_net = false;
    if (!cfg.bicubic_only) {
        if (cfg.weights_path.empty()) {
            throw ArgumentError("eval: --weights is required unless --bicubic-only is set");
        }
        std::uint32_t file_scale = 0;
        net = load_weights(cfg.weights_path, &file_scale);
        check_weight_compat(cfg, net.cfg);
        warn_scale_mismatch(file_scale, cfg.scale);
        have_net = true;
    }

    EvalReport report;
    report.scale = cfg.scale;
    report.shave = cfg.scale;
    for (const auto& path : collect_inputs(cfg.data_dir)) {
        ImagePlane rgb;
        try {
            rgb = load_image(path);
        } catch (const FormatError&) {
            std::cerr << "warning: skipping non-image file " << path.filename().string() << "\n";
            continue;
        }
        const DegradeResult d = degrade(rgb_to_y(rgb), cfg.scale);
        ImagePlane reconstructed;
        if (have_net) {
            reconstructed = tensor_to_luma(predict_hr(net, luma_to_tensor<float>(d.lr_interp)));
        } else {
            reconstructed = d.lr_interp;
        }
        ImageScore score;
        score.name = path.filename().string();
        score.psnr_db = psnr(d.hr, reconstructed, cfg.scale);
        score.ssim = ssim(d.hr, reconstructed, cfg.scale);
        report.images.push_back(std::move(score));
    }
    if (report.images.empty()) {
        throw IoError("no usable evaluation images in " + cfg.data_dir);
    }
    if (!cfg.out_dir.empty()) {
        ensure_out_dir(cfg.out_dir);
        std::ofstream tsv(std::filesystem::path(cfg.out_dir) / "eval.tsv");
        tsv << report.to_tsv();
    }
    return report;
}

}  // namespace mssr
