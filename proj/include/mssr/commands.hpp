#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mssr/dataset.hpp"
#include "mssr/imaging.hpp"
#include "mssr/metrics.hpp"
#include "mssr/model.hpp"
#include "mssr/tensor.hpp"

namespace mssr {

struct RunConfig {
    enum class Command { train, sr, eval };
    enum class Precision { standard, high };

    Command command = Command::train;
    int scale = 2;
    int n = 8;
    int m = 5;
    bool n_explicit = false;  // set when the user passed --n/--m; checked
    bool m_explicit = false;  // against weight-file headers
    int epochs = 100;
    int iters_per_epoch = 2000;
    int batch = 64;
    int patch = 48;
    std::uint64_t seed = 0;
    std::string data_dir;
    double holdout = 0.05;
    std::string weights_path;
    std::string out_dir;
    bool bicubic_only = false;
    Precision precision = Precision::standard;
};

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;    // smoothed loss at epoch end
    double holdout_psnr = 0.0;  // NaN when no holdout images
};

struct TrainResult {
    std::filesystem::path weights_path;
    std::vector<EpochLog> epochs;
    std::vector<double> smoothed_loss;  // one entry per iteration, bias-corrected EMA
    double final_holdout_psnr = 0.0;    // trained model on holdout (NaN if none)
    double bicubic_holdout_psnr = 0.0;  // baseline on the same images (NaN if none)
};

// Luminance plane <-> (1, 1, H, W) tensor bridges used by inference paths.
template <typename T>
Tensor<T> luma_to_tensor(const ImagePlane& plane);
template <typename T>
ImagePlane tensor_to_luma(const Tensor<T>& t);

// Mean PSNR (shave = scale) of the degrade->reconstruct pipeline over HR
// luminance planes, reconstructing with the network / plain bicubic.
template <typename T>
double mean_psnr_network(const MSSRNet<T>& net, const std::vector<ImagePlane>& hr_luma, int scale);
double mean_psnr_bicubic(const std::vector<ImagePlane>& hr_luma, int scale);

// Training loop on a prebuilt corpus: Adam + staged learning-rate schedule,
// per-epoch `epoch<TAB>lr<TAB>train_loss<TAB>holdout_psnr` lines to `log`,
// checkpoints every 10 epochs under cfg.out_dir, final weights saved there.
// Fully deterministic for a fixed cfg.seed.
template <typename T>
TrainResult run_training(const RunConfig& cfg, const TrainCorpus& corpus,
                         const std::vector<ImagePlane>& holdout_hr, std::ostream* log);

// CLI entry points. cmd_train loads the corpus from cfg.data_dir and splits
// the holdout by filename-sorted even spacing; cmd_sr upscales each input
// image through YCbCr (network on Y, bicubic on Cb/Cr); cmd_eval runs the
// degrade->reconstruct->PSNR/SSIM protocol on HR images.
TrainResult cmd_train(const RunConfig& cfg);
std::vector<std::filesystem::path> cmd_sr(const RunConfig& cfg);
EvalReport cmd_eval(const RunConfig& cfg);

}  // namespace mssr
