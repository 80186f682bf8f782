#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "mssr/commands.hpp"
#include "mssr/errors.hpp"

namespace {

void add_common_options(CLI::App* cmd, mssr::RunConfig& cfg) {
    cmd->add_option("--scale", cfg.scale, "Upscaling factor")
        ->check(CLI::IsMember({2, 3, 4}))
        ->capture_default_str();
    cmd->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
    cmd->add_option("--data", cfg.data_dir, "Input image file or directory")->required();
    cmd->add_option("--out", cfg.out_dir, "Output directory");
    std::map<std::string, mssr::RunConfig::Precision> precisions{
        {"std", mssr::RunConfig::Precision::standard},
        {"high", mssr::RunConfig::Precision::high}};
    cmd->add_option("--precision", cfg.precision, "Numeric precision (std|high)")
        ->transform(CLI::CheckedTransformer(precisions, CLI::ignore_case));
}

void add_model_options(CLI::App* cmd, mssr::RunConfig& cfg, bool* n_set, bool* m_set) {
    cmd->add_option("--n", cfg.n, "Filters per dilated branch")
        ->check(CLI::PositiveNumber)
        ->capture_default_str()
        ->trigger_on_parse()
        ->each([n_set](const std::string&) { *n_set = true; });
    cmd->add_option("--m", cfg.m, "Feature-enhancement iterations")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str()
        ->trigger_on_parse()
        ->each([m_set](const std::string&) { *m_set = true; });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MSSRNet: multi-scale single-image super-resolution"};
    app.require_subcommand(1);

    mssr::RunConfig cfg;
    bool n_set = false;
    bool m_set = false;

    CLI::App* train = app.add_subcommand("train", "Train a model on a directory of images");
    add_common_options(train, cfg);
    add_model_options(train, cfg, &n_set, &m_set);
    train->add_option("--epochs", cfg.epochs, "Training epochs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train->add_option("--iters", cfg.iters_per_epoch, "Iterations per epoch")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train->add_option("--batch", cfg.batch, "Batch size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train->add_option("--patch", cfg.patch, "Training patch size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train->add_option("--holdout", cfg.holdout, "Holdout fraction for per-epoch PSNR")
        ->check(CLI::Range(0.0, 0.9))
        ->capture_default_str();

    CLI::App* sr = app.add_subcommand("sr", "Super-resolve image(s) with trained weights");
    add_common_options(sr, cfg);
    add_model_options(sr, cfg, &n_set, &m_set);
    sr->add_option("--weights", cfg.weights_path, "Weight file (.mssr)")->required();

    CLI::App* eval = app.add_subcommand("eval", "PSNR/SSIM benchmark against HR images");
    add_common_options(eval, cfg);
    add_model_options(eval, cfg, &n_set, &m_set);
    eval->add_option("--weights", cfg.weights_path, "Weight file (.mssr)");
    eval->add_flag("--bicubic-only", cfg.bicubic_only, "Evaluate the bicubic baseline only");

    CLI11_PARSE(app, argc, argv);
    cfg.n_explicit = n_set;
    cfg.m_explicit = m_set;

    try {
        if (train->parsed()) {
            cfg.command = mssr::RunConfig::Command::train;
            const mssr::TrainResult result = mssr::cmd_train(cfg);
            std::cout << "weights written to " << result.weights_path.string() << "\n";
        } else if (sr->parsed()) {
            cfg.command = mssr::RunConfig::Command::sr;
            for (const auto& path : mssr::cmd_sr(cfg)) {
                std::cout << path.string() << "\n";
            }
        } else if (eval->parsed()) {
            cfg.command = mssr::RunConfig::Command::eval;
            const mssr::EvalReport report = mssr::cmd_eval(cfg);
            std::cout << report.to_table();
        }
    } catch (const mssr::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
