#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "mssr/commands.hpp"
#include "mssr/weights_io.hpp"
#include "mssr/optim.hpp"
#include "support/test_support.hpp"

using namespace mssr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("mssr_cmd_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

// Small corpus of structured synthetic images on disk.
void write_corpus(const fs::path& dir, int count, int size) {
    fs::create_directories(dir);
    for (int i = 0; i < count; ++i) {
        ImagePlane img = testsup::smooth_pattern(size, 100 + static_cast<std::uint32_t>(i));
        char name[32];
        std::snprintf(name, sizeof(name), "img_%02d.bmp", i);
        save_image(img, dir / name);
    }
}

MSSRNet<float> zero_residual_net(int n, int m, std::uint64_t seed) {
    NetConfig cfg;
    cfg.n = n;
    cfg.m = m;
    cfg.seed = seed;
    auto net = build_network<float>(cfg);
    net.recon.weights = TensorF::zeros(net.recon.weights.dims());
    return net;
}

}  // namespace

TEST_CASE("descent on a one-image corpus") {
    std::vector<ImagePlane> sources{testsup::smooth_pattern(96, 200)};
    const TrainCorpus corpus(std::move(sources), 2, 48);

    RunConfig cfg;
    cfg.n = 2;
    cfg.m = 1;
    cfg.scale = 2;
    cfg.epochs = 1;
    cfg.iters_per_epoch = 200;
    cfg.batch = 8;
    cfg.seed = 7;
    TempDir tmp;
    cfg.out_dir = (tmp.path / "run").string();

    const TrainResult result = run_training<float>(cfg, corpus, {}, nullptr);
    REQUIRE(result.smoothed_loss.size() == 200);
    CHECK(result.smoothed_loss[199] < result.smoothed_loss[9]);
    CHECK(fs::exists(result.weights_path));
    CHECK(std::isnan(result.final_holdout_psnr));  // no holdout images
}

TEST_CASE("training is deterministic: identical weight files") {
    TempDir tmp;
    auto run_once = [&](const std::string& tag) {
        std::vector<ImagePlane> sources{testsup::smooth_pattern(80, 300)};
        const TrainCorpus corpus(std::move(sources), 2, 48);
        RunConfig cfg;
        cfg.n = 2;
        cfg.m = 0;
        cfg.scale = 2;
        cfg.epochs = 2;
        cfg.iters_per_epoch = 25;
        cfg.batch = 4;
        cfg.seed = 99;
        cfg.out_dir = (tmp.path / tag).string();
        return run_training<float>(cfg, corpus, {}, nullptr).weights_path;
    };
    const fs::path a = run_once("a");
    const fs::path b = run_once("b");
    CHECK(read_bytes(a) == read_bytes(b));
}

TEST_CASE("epoch log carries the staged learning rate") {
    std::vector<ImagePlane> sources{testsup::smooth_pattern(72, 400)};
    const TrainCorpus corpus(std::move(sources), 2, 48);
    std::vector<ImagePlane> holdout{testsup::smooth_pattern(72, 401)};

    RunConfig cfg;
    cfg.n = 1;
    cfg.m = 0;
    cfg.scale = 2;
    cfg.epochs = 5;
    cfg.iters_per_epoch = 10;
    cfg.batch = 2;
    cfg.seed = 1;
    TempDir tmp;
    cfg.out_dir = (tmp.path / "lr").string();

    std::ostringstream log;
    const TrainResult result = run_training<float>(cfg, corpus, holdout, &log);
    REQUIRE(result.epochs.size() == 5);
    for (int e = 1; e <= 5; ++e) {
        CHECK(result.epochs[static_cast<std::size_t>(e - 1)].lr ==
              learning_rate_for_epoch(e, 5));
        CHECK(std::isfinite(result.epochs[static_cast<std::size_t>(e - 1)].holdout_psnr));
    }
    // one tab-separated line per epoch
    int lines = 0;
    std::string line;
    std::istringstream is(log.str());
    while (std::getline(is, line)) {
        CHECK(std::count(line.begin(), line.end(), '\t') == 3);
        ++lines;
    }
    CHECK(lines == 5);
    CHECK(result.bicubic_holdout_psnr > 20.0);
}

TEST_CASE("cmd_train end to end with holdout split and checkpoints") {
    TempDir tmp;
    write_corpus(tmp.path / "data", 4, 72);
    RunConfig cfg;
    cfg.command = RunConfig::Command::train;
    cfg.n = 1;
    cfg.m = 0;
    cfg.scale = 2;
    cfg.epochs = 10;
    cfg.iters_per_epoch = 5;
    cfg.batch = 2;
    cfg.seed = 3;
    cfg.holdout = 0.25;  // 1 of 4 images held out
    cfg.data_dir = (tmp.path / "data").string();
    cfg.out_dir = (tmp.path / "out").string();

    const TrainResult result = cmd_train(cfg);
    CHECK(fs::exists(result.weights_path));
    CHECK(fs::exists(tmp.path / "out" / "train.log"));
    CHECK(!std::isnan(result.final_holdout_psnr));
    CHECK(result.epochs.size() == 10);

    const WeightHeader header = peek_weights(result.weights_path);
    CHECK(header.cfg.n == 1);
    CHECK(header.scale == 2);
}

TEST_CASE("cmd_sr with a zero-residual net reduces to bicubic upscaling") {
    TempDir tmp;
    // color input: full YCbCr path
    ImagePlane rgb(40, 32, ColorSpace::RGB);
    testsup::Lcg lcg(9);
    for (float& v : rgb.samples) {
        v = lcg.next();
    }
    save_image(rgb, tmp.path / "in.png");

    const auto net = zero_residual_net(2, 0, 5);
    save_weights(net, 2, tmp.path / "zero.mssr");

    RunConfig cfg;
    cfg.command = RunConfig::Command::sr;
    cfg.scale = 2;
    cfg.weights_path = (tmp.path / "zero.mssr").string();
    cfg.data_dir = (tmp.path / "in.png").string();
    cfg.out_dir = (tmp.path / "sr").string();

    const auto written = cmd_sr(cfg);
    REQUIRE(written.size() == 1);
    const ImagePlane out = load_image(written[0]);
    CHECK(out.width == 80);
    CHECK(out.height == 64);

    // reference: plain bicubic in YCbCr, merged back to RGB
    const ImagePlane loaded = load_image(tmp.path / "in.png");
    const ImagePlane expect =
        ycbcr_to_rgb(bicubic_resize(rgb_to_ycbcr(loaded), 80, 64));
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        const float q = std::round(std::clamp(expect.samples[i], 0.0f, 1.0f) * 255.0f) / 255.0f;
        CHECK(out.samples[i] == doctest::Approx(q).epsilon(1e-7));
    }
}

TEST_CASE("cmd_sr validates weight compatibility") {
    TempDir tmp;
    save_image(testsup::smooth_pattern(48, 7), tmp.path / "in.bmp");
    save_weights(zero_residual_net(2, 1, 8), 2, tmp.path / "w.mssr");

    RunConfig cfg;
    cfg.command = RunConfig::Command::sr;
    cfg.scale = 2;
    cfg.weights_path = (tmp.path / "w.mssr").string();
    cfg.data_dir = (tmp.path / "in.bmp").string();
    cfg.out_dir = (tmp.path / "o").string();
    cfg.n = 4;
    cfg.n_explicit = true;  // conflicts with the n=2 header
    CHECK_THROWS_AS(cmd_sr(cfg), CompatibilityError);

    cfg.n_explicit = false;
    CHECK(cmd_sr(cfg).size() == 1);
}

TEST_CASE("cmd_eval bicubic baseline and network mode") {
    TempDir tmp;
    write_corpus(tmp.path / "hr", 3, 64);

    RunConfig cfg;
    cfg.command = RunConfig::Command::eval;
    cfg.scale = 2;
    cfg.bicubic_only = true;
    cfg.data_dir = (tmp.path / "hr").string();
    cfg.out_dir = (tmp.path / "report").string();

    const EvalReport report = cmd_eval(cfg);
    REQUIRE(report.images.size() == 3);
    CHECK(report.scale == 2);
    CHECK(report.shave == 2);
    for (const auto& s : report.images) {
        CHECK(s.psnr_db > 20.0);
        CHECK(s.ssim > 0.5);
        CHECK(s.ssim <= 1.0);
    }
    CHECK(fs::exists(tmp.path / "report" / "eval.tsv"));

    // zero-residual network: identical to the bicubic baseline
    save_weights(zero_residual_net(1, 0, 2), 2, tmp.path / "z.mssr");
    RunConfig net_cfg = cfg;
    net_cfg.bicubic_only = false;
    net_cfg.weights_path = (tmp.path / "z.mssr").string();
    const EvalReport net_report = cmd_eval(net_cfg);
    REQUIRE(net_report.images.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(net_report.images[i].psnr_db ==
              doctest::Approx(report.images[i].psnr_db).epsilon(1e-9));
    }

    // mismatched scale tag: warn but run
    save_weights(zero_residual_net(1, 0, 2), 3, tmp.path / "s3.mssr");
    net_cfg.weights_path = (tmp.path / "s3.mssr").string();
    CHECK(cmd_eval(net_cfg).images.size() == 3);
}

TEST_CASE("luma/tensor bridges") {
    const ImagePlane img = testsup::lcg_pattern(9, 5, 77);
    const TensorF t = luma_to_tensor<float>(img);
    REQUIRE(t.dims() == Dims{1, 1, 5, 9});
    const ImagePlane back = tensor_to_luma(t);
    CHECK(back.samples == img.samples);
    CHECK_THROWS_AS(luma_to_tensor<float>(ImagePlane(2, 2, ColorSpace::RGB)), ArgumentError);
}
