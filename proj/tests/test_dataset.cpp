#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "mssr/dataset.hpp"
#include "support/test_support.hpp"

using namespace mssr;

TEST_CASE("augment: group structure and orientation convention") {
    // 2x1 column [a; b] -> rot90 gives the 1x2 row [b a]
    ImagePlane col(1, 2, ColorSpace::Y);
    col.at(0, 0, 0) = 0.25f;  // a
    col.at(0, 1, 0) = 0.75f;  // b
    const auto variants = augment(col);
    const ImagePlane& rot = variants[1];
    REQUIRE(rot.width == 2);
    REQUIRE(rot.height == 1);
    CHECK(rot.at(0, 0, 0) == 0.75f);
    CHECK(rot.at(0, 0, 1) == 0.25f);

    const ImagePlane img = testsup::lcg_pattern(7, 5, 12);
    const auto v = augment(img);
    // rot90 four times is the identity
    const auto once = augment(v[1]);
    const auto twice = augment(once[1]);
    const auto thrice = augment(twice[1]);
    CHECK(thrice[1].samples == img.samples);
    CHECK(v[2].samples == once[1].samples);  // rot180 == rot90 applied twice

    // flip is an involution
    const auto flipped = augment(v[4]);
    CHECK(flipped[4].samples == img.samples);

    // all 8 variants distinct for an asymmetric image
    for (int i = 0; i < 8; ++i) {
        for (int j = i + 1; j < 8; ++j) {
            const bool same_dims =
                v[i].width == v[j].width && v[i].height == v[j].height;
            CHECK((!same_dims || v[i].samples != v[j].samples));
        }
    }

    // rotations/flips permute the pixel multiset
    auto sorted = [](const ImagePlane& p) {
        std::vector<float> s = p.samples;
        std::sort(s.begin(), s.end());
        return s;
    };
    const auto reference = sorted(img);
    for (const auto& variant : v) {
        CHECK(sorted(variant) == reference);
    }
}

TEST_CASE("corpus materializes 8 variants per source") {
    std::vector<ImagePlane> sources;
    sources.push_back(testsup::smooth_pattern(64, 1));
    sources.push_back(testsup::smooth_pattern(64, 2));
    const TrainCorpus corpus(std::move(sources), 2, 48);
    CHECK(corpus.size() == 16);
    CHECK(corpus.scale() == 2);
    CHECK(corpus.patch_size() == 48);
}

TEST_CASE("sampled pairs align: x + y reconstructs the HR patch") {
    std::vector<ImagePlane> sources{testsup::smooth_pattern(72, 3)};
    const TrainCorpus corpus(std::move(sources), 3, 48);

    std::mt19937_64 rng(4);
    const auto [x, y] = corpus.sample_batch<float>(16, rng);
    REQUIRE(x.dims() == Dims{16, 1, 48, 48});
    REQUIRE(y.dims() == Dims{16, 1, 48, 48});

    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(x.data()[i] >= 0.0f);
        CHECK(x.data()[i] <= 1.0f);
        CHECK(y.data()[i] >= -1.0f);
        CHECK(y.data()[i] <= 1.0f);
    }

    // locate each patch by exhaustive match against the stored planes and
    // verify x + y equals the HR pixels there
    for (int b = 0; b < 16; ++b) {
        bool located = false;
        for (std::size_t e = 0; e < corpus.size() && !located; ++e) {
            const DegradeResult d = corpus.entry(e);
            for (int y0 = 0; y0 + 48 <= d.hr.height && !located; ++y0) {
                for (int x0 = 0; x0 + 48 <= d.hr.width && !located; ++x0) {
                    bool match = true;
                    for (int r = 0; r < 48 && match; r += 7) {
                        for (int c = 0; c < 48 && match; c += 7) {
                            match = x.at(b, 0, r, c) == d.lr_interp.at(0, y0 + r, x0 + c);
                        }
                    }
                    if (!match) {
                        continue;
                    }
                    located = true;
                    for (int r = 0; r < 48; ++r) {
                        for (int c = 0; c < 48; ++c) {
                            const float sum = x.at(b, 0, r, c) + y.at(b, 0, r, c);
                            CHECK(std::abs(sum - d.hr.at(0, y0 + r, x0 + c)) < 1e-7f);
                        }
                    }
                }
            }
        }
        CHECK(located);
    }
}

TEST_CASE("sampling is deterministic per seed") {
    std::vector<ImagePlane> a{testsup::smooth_pattern(64, 5)};
    std::vector<ImagePlane> b{testsup::smooth_pattern(64, 5)};
    const TrainCorpus ca(std::move(a), 2, 48);
    const TrainCorpus cb(std::move(b), 2, 48);
    std::mt19937_64 rng_a(99);
    std::mt19937_64 rng_b(99);
    const auto [xa, ya] = ca.sample_batch<float>(8, rng_a);
    const auto [xb, yb] = cb.sample_batch<float>(8, rng_b);
    CHECK(xa == xb);
    CHECK(ya == yb);
}

TEST_CASE("image selection frequency is uniform") {
    // two sources, no augmentation: the image index is recoverable from a
    // marker pixel value baked into each source
    ImagePlane first = testsup::smooth_pattern(48, 6);
    ImagePlane second = testsup::smooth_pattern(48, 7);
    for (float& v : first.samples) {
        v = v * 0.5f;  // [0, 0.5)
    }
    for (float& v : second.samples) {
        v = 0.5f + v * 0.5f;  // [0.5, 1)
    }
    std::vector<ImagePlane> sources;
    sources.push_back(std::move(first));
    sources.push_back(std::move(second));
    const TrainCorpus corpus(std::move(sources), 1, 48, /*augment_sources=*/false);
    REQUIRE(corpus.size() == 2);

    std::mt19937_64 rng(1234);
    const int draws = 100000;
    int first_count = 0;
    for (int i = 0; i < draws; i += 100) {
        const auto [x, y] = corpus.sample_batch<float>(100, rng);
        for (int b = 0; b < 100; ++b) {
            // scale 1 means lr_interp == hr, so x carries the marker range
            if (x.at(b, 0, 0, 0) < 0.5f) {
                ++first_count;
            }
        }
    }
    // binomial(1e5, 1/2): 3 sigma ~ 474
    CHECK(std::abs(first_count - draws / 2) < 3 * 159);
}

TEST_CASE("lazy mode produces identical batches") {
    std::vector<ImagePlane> eager_src{testsup::smooth_pattern(64, 8)};
    std::vector<ImagePlane> lazy_src{testsup::smooth_pattern(64, 8)};
    const TrainCorpus eager(std::move(eager_src), 2, 48, true, /*eager=*/true);
    const TrainCorpus lazy(std::move(lazy_src), 2, 48, true, /*eager=*/false);
    std::mt19937_64 rng_a(5);
    std::mt19937_64 rng_b(5);
    const auto [xa, ya] = eager.sample_batch<float>(4, rng_a);
    const auto [xb, yb] = lazy.sample_batch<float>(4, rng_b);
    CHECK(xa == xb);
    CHECK(ya == yb);
}

TEST_CASE("corpus construction errors") {
    CHECK_THROWS_AS(TrainCorpus(std::vector<ImagePlane>{}, 2, 48), StateError);
    std::vector<ImagePlane> small{testsup::lcg_pattern(32, 32, 1)};
    CHECK_THROWS_AS(TrainCorpus(std::move(small), 2, 48), ArgumentError);

    std::vector<ImagePlane> ok{testsup::smooth_pattern(64, 9)};
    const TrainCorpus corpus(std::move(ok), 2, 48);
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(corpus.sample_batch<float>(0, rng), ArgumentError);
}
