#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mssr/tensor.hpp"
#include "support/test_support.hpp"

using namespace mssr;

TEST_CASE("create fills every element") {
    const TensorF z = create<float>({1, 1, 2, 2}, 0.0f);
    for (const float v : z.values()) {
        CHECK(v == 0.0f);
    }
    const TensorF c = create<float>({1, 2, 1, 1}, 3.5f);
    REQUIRE(c.size() == 2);
    CHECK(c.data()[0] == 3.5f);
    CHECK(c.data()[1] == 3.5f);
    CHECK(create<float>({2, 3, 4, 5}, 1.0f).size() == 120);
}

TEST_CASE("create rejects bad dims") {
    CHECK_THROWS_AS(create<float>({0, 1, 1, 1}, 0.0f), ShapeError);
    CHECK_THROWS_AS(create<float>({1, -2, 1, 1}, 0.0f), ShapeError);
    CHECK_THROWS_AS(create<float>({2000000, 2000000, 2000000, 1}, 0.0f), ShapeError);
}

TEST_CASE("layout roundtrip and index formula") {
    const Dims dims{2, 3, 4, 5};
    TensorF t = TensorF::zeros(dims);
    float v = 0.25f;
    for (int n = 0; n < dims.n; ++n) {
        for (int c = 0; c < dims.c; ++c) {
            for (int h = 0; h < dims.h; ++h) {
                for (int w = 0; w < dims.w; ++w) {
                    t.at(n, c, h, w) = v;
                    CHECK(t.at(n, c, h, w) == v);
                    CHECK(t.index(n, c, h, w) ==
                          static_cast<std::size_t>(((n * dims.c + c) * dims.h + h) * dims.w + w));
                    v += 0.125f;
                }
            }
        }
    }
    // every element visited exactly once
    std::size_t distinct = 0;
    float prev = -1.0f;
    for (const float x : t.values()) {
        CHECK(x > prev);
        prev = x;
        ++distinct;
    }
    CHECK(distinct == dims.count());
}

TEST_CASE("elementwise add/sub/mul") {
    std::mt19937_64 rng(1);
    const TensorF x = testsup::random_tensor<float>({2, 2, 3, 3}, rng);
    const TensorF zeros = TensorF::zeros(x.dims());

    CHECK(add(x, zeros) == x);
    CHECK(sub(x, x) == zeros);

    TensorF a = create<float>({1, 1, 1, 2}, 0.0f);
    TensorF b = a;
    a.data()[0] = 2.0f;
    a.data()[1] = 3.0f;
    b.data()[0] = 4.0f;
    b.data()[1] = 5.0f;
    const TensorF prod = mul(a, b);
    CHECK(prod.data()[0] == 8.0f);
    CHECK(prod.data()[1] == 15.0f);

    CHECK_THROWS_AS(add(x, create<float>({2, 2, 3, 4}, 0.0f)), ShapeError);
}

TEST_CASE("elementwise add is commutative and near-associative") {
    std::mt19937_64 rng(2);
    for (int round = 0; round < 5; ++round) {
        const TensorF a = testsup::random_tensor<float>({1, 3, 5, 7}, rng);
        const TensorF b = testsup::random_tensor<float>({1, 3, 5, 7}, rng);
        const TensorF c = testsup::random_tensor<float>({1, 3, 5, 7}, rng);
        CHECK(add(a, b) == add(b, a));  // IEEE addition commutes exactly
        const TensorF left = add(add(a, b), c);
        const TensorF right = add(a, add(b, c));
        CHECK(testsup::max_abs_diff(left, right) < 1e-6);
    }
}

TEST_CASE("reduce_mean_square") {
    CHECK(reduce_mean_square(TensorF::zeros({1, 1, 4, 1})) == 0.0);
    CHECK(reduce_mean_square(create<float>({1, 1, 2, 2}, 1.0f)) == 1.0);

    TensorF t = create<float>({1, 1, 1, 2}, 0.0f);
    t.data()[0] = 3.0f;
    t.data()[1] = 4.0f;
    CHECK(reduce_mean_square(t) == doctest::Approx(12.5).epsilon(1e-12));
}

TEST_CASE("reduce_mean_square scales quadratically in high precision") {
    std::mt19937_64 rng(3);
    for (const double k : {2.0, -3.5, 0.125}) {
        const TensorD a = testsup::random_tensor<double>({2, 3, 8, 8}, rng);
        TensorD scaled = a;
        for (double& v : scaled.values()) {
            v *= k;
        }
        const double lhs = reduce_mean_square(scaled);
        const double rhs = k * k * reduce_mean_square(a);
        CHECK(std::abs(lhs - rhs) / rhs < 1e-12);
    }
}
