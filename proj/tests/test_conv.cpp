#include <doctest.h>

#include <cmath>

#include "neuroevo/conv.hpp"
#include "neuroevo/error.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace neuroevo;

namespace {

Matrix ramp(std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.values.size(); ++i) {
        m.values[i] = static_cast<double>(i);
    }
    return m;
}

void check_close(const Matrix& got, const oracle::Grid& want, double tol) {
    REQUIRE(got.rows == want.size());
    REQUIRE(got.cols == (want.empty() ? 0 : want[0].size()));
    for (std::size_t r = 0; r < got.rows; ++r) {
        for (std::size_t c = 0; c < got.cols; ++c) {
            REQUIRE(std::abs(got.at(r, c) - want[r][c]) <= tol);
        }
    }
}

} // namespace

TEST_SUITE("conv") {

TEST_CASE("activation functions") {
    CHECK(activate(0.0, ActivationKind::sigmoid) == 0.5);
    CHECK(activate(-3.0, ActivationKind::relu) == 0.0);
    CHECK(activate(2.5, ActivationKind::relu) == 2.5);
    CHECK(activate(-1.25, ActivationKind::linear) == -1.25);
    CHECK(activate(0.7, ActivationKind::tanh) == doctest::Approx(std::tanh(0.7)).epsilon(1e-15));

    const long double steep = 1.0L / (1.0L + std::exp(-4.9L));
    CHECK(std::abs(activate(1.0, ActivationKind::sigmoid_steepened) - static_cast<double>(steep)) < 1e-15);
    CHECK(activate(1.0, ActivationKind::sigmoid_steepened) == doctest::Approx(0.99261).epsilon(1e-5));

    for (auto kind : kAllActivations) {
        CHECK(parse_activation(to_string(kind)) == kind);
    }
    CHECK_FALSE(parse_activation("softmax"));
}

TEST_CASE("convolve worked examples") {
    const Matrix ones3(3, 3, 1.0);
    const Matrix out = convolve(ones3, Matrix(2, 2, 1.0), 1);
    CHECK(out.shape() == Shape{2, 2});
    for (double v : out.values) {
        CHECK(v == 4.0);
    }

    const Matrix img = ramp(4, 4);
    CHECK(convolve(img, Matrix(1, 1, 1.0), 1) == img);

    const Matrix diag(2, 2, std::vector<double>{1.0, 0.0, 0.0, -1.0});
    const Matrix strided = convolve(img, diag, 2);
    CHECK(strided.shape() == Shape{2, 2});
    for (double v : strided.values) {
        CHECK(v == -5.0);
    }

    CHECK_THROWS_AS(convolve(Matrix(2, 2, 0.0), Matrix(3, 3, 1.0), 1), ShapeError);
}

TEST_CASE("pool worked examples") {
    const Matrix m(2, 2, std::vector<double>{1, 2, 3, 4});
    CHECK(pool(m, PoolerKind::max, 2).values == std::vector<double>{4.0});
    CHECK(pool(m, PoolerKind::average, 2).values == std::vector<double>{2.5});
    CHECK(pool(m, PoolerKind::none, 2) == m);

    const Matrix five = ramp(5, 5);
    const Matrix pooled = pool(five, PoolerKind::max, 2);
    CHECK(pooled.shape() == Shape{2, 2});
    check_close(pooled, oracle::pool(oracle::to_grid(five), "max", 2), 0.0);

    CHECK_THROWS_AS(pool(Matrix(1, 3, 0.0), PoolerKind::max, 2), ShapeError);
}

TEST_CASE("shape algebra follows the closed forms") {
    Rng rng(11);
    for (int i = 0; i < 500; ++i) {
        const Shape in{1 + rng.index(12), 1 + rng.index(12)};
        const Shape k{1 + rng.index(5), 1 + rng.index(5)};
        const std::size_t stride = 1 + rng.index(3);
        const auto got = convolved_shape(in, k, stride);
        if (k.height > in.height || k.width > in.width) {
            CHECK_FALSE(got);
            continue;
        }
        REQUIRE(got);
        CHECK(got->height == (in.height - k.height) / stride + 1);
        CHECK(got->width == (in.width - k.width) / stride + 1);
        const std::size_t window = 1 + rng.index(4);
        const auto pooled = pooled_shape(*got, window);
        if (window > got->height || window > got->width) {
            CHECK_FALSE(pooled);
        } else {
            REQUIRE(pooled);
            CHECK(pooled->height == got->height / window);
            CHECK(pooled->width == got->width / window);
        }
    }
}

TEST_CASE("convolve and pool agree with nested-loop oracles") {
    Rng rng(2024);
    for (int i = 0; i < 300; ++i) {
        const Matrix img = gen::matrix(rng, 1 + rng.index(8), 1 + rng.index(8), 0.0, 1.0);
        const Matrix kernel = gen::matrix(rng, 1 + rng.index(std::min<std::size_t>(3, img.rows)),
                                          1 + rng.index(std::min<std::size_t>(3, img.cols)));
        const std::size_t stride = 1 + rng.index(2);
        const Matrix out = convolve(img, kernel, stride);
        check_close(out, oracle::convolve(oracle::to_grid(img), oracle::to_grid(kernel), stride), 1e-9);

        const std::size_t window = 1 + rng.index(std::min(out.rows, out.cols));
        check_close(pool(out, PoolerKind::max, window), oracle::pool(oracle::to_grid(out), "max", window), 1e-9);
        check_close(pool(out, PoolerKind::average, window), oracle::pool(oracle::to_grid(out), "average", window),
                    1e-9);
    }
}

TEST_CASE("convolve is linear in the image") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const std::size_t rows = 1 + rng.index(8);
        const std::size_t cols = 1 + rng.index(8);
        const Matrix a = gen::matrix(rng, rows, cols);
        const Matrix b = gen::matrix(rng, rows, cols);
        const Matrix k = gen::matrix(rng, 1 + rng.index(std::min<std::size_t>(3, rows)),
                                     1 + rng.index(std::min<std::size_t>(3, cols)));
        const double alpha = rng.uniform(-3.0, 3.0);
        const double beta = rng.uniform(-3.0, 3.0);
        Matrix mix(rows, cols);
        for (std::size_t j = 0; j < mix.values.size(); ++j) {
            mix.values[j] = alpha * a.values[j] + beta * b.values[j];
        }
        const std::size_t stride = 1 + rng.index(2);
        const Matrix lhs = convolve(mix, k, stride);
        const Matrix ca = convolve(a, k, stride);
        const Matrix cb = convolve(b, k, stride);
        for (std::size_t j = 0; j < lhs.values.size(); ++j) {
            REQUIRE(std::abs(lhs.values[j] - (alpha * ca.values[j] + beta * cb.values[j])) <= 1e-9);
        }
    }
}

TEST_CASE("max pooling dominates average pooling on non-negative maps") {
    Rng rng(99);
    for (int i = 0; i < 300; ++i) {
        const Matrix m = gen::matrix(rng, 1 + rng.index(9), 1 + rng.index(9), 0.0, 5.0);
        const std::size_t window = 1 + rng.index(std::min(m.rows, m.cols));
        const Matrix mx = pool(m, PoolerKind::max, window);
        const Matrix avg = pool(m, PoolerKind::average, window);
        for (std::size_t j = 0; j < mx.values.size(); ++j) {
            REQUIRE(mx.values[j] >= avg.values[j]);
        }
    }
}

}
