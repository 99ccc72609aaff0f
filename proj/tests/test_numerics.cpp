#include <doctest.h>

#include <cmath>

#include "core/gradcheck.hpp"
#include "core/matrix.hpp"
#include "core/rng.hpp"

using namespace tkan;

TEST_CASE("matmul identity and hand arithmetic") {
    Matrix eye(2, 2);
    eye(0, 0) = eye(1, 1) = 1.0;
    Matrix a(2, 2);
    a(0, 0) = 1;
    a(0, 1) = 2;
    a(1, 0) = 3;
    a(1, 1) = 4;
    const Matrix b = matmul(eye, a);
    for (int i = 0; i < 4; ++i) CHECK(b.data[i] == a.data[i]);

    Matrix row(1, 2);
    row(0, 0) = 1;
    row(0, 1) = 2;
    Matrix col(2, 1);
    col(0, 0) = 3;
    col(1, 0) = 4;
    const Matrix prod = matmul(row, col);
    CHECK(prod.rows == 1);
    CHECK(prod.cols == 1);
    CHECK(prod(0, 0) == 11.0);
}

TEST_CASE("matmul matches the naive triple-loop oracle") {
    RngState rng(42);
    Matrix a(5, 4), b(4, 3);
    for (double& v : a.data) v = rng.uniform(-2, 2);
    for (double& v : b.data) v = rng.uniform(-2, 2);
    const Matrix got = matmul(a, b);
    // plain i-j-k oracle
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += a(i, k) * b(k, j);
            CHECK(got(i, j) == doctest::Approx(acc).epsilon(1e-12));
        }
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
    Matrix a(2, 3), b(2, 2);
    CHECK_THROWS_AS(matmul(a, b), Error);
    try {
        matmul(a, b);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::dimension_mismatch);
    }
}

TEST_CASE("matmul associativity on random conformable triples") {
    RngState rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const int m = 2 + static_cast<int>(rng.next_u64() % 5);
        const int n = 2 + static_cast<int>(rng.next_u64() % 5);
        const int p = 2 + static_cast<int>(rng.next_u64() % 5);
        const int q = 2 + static_cast<int>(rng.next_u64() % 5);
        Matrix a(m, n), b(n, p), c(p, q);
        for (double& v : a.data) v = rng.uniform(-1, 1);
        for (double& v : b.data) v = rng.uniform(-1, 1);
        for (double& v : c.data) v = rng.uniform(-1, 1);
        const Matrix left = matmul(matmul(a, b), c);
        const Matrix right = matmul(a, matmul(b, c));
        for (size_t i = 0; i < left.data.size(); ++i) {
            const double denom = std::max({std::fabs(left.data[i]), std::fabs(right.data[i]), 1.0});
            CHECK(std::fabs(left.data[i] - right.data[i]) / denom < 1e-9);
        }
    }
}

TEST_CASE("finite_diff_grad on analytic functions") {
    SUBCASE("square") {
        std::vector<double> p{3.0};
        auto grad = finite_diff_grad([](std::span<const double> v) { return v[0] * v[0]; }, p,
                                     1e-6);
        CHECK(grad[0] == doctest::Approx(6.0).epsilon(1e-6));
    }
    SUBCASE("constant function has zero gradient") {
        std::vector<double> p{1.0, -2.0, 0.5};
        auto grad = finite_diff_grad([](std::span<const double>) { return 4.25; }, p, 1e-6);
        for (double g : grad) CHECK(g == doctest::Approx(0.0));
    }
    SUBCASE("sum of cubes") {
        RngState rng(3);
        std::vector<double> p = seeded_uniform(rng, -1.5, 1.5, 6);
        auto f = [](std::span<const double> v) {
            double acc = 0.0;
            for (double x : v) acc += x * x * x;
            return acc;
        };
        auto grad = finite_diff_grad(f, p, 1e-6);
        for (size_t i = 0; i < p.size(); ++i) {
            const double expected = 3.0 * p[i] * p[i];
            const double denom = std::max({std::fabs(expected), std::fabs(grad[i]), 1e-3});
            CHECK(std::fabs(grad[i] - expected) / denom < 1e-6);
        }
    }
    SUBCASE("rejects non-positive step") {
        std::vector<double> p{1.0};
        CHECK_THROWS_AS(
            finite_diff_grad([](std::span<const double> v) { return v[0]; }, p, 0.0), Error);
    }
    SUBCASE("non-finite function output is a typed error") {
        std::vector<double> p{1.0};
        auto f = [](std::span<const double> v) { return std::log(-1.0 + 0.0 * v[0]); };
        CHECK_THROWS_AS(finite_diff_grad(f, p, 1e-6), Error);
    }
}

TEST_CASE("seeded_uniform determinism and range") {
    SUBCASE("same seed twice gives identical vectors") {
        RngState a(99), b(99);
        const auto va = seeded_uniform(a, -1, 1, 64);
        const auto vb = seeded_uniform(b, -1, 1, 64);
        CHECK(va == vb);
    }
    SUBCASE("n = 0 gives an empty vector") {
        RngState rng(1);
        CHECK(seeded_uniform(rng, 0, 1, 0).empty());
    }
    SUBCASE("lo >= hi is rejected") {
        RngState rng(1);
        CHECK_THROWS_AS(seeded_uniform(rng, 1.0, 1.0, 4), Error);
    }
    SUBCASE("mean of 1e5 draws on [0,1)") {
        RngState rng(2024);
        const auto v = seeded_uniform(rng, 0, 1, 100000);
        double mean = 0.0;
        for (double x : v) {
            CHECK(x >= 0.0);
            CHECK(x < 1.0);
            mean += x;
        }
        mean /= static_cast<double>(v.size());
        CHECK(mean > 0.49);
        CHECK(mean < 0.51);
    }
}

TEST_CASE("split streams are independent of draw order") {
    RngState root(5);
    RngState a = root.split(1);
    RngState b = root.split(2);
    const double a1 = a.next_unit();
    // Splitting again after draws on siblings must not change the stream.
    RngState root2(5);
    RngState b2 = root2.split(2);
    const double b1 = b.next_unit();
    CHECK(b1 == b2.next_unit());
    CHECK(a1 != b1);
}

TEST_CASE("compare_gradients reports the worst coordinate") {
    std::vector<double> analytic{1.0, 2.0, 3.0};
    std::vector<double> numeric{1.0, 2.5, 3.0};
    const GradCheckReport report = compare_gradients(analytic, numeric);
    CHECK(report.worst_parameter_index == 1);
    CHECK(report.max_relative_error == doctest::Approx(0.5 / 2.5));
    CHECK(report.analytic_value == 2.0);
    CHECK(report.numeric_value == 2.5);
}
