#include "nolana/kernel.hpp"

#include "test_support.hpp"

#include <catch_amalgamated.hpp>

using namespace nolana;

TEST_CASE("gaussian kernel closed forms") {
    KernelConfig cfg;
    cfg.gamma = 0.5;
    Vector zero = Vector::Zero(1);
    Vector one = Vector::Ones(1);

    CHECK(gaussian_kernel(one, one, cfg) == 1.0);
    CHECK_THAT(gaussian_kernel(zero, one, cfg),
               Catch::Matchers::WithinAbs(std::exp(-0.5), 1e-12));

    cfg.gamma = 3.7;
    testsup::Rng rng(7);
    Vector x = testsup::random_vector(rng, 5);
    CHECK(gaussian_kernel(x, x, cfg) == 1.0);
}

TEST_CASE("gaussian kernel matches the per-coordinate oracle") {
    testsup::Rng rng(11);
    KernelConfig cfg;
    cfg.gamma = 0.31;
    for (int trial = 0; trial < 20; ++trial) {
        Vector x = testsup::random_vector(rng, 50, 2.0);
        Vector z = testsup::random_vector(rng, 50, 2.0);
        const double expected = testsup::naive_gaussian_kernel(x, z, cfg.gamma);
        CHECK_THAT(gaussian_kernel(x, z, cfg),
                   Catch::Matchers::WithinAbs(expected, 1e-12));
        CHECK(gaussian_kernel(x, z, cfg) == gaussian_kernel(z, x, cfg));
        CHECK(gaussian_kernel(x, z, cfg) > 0.0);
        CHECK(gaussian_kernel(x, z, cfg) < 1.0);  // 1 only at x == z
    }
}

TEST_CASE("gaussian kernel rejects mismatched dimensions") {
    KernelConfig cfg;
    CHECK_THROWS_AS(gaussian_kernel(Vector::Zero(3), Vector::Zero(4), cfg),
                    std::invalid_argument);
}

TEST_CASE("kernel_cross single self row") {
    KernelConfig cfg;
    cfg.gamma = 2.0;
    Matrix a(1, 3);
    a << 0.2, -0.4, 1.0;
    const Matrix k = kernel_cross(a, a, cfg);
    REQUIRE(k.rows() == 1);
    REQUIRE(k.cols() == 1);
    CHECK(k(0, 0) == 1.0);
}

TEST_CASE("kernel_cross matches the entrywise oracle and is symmetric") {
    testsup::Rng rng(13);
    KernelConfig cfg;
    cfg.gamma = 0.7;
    const Matrix a = testsup::random_matrix(rng, 5, 3);
    const Matrix b = testsup::random_matrix(rng, 4, 3);

    const Matrix k = kernel_cross(a, b, cfg);
    const Matrix expected = testsup::naive_kernel_matrix(a, b, cfg.gamma);
    CHECK((k - expected).cwiseAbs().maxCoeff() < 1e-12);

    const Matrix kt = kernel_cross(b, a, cfg);
    CHECK((k - kt.transpose()).cwiseAbs().maxCoeff() == 0.0);

    Matrix wide = testsup::random_matrix(rng, 2, 5);
    CHECK_THROWS_AS(kernel_cross(a, wide, cfg), std::invalid_argument);
}

TEST_CASE("kernel_row agrees with kernel_cross") {
    testsup::Rng rng(17);
    KernelConfig cfg;
    cfg.gamma = 1.3;
    const Matrix landmarks = testsup::random_matrix(rng, 6, 4);
    const Vector x = testsup::random_vector(rng, 4);
    Matrix row(1, 4);
    row.row(0) = x.transpose();
    const Vector expected = kernel_cross(row, landmarks, cfg).row(0).transpose();
    CHECK((kernel_row(x, landmarks, cfg) - expected).cwiseAbs().maxCoeff() == 0.0);
}
