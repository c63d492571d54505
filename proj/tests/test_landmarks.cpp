#include "nolana/landmarks.hpp"

#include "test_support.hpp"

#include <catch_amalgamated.hpp>

using namespace nolana;

namespace {

KernelConfig kernel_of(double gamma) {
    KernelConfig cfg;
    cfg.gamma = gamma;
    return cfg;
}

LandmarkState random_state(testsup::Rng& rng, Index m, Index dim, Index r,
                           double epsilon, double gamma) {
    return LandmarkState(testsup::kernel_test_points(rng, m, dim), r, epsilon,
                         kernel_of(gamma));
}

}  // namespace

TEST_CASE("single-landmark state is the scalar kernel") {
    Matrix warmup(1, 2);
    warmup << 0.5, -1.0;
    LandmarkState state(warmup, 1, 0.0, kernel_of(1.0));
    CHECK(state.eig().values[0] == 1.0);

    Vector x(2);
    x << 1.0, 0.0;
    const Vector phi = state.feature_map(x);
    REQUIRE(phi.size() == 1);
    CHECK_THAT(phi[0],
               Catch::Matchers::WithinAbs(
                   gaussian_kernel(x, warmup.row(0).transpose(), kernel_of(1.0)),
                   1e-14));
}

TEST_CASE("initialization computes the exact factorization") {
    testsup::Rng rng(61);
    Matrix warmup = testsup::random_matrix(rng, 3, 4, 2.0);
    LandmarkState state(warmup, 3, 0.0, kernel_of(0.6));
    CHECK(state.reconstruction_error() < 1e-8);
    for (long c : state.counts()) CHECK(c == 1);
}

TEST_CASE("duplicate landmarks are permitted") {
    Matrix warmup(3, 2);
    warmup << 1.0, 2.0, 1.0, 2.0, -1.0, 0.5;
    LandmarkState state(warmup, 3, 0.0, kernel_of(1.0));
    // Rank-deficient kernel matrix: the clipped spectrum still yields a map.
    const Vector phi = state.feature_map(warmup.row(0).transpose());
    CHECK(phi.allFinite());
}

TEST_CASE("empty warm-up is rejected") {
    CHECK_THROWS_AS(LandmarkState(Matrix(0, 3), 1, 0.0, kernel_of(1.0)),
                    InsufficientWarmupError);
}

TEST_CASE("nearest landmark by hand") {
    Matrix warmup(2, 1);
    warmup << 0.0, 10.0;
    LandmarkState state(warmup, 2, 0.0, kernel_of(1.0));

    Vector x(1);
    x << 1.0;
    auto [q, dist] = state.nearest(x);
    CHECK(q == 0);
    CHECK(dist == 1.0);

    x << 5.0;  // equidistant: lowest index wins
    std::tie(q, dist) = state.nearest(x);
    CHECK(q == 0);
    CHECK(dist == 25.0);

    CHECK_THROWS_AS(state.nearest(Vector::Zero(2)), std::invalid_argument);
}

TEST_CASE("nearest landmark matches the exhaustive scan") {
    testsup::Rng rng(67);
    LandmarkState state = random_state(rng, 100, 5, 80, 0.0, 0.5);
    for (int trial = 0; trial < 100; ++trial) {
        const Vector x = testsup::random_vector(rng, 5, 2.5);
        Index best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (Index q = 0; q < state.m(); ++q) {
            const double d = (x - state.landmarks().row(q).transpose()).squaredNorm();
            if (d < best_d) {
                best = q;
                best_d = d;
            }
        }
        const auto [q, dist] = state.nearest(x);
        CHECK(q == best);
        CHECK(dist == best_d);
    }
}

TEST_CASE("zero epsilon always updates, zero distance never does at positive epsilon") {
    testsup::Rng rng(71);
    LandmarkState always = random_state(rng, 5, 3, 4, 0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial)
        CHECK(always.maybe_update(testsup::random_vector(rng, 3, 2.0)).updated());

    LandmarkState gated = random_state(rng, 5, 3, 4, 0.5, 1.0);
    const Vector at_landmark = gated.landmarks().row(2).transpose();
    CHECK_FALSE(gated.maybe_update(at_landmark).updated());
}

TEST_CASE("centroid update is the running mean") {
    Matrix warmup(2, 2);
    warmup << 1.0, 1.0, 9.0, 9.0;
    LandmarkState state(warmup, 2, 1.0, kernel_of(0.1));

    // Absorb the landmark twice to raise its count to 3 (epsilon pulls the
    // gate open only for far points, so use epsilon = 0 clone).
    LandmarkState open(warmup, 2, 0.0, kernel_of(0.1));
    Vector u0(2);
    u0 << 1.0, 1.0;
    open.maybe_update(u0);
    open.maybe_update(u0);
    CHECK(open.counts()[0] == 3);
    CHECK((open.landmarks().row(0).transpose() - u0).norm() == 0.0);

    Vector x(2);
    x << 5.0, 5.0;
    const UpdateOutcome outcome = open.maybe_update(x);
    REQUIRE(outcome.updated());
    CHECK(outcome.cluster == 0);
    Vector expected(2);
    expected << 2.0, 2.0;  // (3 * 1 + 5) / 4
    CHECK((outcome.new_centroid - expected).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((open.landmarks().row(0).transpose() - expected).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(open.counts()[0] == 4);
}

TEST_CASE("rank-2 delta reconstructs the swapped kernel matrix") {
    testsup::Rng rng(73);
    KernelConfig kernel = kernel_of(0.7);
    LandmarkState state(testsup::kernel_test_points(rng, 10, 4), 8, 0.0, kernel);

    const Index q = 3;
    const Vector new_u =
        state.landmarks().row(q).transpose() + testsup::random_vector(rng, 4, 0.6);
    const auto [indicator, change] = state.rank2_delta(q, new_u);

    CHECK(indicator[q] == 1.0);
    CHECK(indicator.cwiseAbs().sum() == 1.0);
    CHECK(change[q] == 0.0);  // unit diagonal for the Gaussian kernel

    Matrix swapped_pts = state.landmarks();
    swapped_pts.row(q) = new_u.transpose();
    const Matrix expected = testsup::naive_kernel_matrix(swapped_pts, swapped_pts,
                                                         kernel.gamma);
    const Matrix actual =
        testsup::naive_kernel_matrix(state.landmarks(), state.landmarks(),
                                     kernel.gamma) +
        indicator * change.transpose() + change * indicator.transpose();
    CHECK((expected - actual).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("feature gram matches the pseudo-inverse form at full rank") {
    testsup::Rng rng(79);
    KernelConfig kernel = kernel_of(0.5);
    const Index m = 12;
    LandmarkState state(testsup::kernel_test_points(rng, m, 3), m, 0.0, kernel);

    const Matrix queries = testsup::random_matrix(rng, 20, 3, 2.0);
    Matrix phi(queries.rows(), m);
    for (Index i = 0; i < queries.rows(); ++i)
        phi.row(i) = state.feature_map(queries.row(i).transpose()).transpose();

    const Matrix cross = testsup::naive_kernel_matrix(
        queries, state.landmarks(), kernel.gamma);
    const Matrix e = testsup::naive_kernel_matrix(state.landmarks(),
                                                  state.landmarks(), kernel.gamma);
    const Matrix expected = cross * testsup::dense_pinv(e) * cross.transpose();
    CHECK((phi * phi.transpose() - expected).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("feature map length equals the rank") {
    testsup::Rng rng(83);
    LandmarkState state = random_state(rng, 9, 4, 6, 0.0, 0.9);
    for (int trial = 0; trial < 5; ++trial)
        CHECK(state.feature_map(testsup::random_vector(rng, 4)).size() == 6);
}

TEST_CASE("budget and count bookkeeping over a stream") {
    testsup::Rng rng(89);
    const Index m = 8, dim = 3, r = 6;
    LandmarkState state = random_state(rng, m, dim, r, 0.05, 0.8);
    const Index budget = state.stored_reals();
    CHECK(budget == m * dim + m * r + m + r);

    long updates = 0;
    for (int t = 0; t < 120; ++t) {
        const Vector x = testsup::random_vector(rng, dim, 2.5);
        if (state.maybe_update(x).updated()) ++updates;
        CHECK(state.stored_reals() == budget);
    }
    long count_sum = 0;
    for (long c : state.counts()) count_sum += c;
    CHECK(count_sum == m + updates);
    CHECK(updates > 0);
}

TEST_CASE("infinite epsilon freezes the state") {
    testsup::Rng rng(97);
    LandmarkState state = random_state(rng, 6, 3, 5, kNeverUpdate, 0.7);
    const Matrix before = state.landmarks();
    const Vector values = state.eig().values;
    for (int t = 0; t < 50; ++t)
        CHECK_FALSE(state.maybe_update(testsup::random_vector(rng, 3, 3.0)).updated());
    CHECK((state.landmarks() - before).cwiseAbs().maxCoeff() == 0.0);
    CHECK((state.eig().values - values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("refresh quality stays near the from-scratch solve during a stream") {
    testsup::Rng rng(101);
    const Index m = 40;
    const Index r = 32;
    LandmarkState state = random_state(rng, m, 4, r, 0.0, 0.5);
    for (int t = 0; t < 25; ++t) {
        const Vector x = testsup::random_vector(rng, 4, 2.5);
        REQUIRE(state.maybe_update(x).updated());
        const Matrix e = kernel_cross(state.landmarks(), state.landmarks(),
                                      state.kernel());
        const EigPair exact = truncated_eig(e, r);
        const double exact_err =
            (e - exact.vectors * exact.values.asDiagonal() * exact.vectors.transpose())
                .norm();
        CHECK(state.reconstruction_error() <= 10.0 * exact_err + 1e-12);
    }
}

TEST_CASE("centroid moves along the segment to the point") {
    testsup::Rng rng(103);
    LandmarkState state = random_state(rng, 5, 3, 4, 0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        const Vector x = testsup::random_vector(rng, 3, 2.0);
        const UpdateOutcome outcome = state.maybe_update(x);
        REQUIRE(outcome.updated());
        // new = old + s (x - old) with s = 1/(N+1) in (0, 1].
        const Vector direction = x - outcome.old_centroid;
        const Vector step = outcome.new_centroid - outcome.old_centroid;
        if (direction.norm() == 0.0) {
            CHECK(step.norm() == 0.0);
            continue;
        }
        const double s = step.norm() / direction.norm();
        CHECK(s > 0.0);
        CHECK(s <= 1.0 + 1e-12);
        const Vector residual = step - s * direction;
        CHECK(residual.cwiseAbs().maxCoeff() < 1e-10);
    }
}
