#pragma once

#include "nolana/baselines.hpp"
#include "nolana/landmarks.hpp"
#include "nolana/linalg.hpp"
#include "nolana/metrics.hpp"
#include "nolana/stream.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nolana {

// ||G - Gbar||_F / ||G||_F.
inline double relative_approx_error(const Eigen::Ref<const Matrix>& G,
                                    const Eigen::Ref<const Matrix>& Gbar) {
    if (G.rows() != Gbar.rows() || G.cols() != Gbar.cols())
        throw std::invalid_argument("relative_approx_error: shape mismatch");
    const double denom = G.norm();
    if (denom == 0.0)
        throw std::invalid_argument("relative_approx_error: zero reference matrix");
    return (G - Gbar).norm() / denom;
}

enum class ApproxMethod { Oana, Nogd, Fogd };

inline std::string to_string(ApproxMethod method) {
    switch (method) {
        case ApproxMethod::Oana: return "oana";
        case ApproxMethod::Nogd: return "nogd";
        case ApproxMethod::Fogd: return "fogd";
    }
    return "?";
}

struct ApproxConfig {
    ApproxMethod method = ApproxMethod::Oana;
    Index m = 100;
    Index r = 80;
    double epsilon = 0.0;
    KernelConfig kernel;
    int power_iters = 3;
    Index subset_size = 10000;  // capped at the stream length
    std::uint64_t seed = 1;     // subset sampling / Fourier frequencies
};

struct ApproxResult {
    Index map_budget = 0;
    double error = 0.0;
};

namespace detail {

// Drives the landmark state over the full stream under the same warm-up
// protocol as the learner (buffer m points, then replay them through the
// gate).
inline LandmarkState run_landmarks(const SampleStream& stream, const ApproxConfig& cfg) {
    const double epsilon =
        cfg.method == ApproxMethod::Nogd ? kNeverUpdate : cfg.epsilon;
    if (stream.size() < cfg.m)
        throw InsufficientWarmupError("stream shorter than the landmark budget");
    Matrix warmup(cfg.m, stream.dim());
    for (Index i = 0; i < cfg.m; ++i)
        warmup.row(i) = stream.at(i).features.transpose();
    LandmarkState state(warmup, cfg.r, epsilon, cfg.kernel, cfg.power_iters);
    for (Index t = 0; t < cfg.m; ++t) state.maybe_update(stream.at(t).features);
    for (Index t = cfg.m; t < stream.size(); ++t)
        state.maybe_update(stream.at(t).features);
    return state;
}

inline std::vector<Index> sample_subset(Index population, Index subset,
                                        std::uint64_t seed) {
    std::vector<Index> pool(static_cast<std::size_t>(population));
    for (Index i = 0; i < population; ++i) pool[static_cast<std::size_t>(i)] = i;
    if (subset >= population) return pool;
    std::uint64_t state = seed;
    for (Index i = 0; i < subset; ++i) {
        state = splitmix64(state);
        const std::uint64_t span = static_cast<std::uint64_t>(population - i);
        const auto j = static_cast<Index>(state % span) + i;
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(subset));
    return pool;
}

// Frobenius ratio between the exact kernel matrix of `points` and the
// feature Gram of `embedded`, accumulated over row blocks so neither
// matrix is held whole.
inline double blocked_relative_error(const Matrix& points, const Matrix& embedded,
                                     const KernelConfig& kernel) {
    const Index n = points.rows();
    const Index block = 512;
    double err_sq = 0.0;
    double norm_sq = 0.0;
    for (Index start = 0; start < n; start += block) {
        const Index rows = std::min(block, n - start);
        const Matrix exact =
            kernel_cross(points.middleRows(start, rows), points, kernel);
        const Matrix approx =
            embedded.middleRows(start, rows) * embedded.transpose();
        err_sq += (exact - approx).squaredNorm();
        norm_sq += exact.squaredNorm();
    }
    if (norm_sq == 0.0)
        throw std::invalid_argument("blocked_relative_error: zero reference matrix");
    return std::sqrt(err_sq / norm_sq);
}

}  // namespace detail

// Runs one method's map-construction state over the whole stream, then
// measures the relative kernel approximation error on a held subset.
inline ApproxResult approx_experiment(const SampleStream& stream,
                                      const ApproxConfig& cfg) {
    if (cfg.subset_size < 1)
        throw std::invalid_argument("approx_experiment: subset must be >= 1");
    const Index subset_size = std::min(cfg.subset_size, stream.size());
    const std::vector<Index> subset =
        detail::sample_subset(stream.size(), subset_size, derive_seed(cfg.seed, 0xa9));

    Matrix points(subset_size, stream.dim());
    for (Index i = 0; i < subset_size; ++i)
        points.row(i) = stream.at(subset[static_cast<std::size_t>(i)]).features.transpose();

    ApproxResult out;
    if (cfg.method == ApproxMethod::Fogd) {
        const Index projection =
            FourierFeatures::parity_dim(cfg.m, cfg.r, stream.dim());
        const FourierFeatures ff = FourierFeatures::make(
            stream.dim(), projection, cfg.kernel.gamma, derive_seed(cfg.seed, 0xf0));
        Matrix embedded(subset_size, projection);
        for (Index i = 0; i < subset_size; ++i)
            embedded.row(i) = rff_map(points.row(i).transpose(), ff).transpose();
        out.map_budget = ff.omega.size() + ff.phase.size();
        out.error = detail::blocked_relative_error(points, embedded, cfg.kernel);
        return out;
    }

    const LandmarkState state = detail::run_landmarks(stream, cfg);
    Matrix embedded(subset_size, state.r());
    for (Index i = 0; i < subset_size; ++i)
        embedded.row(i) = state.feature_map(points.row(i).transpose()).transpose();
    out.map_budget = state.stored_reals();
    out.error = detail::blocked_relative_error(points, embedded, cfg.kernel);
    return out;
}

// Cumulative online loss minus the loss of the best fixed model over the
// final feature map (squared loss only; the comparator is the ridge
// optimum of the total regularized loss). `upto` restricts both sides to
// a stream prefix.
inline double regret_diagnostic(const MetricsLog& log, const Matrix& final_features,
                                const Vector& labels, double lambda,
                                Index upto = -1) {
    if (log.task() != Task::Regression)
        throw std::invalid_argument("regret diagnostic supports squared loss only");
    const Index total = static_cast<Index>(log.records().size());
    if (final_features.rows() != total || labels.size() != total)
        throw std::invalid_argument("regret diagnostic: feature/label rows must match the log");
    const Index horizon = (upto < 0 || upto > total) ? total : upto;
    if (horizon < 1)
        throw std::invalid_argument("regret diagnostic: empty horizon");

    const auto prefix = final_features.topRows(horizon);
    const auto y = labels.head(horizon);

    // Comparator: argmin over w of sum_t [ (lambda/2)||w||^2 + (y_t - w.phi_t)^2 ].
    const double ridge = 0.5 * lambda * static_cast<double>(horizon);
    Matrix gram = prefix.transpose() * prefix;
    gram.diagonal().array() += ridge;
    Eigen::LDLT<Matrix> solver(gram);
    if (solver.info() != Eigen::Success)
        throw SingularSystemError("regret diagnostic: comparator solve failed");
    const Vector w_star = solver.solve(prefix.transpose() * y);

    const Vector residual = y - prefix * w_star;
    const double comparator_loss =
        residual.squaredNorm() + ridge * w_star.squaredNorm();

    double online_loss = 0.0;
    for (Index t = 0; t < horizon; ++t)
        online_loss += log.records()[static_cast<std::size_t>(t)].loss;
    return online_loss - comparator_loss;
}

}  // namespace nolana
