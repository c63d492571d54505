#pragma once

#include "nolana/kernel.hpp"
#include "nolana/learner.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nolana {

namespace detail {

// Self-contained seeded draws so sampled projections do not depend on the
// standard library's distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    double uniform01() {
        state_ = splitmix64(state_);
        return static_cast<double>(state_ >> 11) * 0x1.0p-53;
    }

    double normal(double stddev) {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return stddev * std::sqrt(-2.0 * std::log1p(-u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t state_;
};

}  // namespace detail

// Random cosine features approximating the Gaussian kernel: frequencies
// drawn from its spectral density (coordinate-wise Normal(0, 2*gamma)),
// phases uniform on [0, 2*pi).
struct FourierFeatures {
    Matrix omega;  // D x d
    Vector phase;  // D
    double scale = 0.0;
    std::uint64_t seed = 0;

    static FourierFeatures make(Index dim, Index projection_dim, double gamma,
                                std::uint64_t seed) {
        if (dim < 1 || projection_dim < 1)
            throw std::invalid_argument("FourierFeatures: dimensions must be >= 1");
        if (!(gamma > 0.0))
            throw std::invalid_argument("FourierFeatures: gamma must be positive");
        FourierFeatures ff;
        ff.seed = seed;
        ff.omega.resize(projection_dim, dim);
        ff.phase.resize(projection_dim);
        ff.scale = std::sqrt(2.0 / static_cast<double>(projection_dim));
        detail::Rng rng(seed);
        const double stddev = std::sqrt(2.0 * gamma);
        for (Index i = 0; i < projection_dim; ++i)
            for (Index j = 0; j < dim; ++j)
                ff.omega(i, j) = rng.normal(stddev);
        for (Index i = 0; i < projection_dim; ++i)
            ff.phase[i] = 2.0 * std::numbers::pi * rng.uniform01();
        return ff;
    }

    // Projection dimension giving the same stored-real budget as a
    // landmark method with parameters (m, r) on d-dimensional data.
    static Index parity_dim(Index m, Index r, Index dim) {
        const Index projection = (m * dim + m * r) / dim;
        if (projection < 1)
            throw ConfigError("budget parity yields an empty projection");
        return projection;
    }
};

inline Vector rff_map(const Eigen::Ref<const Vector>& x, const FourierFeatures& ff) {
    if (x.size() != ff.omega.cols())
        throw std::invalid_argument("rff_map: dimension mismatch");
    return ff.scale * ((ff.omega * x + ff.phase).array().cos());
}

// Linear passive-aggressive model in the input space. No budget beyond
// the weight vector.
struct PAModel {
    Vector w;
    double aggressiveness = std::numeric_limits<double>::infinity();
    bool classification = true;
    double eps_insensitive = 0.1;  // regression dead zone
};

struct PAStepResult {
    double prediction = 0.0;
    double loss = 0.0;
    PAModel model;
    bool updated = false;
    bool skipped_zero_norm = false;
};

// Closed-form margin-fitting step: tau = min(aggressiveness, loss/||x||^2),
// moved along y*x (classification) or sign(residual)*x (regression). A
// zero-norm point with positive loss cannot be fit and is skipped.
inline PAStepResult pa_step(const PAModel& model, const Eigen::Ref<const Vector>& x,
                            double y) {
    if (model.w.size() != x.size())
        throw std::invalid_argument("pa_step: dimension mismatch");
    PAStepResult out;
    out.model = model;
    out.prediction = model.w.dot(x);

    double direction = 0.0;
    if (model.classification) {
        if (y != 1.0 && y != -1.0)
            throw std::invalid_argument("pa_step: classification labels must be +-1");
        out.loss = std::max(0.0, 1.0 - y * out.prediction);
        direction = y;
    } else {
        const double residual = y - out.prediction;
        out.loss = std::max(0.0, std::abs(residual) - model.eps_insensitive);
        direction = residual >= 0.0 ? 1.0 : -1.0;
    }
    if (out.loss == 0.0) return out;

    const double norm_sq = x.squaredNorm();
    if (norm_sq == 0.0) {
        out.skipped_zero_norm = true;
        return out;
    }
    const double tau = std::min(model.aggressiveness, out.loss / norm_sq);
    out.model.w += tau * direction * x;
    out.updated = true;
    return out;
}

class PaLearner : public StreamLearner {
public:
    PaLearner(Index dim, double aggressiveness, bool classification,
              double eps_insensitive = 0.1) {
        model_.w = Vector::Zero(dim);
        model_.aggressiveness = aggressiveness;
        model_.classification = classification;
        model_.eps_insensitive = eps_insensitive;
    }

    std::vector<StepRecord> process(const Sample& sample) override {
        const PAStepResult r = pa_step(model_, sample.features, sample.label);
        model_ = r.model;
        if (r.skipped_zero_norm) ++skipped_updates_;
        StepRecord rec;
        rec.prediction = r.prediction;
        rec.label = sample.label;
        rec.loss = r.loss;
        rec.updated = r.updated;
        return {rec};
    }

    const PAModel& model() const { return model_; }
    long skipped_updates() const { return skipped_updates_; }

    BudgetReport budget() const override {
        BudgetReport report;
        report.method = name();
        report.weight_reals = model_.w.size();
        return report;
    }

    std::string name() const override { return "pa"; }

private:
    PAModel model_;
    long skipped_updates_ = 0;
};

struct FogdConfig {
    Index projection_dim = 0;  // 0: derive from (m, r) budget parity
    Index m = 100;
    Index r = 80;
    double gamma = 1.0;
    double eta = 0.2;
    double lambda = 0.0;
    LossKind loss = LossKind::Hinge;
    bool eta_decay = false;
    std::uint64_t seed = 1;
};

// Random-Fourier-feature online gradient descent under the same step rule
// as the landmark learners.
class FogdLearner : public StreamLearner {
public:
    FogdLearner(FogdConfig cfg, Index dim)
        : cfg_(cfg),
          features_(FourierFeatures::make(
              dim,
              cfg.projection_dim > 0 ? cfg.projection_dim
                                     : FourierFeatures::parity_dim(cfg.m, cfg.r, dim),
              cfg.gamma, cfg.seed)) {
        model_.w = Vector::Zero(features_.omega.rows());
        model_.eta = cfg.eta;
        model_.lambda = cfg.lambda;
        model_.loss = cfg.loss;
    }

    std::vector<StepRecord> process(const Sample& sample) override {
        ++step_count_;
        const Vector z = rff_map(sample.features, features_);
        StepRecord rec;
        rec.prediction = predict(model_, z);
        rec.label = sample.label;
        rec.loss = loss_and_grad(model_.loss, sample.label, rec.prediction).value;
        const double eta_eff =
            cfg_.eta_decay ? cfg_.eta / std::sqrt(static_cast<double>(step_count_))
                           : cfg_.eta;
        model_ = sgd_step(model_, z, sample.label, eta_eff);
        return {rec};
    }

    const FourierFeatures& features() const { return features_; }
    const OnlineModel& model() const { return model_; }

    BudgetReport budget() const override {
        BudgetReport report;
        report.method = name();
        report.frequency_reals = features_.omega.size();
        report.phase_reals = features_.phase.size();
        report.weight_reals = model_.w.size();
        return report;
    }

    std::string name() const override { return "fogd"; }

private:
    FogdConfig cfg_;
    FourierFeatures features_;
    OnlineModel model_;
    long step_count_ = 0;
};

}  // namespace nolana
