#pragma once

#include "nolana/landmarks.hpp"
#include "nolana/loss.hpp"
#include "nolana/metrics.hpp"
#include "nolana/stream.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace nolana {

// Linear model over the embedded space plus its hyperparameters.
struct OnlineModel {
    Vector w;
    double eta = 0.2;     // gradient step size
    double lambda = 0.0;  // L2 shrinkage applied before each step
    double theta = 1e-3;  // realignment ridge regularizer
    LossKind loss = LossKind::Hinge;
};

inline double predict(const OnlineModel& model, const Eigen::Ref<const Vector>& phi) {
    if (model.w.size() != phi.size())
        throw std::invalid_argument("predict: feature length mismatch");
    return model.w.dot(phi);
}

// One regularized gradient step at (phi, y):
// w <- (1 - eta*lambda) w - eta * dloss/dscore * phi.
// eta_override replaces the model's rate for schedules like eta/sqrt(t).
inline OnlineModel sgd_step(OnlineModel model, const Eigen::Ref<const Vector>& phi,
                            double y, double eta_override = -1.0) {
    const double eta = eta_override >= 0.0 ? eta_override : model.eta;
    const double score = predict(model, phi);
    const LossGrad lg = loss_and_grad(model.loss, y, score);
    model.w *= (1.0 - eta * model.lambda);
    model.w -= eta * lg.dscore * phi;
    return model;
}

// Re-fits the weights after the feature map changed: targets are the old
// model's scores on the (new) landmarks under the old map, the design is
// the landmarks under the new map, solved as ridge least squares. Keeps
// predictions stable across the map change.
template <class OldMap, class NewMap>
OnlineModel realign_model(const OnlineModel& model, OldMap&& old_map,
                          NewMap&& new_map, const Matrix& landmarks) {
    const Index m = landmarks.rows();
    if (m < 1)
        throw std::invalid_argument("realign_model: no landmarks");
    Vector targets(m);
    Matrix design;
    for (Index i = 0; i < m; ++i) {
        const Vector u = landmarks.row(i).transpose();
        targets[i] = model.w.dot(old_map(u));
        const Vector row = new_map(u);
        if (i == 0) design.resize(m, row.size());
        design.row(i) = row.transpose();
    }
    OnlineModel out = model;
    out.w = solve_ridge(design, targets, model.theta);
    return out;
}

struct StepRecord {
    double prediction = 0.0;
    double label = 0.0;
    double loss = 0.0;
    bool updated = false;
};

// One pass, one thread, one stream: the common surface the experiment
// runner drives.
class StreamLearner {
public:
    virtual ~StreamLearner() = default;

    // Feeds one sample; returns the prequential records it produced (none
    // while a warm-up buffer is filling, several when a buffer flushes).
    virtual std::vector<StepRecord> process(const Sample& sample) = 0;

    virtual BudgetReport budget() const = 0;
    virtual std::string name() const = 0;
};

struct NolanaConfig {
    Index m = 100;
    Index r = 80;
    double epsilon = 0.0;
    KernelConfig kernel;
    int power_iters = 3;
    double eta = 0.2;
    double lambda = 0.0;
    double theta = 1e-3;
    LossKind loss = LossKind::Hinge;
    bool eta_decay = false;  // eta / sqrt(t) schedule
    int stage_one_steps = 1; // gradient steps on the triggering point
    // Warm-up landmark choice: first m points, or a seeded sample of m
    // from a larger buffer.
    Index warmup_buffer = 0;  // 0: exactly m
    std::uint64_t warmup_seed = 0;

    void validate(Index dim) const {
        if (m < 1) throw ConfigError("m must be >= 1");
        if (r < 1 || r > m) throw ConfigError("r must satisfy 1 <= r <= m");
        if (epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
        if (!(eta >= 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be finite and >= 0");
        if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
        if (!(theta > 0.0)) throw ConfigError("theta must be > 0");
        if (power_iters < 1) throw ConfigError("power-iters must be >= 1");
        if (stage_one_steps < 1) throw ConfigError("stage-one steps must be >= 1");
        if (warmup_buffer != 0 && warmup_buffer < m)
            throw ConfigError("warmup buffer must be >= m");
        if (dim < 1) throw ConfigError("stream dimension must be >= 1");
        kernel.validate();
    }
};

// The adaptive-landmark online learner. The first points fill a warm-up
// buffer that becomes the initial landmark set; the buffered points are
// then replayed through the regular predict/update path, so every stream
// point yields exactly one prequential record and passes the update gate
// once. After warm-up each point is scored with the current map, then the
// landmarks may absorb it; when they do, the model takes a gradient step
// on the point under the refreshed map and is realigned to the old map's
// predictions on the landmarks.
class NolanaLearner : public StreamLearner {
public:
    struct StepResult {
        double prediction = 0.0;
        double loss_value = 0.0;
        UpdateOutcome outcome;
    };

    NolanaLearner(NolanaConfig cfg, Index dim) : cfg_(cfg), dim_(dim) {
        cfg_.validate(dim);
        buffer_.reserve(static_cast<std::size_t>(buffer_goal()));
    }

    // Resumes from checkpointed state.
    NolanaLearner(NolanaConfig cfg, LandmarkState state, OnlineModel model)
        : cfg_(cfg), dim_(state.dim()), state_(std::move(state)),
          model_(std::move(model)) {
        cfg_.validate(dim_);
        if (model_->w.size() != state_->r())
            throw std::invalid_argument("checkpoint weight length != rank");
    }

    std::vector<StepRecord> process(const Sample& sample) override {
        if (sample.features.size() != dim_)
            throw std::invalid_argument("sample dimension mismatch");
        std::vector<StepRecord> out;
        if (!state_) {
            buffer_.push_back(sample);
            if (static_cast<Index>(buffer_.size()) == buffer_goal()) {
                initialize();
                out.reserve(buffer_.size());
                for (const Sample& buffered : buffer_)
                    out.push_back(run_step(buffered));
                buffer_.clear();
                buffer_.shrink_to_fit();
            }
            return out;
        }
        out.push_back(run_step(sample));
        return out;
    }

    bool warmed_up() const { return state_.has_value(); }
    const LandmarkState& state() const { return require_state(); }
    const OnlineModel& model() const { return *model_; }
    long step_count() const { return step_count_; }
    void set_step_count(long steps) { step_count_ = steps; }
    const NolanaConfig& config() const { return cfg_; }

    // Prediction + prequential loss + gated landmark update + the
    // two-stage model correction when the map changed.
    StepResult process_point(const Eigen::Ref<const Vector>& x, double y) {
        LandmarkState& state = require_state();
        ++step_count_;
        const double eta_eff = effective_eta();

        const Vector phi = state.feature_map(x);
        StepResult result;
        result.prediction = predict(*model_, phi);
        result.loss_value = loss_and_grad(model_->loss, y, result.prediction).value;

        const auto [q, dist_sq] = state.nearest(x);
        if (dist_sq < state.epsilon()) {
            result.outcome = UpdateOutcome::unchanged();
            *model_ = sgd_step(*model_, phi, y, eta_eff);
            return result;
        }

        const LandmarkState before = state;  // old map for the realignment
        result.outcome = state.maybe_update(x);

        // Stage one: fit the triggering point under the refreshed map.
        const Vector phi_new = state.feature_map(x);
        for (int s = 0; s < cfg_.stage_one_steps; ++s)
            *model_ = sgd_step(*model_, phi_new, y, eta_eff);

        // Stage two: keep landmark predictions consistent across maps.
        *model_ = realign_model(
            *model_,
            [&before](const Vector& u) { return before.feature_map(u); },
            [&state](const Vector& u) { return state.feature_map(u); },
            state.landmarks());
        return result;
    }

    BudgetReport budget() const override {
        BudgetReport report;
        report.method = name();
        if (state_) {
            const LandmarkState& s = *state_;
            report.landmark_reals = s.m() * s.dim();
            report.eigenvector_reals = s.eig().vectors.size();
            report.count_slots = static_cast<Index>(s.counts().size());
            report.eigenvalue_reals = s.eig().values.size();
            report.weight_reals = model_->w.size();
        }
        return report;
    }

    std::string name() const override {
        return cfg_.epsilon == kNeverUpdate ? "nogd" : "nolana";
    }

private:
    Index buffer_goal() const {
        return cfg_.warmup_buffer > 0 ? cfg_.warmup_buffer : cfg_.m;
    }

    LandmarkState& require_state() {
        if (!state_) throw InsufficientWarmupError("learner not warmed up");
        return *state_;
    }
    const LandmarkState& require_state() const {
        if (!state_) throw InsufficientWarmupError("learner not warmed up");
        return *state_;
    }

    void initialize() {
        Matrix warmup(cfg_.m, dim_);
        if (buffer_goal() == cfg_.m) {
            for (Index i = 0; i < cfg_.m; ++i)
                warmup.row(i) = buffer_[static_cast<std::size_t>(i)].features.transpose();
        } else {
            // Seeded sample (without replacement) of m buffer rows.
            std::vector<Index> pick(buffer_.size());
            for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = static_cast<Index>(i);
            std::uint64_t rng = cfg_.warmup_seed;
            for (Index i = 0; i < cfg_.m; ++i) {
                rng = splitmix64(rng);
                const std::uint64_t span = pick.size() - static_cast<std::size_t>(i);
                const auto j = static_cast<std::size_t>(rng % span) + static_cast<std::size_t>(i);
                std::swap(pick[static_cast<std::size_t>(i)], pick[j]);
                warmup.row(i) = buffer_[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])]
                                    .features.transpose();
            }
        }
        state_.emplace(warmup, cfg_.r, cfg_.epsilon, cfg_.kernel, cfg_.power_iters);
        OnlineModel model;
        model.w = Vector::Zero(cfg_.r);
        model.eta = cfg_.eta;
        model.lambda = cfg_.lambda;
        model.theta = cfg_.theta;
        model.loss = cfg_.loss;
        model_ = model;
    }

    double effective_eta() const {
        if (!cfg_.eta_decay) return cfg_.eta;
        return cfg_.eta / std::sqrt(static_cast<double>(step_count_));
    }

    StepRecord run_step(const Sample& sample) {
        const StepResult r = process_point(sample.features, sample.label);
        StepRecord rec;
        rec.prediction = r.prediction;
        rec.label = sample.label;
        rec.loss = r.loss_value;
        rec.updated = r.outcome.updated();
        return rec;
    }

    NolanaConfig cfg_;
    Index dim_;
    std::vector<Sample> buffer_;
    std::optional<LandmarkState> state_;
    std::optional<OnlineModel> model_;
    long step_count_ = 0;
};

// The fixed-landmark baseline is this learner with the update gate closed.
inline NolanaConfig nogd_config(NolanaConfig cfg) {
    cfg.epsilon = kNeverUpdate;
    return cfg;
}

}  // namespace nolana
