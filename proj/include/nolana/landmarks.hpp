#pragma once

#include "nolana/kernel.hpp"
#include "nolana/linalg.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace nolana {

struct UpdateOutcome {
    enum class Kind { Unchanged, Updated };

    Kind kind = Kind::Unchanged;
    Index cluster = -1;
    Vector old_centroid;
    Vector new_centroid;

    bool updated() const { return kind == Kind::Updated; }

    static UpdateOutcome unchanged() { return {}; }
};

// The streaming budget: m landmark points maintained by gated online
// kmeans, their per-cluster counts, and the truncated eigendecomposition
// of the landmark kernel matrix. Persistent state is exactly
// m*d + m*r + m + r stored reals; the inverse-sqrt spectrum is a cache
// recomputed from the eigenvalues on every accepted update.
class LandmarkState {
public:
    // Landmarks are the warm-up rows as given (one row per landmark);
    // counts start at one, the factorization is computed from scratch.
    LandmarkState(const Matrix& warmup, Index r, double epsilon,
                  KernelConfig kernel, int power_iters = 3)
        : landmarks_(warmup),
          counts_(static_cast<std::size_t>(warmup.rows()), 1),
          kernel_(kernel),
          epsilon_(epsilon),
          power_iters_(power_iters) {
        kernel_.validate();
        const Index m = landmarks_.rows();
        if (m < 1)
            throw InsufficientWarmupError("landmark warm-up is empty");
        if (r < 1 || r > m)
            throw std::invalid_argument("landmark rank must satisfy 1 <= r <= m");
        if (!landmarks_.allFinite())
            throw std::invalid_argument("landmark warm-up has non-finite entries");
        if (epsilon_ < 0.0)
            throw std::invalid_argument("epsilon must be non-negative");
        if (power_iters_ < 1)
            throw std::invalid_argument("power_iters must be >= 1");
        eig_ = truncated_eig(kernel_cross(landmarks_, landmarks_, kernel_), r);
        inv_sqrt_ = pinv_sqrt(eig_.values);
    }

    // Reinstalls previously saved state, keeping the stored factorization
    // instead of recomputing it (checkpoint resume).
    static LandmarkState restore(Matrix landmarks, std::vector<long> counts,
                                 EigPair eig, double epsilon, KernelConfig kernel,
                                 int power_iters) {
        if (static_cast<Index>(counts.size()) != landmarks.rows() ||
            eig.dim() != landmarks.rows())
            throw std::invalid_argument("restore: inconsistent landmark state");
        LandmarkState state(landmarks, eig.rank(), epsilon, kernel, power_iters);
        state.landmarks_ = std::move(landmarks);
        state.counts_ = std::move(counts);
        state.eig_ = std::move(eig);
        state.inv_sqrt_ = pinv_sqrt(state.eig_.values);
        return state;
    }

    Index m() const { return landmarks_.rows(); }
    Index r() const { return eig_.rank(); }
    Index dim() const { return landmarks_.cols(); }
    double epsilon() const { return epsilon_; }
    const Matrix& landmarks() const { return landmarks_; }
    const std::vector<long>& counts() const { return counts_; }
    const EigPair& eig() const { return eig_; }
    const Vector& inv_sqrt() const { return inv_sqrt_; }
    const KernelConfig& kernel() const { return kernel_; }
    int power_iters() const { return power_iters_; }

    // Persistent stored reals: landmarks + eigenvectors + counts + values.
    Index stored_reals() const {
        return m() * dim() + m() * r() + m() + r();
    }

    // Index of the closest landmark and its squared distance; ties go to
    // the lowest index.
    std::pair<Index, double> nearest(const Eigen::Ref<const Vector>& x) const {
        check_dim(x);
        Index best = 0;
        double best_d = (x - landmarks_.row(0).transpose()).squaredNorm();
        for (Index q = 1; q < m(); ++q) {
            const double d = (x - landmarks_.row(q).transpose()).squaredNorm();
            if (d < best_d) {
                best = q;
                best_d = d;
            }
        }
        return {best, best_d};
    }

    // Rank-2 decomposition of the kernel-matrix change caused by replacing
    // landmark q with new_u: E_new = E + i c^T + c i^T with i the q-th
    // indicator. Entry q of c is halved because it is touched twice.
    std::pair<Vector, Vector> rank2_delta(Index q, const Vector& new_u) const {
        if (q < 0 || q >= m())
            throw std::invalid_argument("rank2_delta: cluster index out of range");
        check_dim(new_u);
        Vector indicator = Vector::Zero(m());
        indicator[q] = 1.0;
        Vector change = kernel_row(new_u, landmarks_, kernel_) -
                        kernel_row(landmarks_.row(q).transpose(), landmarks_, kernel_);
        change[q] = (gaussian_kernel(new_u, new_u, kernel_) -
                     gaussian_kernel(landmarks_.row(q).transpose(),
                                     landmarks_.row(q).transpose(), kernel_)) /
                    2.0;
        return {std::move(indicator), std::move(change)};
    }

    // Gated online-kmeans step. Points closer than epsilon to their
    // landmark leave the state untouched; otherwise the centroid moves to
    // the running mean, the factorization is refreshed through the rank-2
    // perturbation, and the cached spectrum is rebuilt.
    UpdateOutcome maybe_update(const Eigen::Ref<const Vector>& x) {
        const auto [q, dist_sq] = nearest(x);
        if (dist_sq < epsilon_)
            return UpdateOutcome::unchanged();

        const double n_q = static_cast<double>(counts_[static_cast<std::size_t>(q)]);
        Vector old_u = landmarks_.row(q).transpose();
        Vector new_u = (n_q * old_u + x) / (n_q + 1.0);

        const auto [indicator, change] = rank2_delta(q, new_u);
        eig_ = warmstart_randomized_eig(eig_, indicator, change, power_iters_, r());
        inv_sqrt_ = pinv_sqrt(eig_.values);
        landmarks_.row(q) = new_u.transpose();
        counts_[static_cast<std::size_t>(q)] += 1;

        UpdateOutcome out;
        out.kind = UpdateOutcome::Kind::Updated;
        out.cluster = q;
        out.old_centroid = std::move(old_u);
        out.new_centroid = std::move(new_u);
        return out;
    }

    // Length-r embedding: kernel row against the landmarks projected onto
    // the eigenvectors and scaled by the cached inverse-sqrt spectrum.
    Vector feature_map(const Eigen::Ref<const Vector>& x) const {
        check_dim(x);
        if ((inv_sqrt_.array() == 0.0).all())
            throw DegenerateSpectrumError("feature_map: spectrum fully clipped");
        return inv_sqrt_.asDiagonal() *
               (eig_.vectors.transpose() * kernel_row(x, landmarks_, kernel_));
    }

    // Diagnostic: Frobenius distance between the kernel matrix of the
    // current landmarks and its stored factorization.
    double reconstruction_error() const {
        Matrix E = kernel_cross(landmarks_, landmarks_, kernel_);
        return (E - eig_.vectors * eig_.values.asDiagonal() *
                        eig_.vectors.transpose())
            .norm();
    }

private:
    void check_dim(const Eigen::Ref<const Vector>& x) const {
        if (x.size() != dim())
            throw std::invalid_argument("landmark state: point dimension mismatch");
    }

    Matrix landmarks_;          // m x d, one landmark per row
    std::vector<long> counts_;  // points absorbed per cluster, starts at 1
    EigPair eig_;               // factorization of the landmark kernel matrix
    Vector inv_sqrt_;           // cached pinv_sqrt(eig_.values)
    KernelConfig kernel_;
    double epsilon_;
    int power_iters_;
};

inline constexpr double kNeverUpdate = std::numeric_limits<double>::infinity();

}  // namespace nolana
