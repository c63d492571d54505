#pragma once

#include "nolana/types.hpp"

#include <cmath>
#include <stdexcept>

namespace nolana {

enum class KernelKind { Gaussian };

struct KernelConfig {
    KernelKind kind = KernelKind::Gaussian;
    double gamma = 1.0;  // k(x,z) = exp(-gamma * ||x - z||^2)

    void validate() const {
        if (!(gamma > 0.0) || !std::isfinite(gamma))
            throw std::invalid_argument("kernel gamma must be positive and finite");
    }
};

inline double gaussian_kernel(const Eigen::Ref<const Vector>& x,
                              const Eigen::Ref<const Vector>& z,
                              const KernelConfig& cfg) {
    if (x.size() != z.size())
        throw std::invalid_argument("gaussian_kernel: dimension mismatch");
    return std::exp(-cfg.gamma * (x - z).squaredNorm());
}

// Pairwise kernel matrix, entry (i,j) = k(row i of A, row j of B).
// Row-major loop with a fixed per-entry summation order so the result does
// not depend on how rows are scheduled.
inline Matrix kernel_cross(const Eigen::Ref<const Matrix>& A,
                           const Eigen::Ref<const Matrix>& B,
                           const KernelConfig& cfg) {
    if (A.cols() != B.cols())
        throw std::invalid_argument("kernel_cross: column-count mismatch");
    Matrix K(A.rows(), B.rows());
    for (Index i = 0; i < A.rows(); ++i) {
        K.row(i) = (-cfg.gamma *
                    (B.rowwise() - A.row(i)).rowwise().squaredNorm().transpose().array())
                       .exp();
    }
    return K;
}

// Kernel row of one point against a landmark set (length m).
inline Vector kernel_row(const Eigen::Ref<const Vector>& x,
                         const Eigen::Ref<const Matrix>& landmarks,
                         const KernelConfig& cfg) {
    if (x.size() != landmarks.cols())
        throw std::invalid_argument("kernel_row: dimension mismatch");
    return (-cfg.gamma *
            (landmarks.rowwise() - x.transpose()).rowwise().squaredNorm().array())
        .exp();
}

}  // namespace nolana
