#pragma once

#include "nolana/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nolana {

// Truncated symmetric eigendecomposition: vectors m x r with orthonormal
// columns, values length r sorted non-increasing and clipped at zero.
struct EigPair {
    Matrix vectors;
    Vector values;

    Index rank() const { return values.size(); }
    Index dim() const { return vectors.rows(); }
};

inline constexpr double kDefaultPinvRelTol = 1e-6;
inline constexpr double kSymmetryTol = 1e-10;

namespace detail {

// Deterministic sign convention: each column's largest-magnitude entry is
// made positive, so factorizations are reproducible across refresh paths.
inline void canonicalize_columns(Matrix& vectors) {
    for (Index j = 0; j < vectors.cols(); ++j) {
        Index pivot = 0;
        vectors.col(j).cwiseAbs().maxCoeff(&pivot);
        if (vectors(pivot, j) < 0.0) vectors.col(j) = -vectors.col(j);
    }
}

// y = (U S U^T + a b^T + b a^T) X without forming the matrix.
inline Matrix apply_factored(const Matrix& U, const Vector& S,
                             const Vector& a, const Vector& b,
                             const Matrix& X) {
    Matrix y = U * (S.asDiagonal() * (U.transpose() * X));
    y.noalias() += a * (b.transpose() * X);
    y.noalias() += b * (a.transpose() * X);
    return y;
}

inline Matrix thin_q(const Matrix& X) {
    Eigen::HouseholderQR<Matrix> qr(X);
    return qr.householderQ() * Matrix::Identity(X.rows(), X.cols());
}

}  // namespace detail

// Reference rank-r factorization of a symmetric PSD matrix, used at
// initialization and as the oracle the randomized refresh is checked
// against. Dense solve; top-r pairs; negative values clipped to zero.
inline EigPair truncated_eig(const Eigen::Ref<const Matrix>& E, Index r) {
    const Index m = E.rows();
    if (E.cols() != m)
        throw std::invalid_argument("truncated_eig: matrix must be square");
    if (r < 1 || r > m)
        throw std::invalid_argument("truncated_eig: rank out of range");
    if (((E - E.transpose()).array().abs() > kSymmetryTol).any())
        throw std::invalid_argument("truncated_eig: matrix is not symmetric");

    Eigen::SelfAdjointEigenSolver<Matrix> solver(E);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("truncated_eig: eigensolver did not converge");

    // Eigen returns ascending order; take the trailing r pairs reversed.
    EigPair out;
    out.vectors.resize(m, r);
    out.values.resize(r);
    for (Index j = 0; j < r; ++j) {
        const Index src = m - 1 - j;
        out.vectors.col(j) = solver.eigenvectors().col(src);
        out.values[j] = std::max(solver.eigenvalues()[src], 0.0);
    }
    detail::canonicalize_columns(out.vectors);
    return out;
}

// Refreshes the factorization after a rank-2 perturbation
// E' = U S U^T + a b^T + b a^T by subspace (power) iteration warm-started
// at the previous eigenvectors, re-orthonormalizing after every multiply,
// followed by a Rayleigh-Ritz projection. The perturbed matrix is only
// ever touched through the factored multiply.
inline EigPair warmstart_randomized_eig(const EigPair& prev,
                                        const Eigen::Ref<const Vector>& a,
                                        const Eigen::Ref<const Vector>& b,
                                        int power_iters, Index r) {
    const Index m = prev.dim();
    if (r < 1 || r > m)
        throw std::invalid_argument("warmstart_randomized_eig: rank out of range");
    if (r > prev.rank())
        throw std::invalid_argument("warmstart_randomized_eig: rank exceeds warm-start basis");
    if (a.size() != m || b.size() != m)
        throw std::invalid_argument("warmstart_randomized_eig: perturbation length mismatch");
    if (!a.allFinite() || !b.allFinite())
        throw std::invalid_argument("warmstart_randomized_eig: non-finite perturbation");
    if (power_iters < 1)
        throw std::invalid_argument("warmstart_randomized_eig: power_iters must be >= 1");

    Matrix basis = prev.vectors.leftCols(r);
    for (int it = 0; it < power_iters; ++it) {
        basis = detail::thin_q(
            detail::apply_factored(prev.vectors, prev.values, a, b, basis));
    }

    // Rayleigh-Ritz on the converged subspace.
    Matrix projected =
        basis.transpose() *
        detail::apply_factored(prev.vectors, prev.values, a, b, basis);
    projected = 0.5 * (projected + projected.transpose());

    Eigen::SelfAdjointEigenSolver<Matrix> solver(projected);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("warmstart_randomized_eig: projection eigensolve failed");

    EigPair out;
    out.vectors.resize(m, r);
    out.values.resize(r);
    for (Index j = 0; j < r; ++j) {
        const Index src = r - 1 - j;
        out.vectors.col(j) = basis * solver.eigenvectors().col(src);
        out.values[j] = std::max(solver.eigenvalues()[src], 0.0);
    }
    detail::canonicalize_columns(out.vectors);
    return out;
}

// Diagonal of the pseudo-inverse square root: 1/sqrt(v_i) where v_i clears
// the relative cutoff, 0 otherwise.
inline Vector pinv_sqrt(const Eigen::Ref<const Vector>& values,
                        double rel_tol = kDefaultPinvRelTol) {
    if (values.size() == 0)
        throw std::invalid_argument("pinv_sqrt: empty spectrum");
    const double top = std::max(values.maxCoeff(), 0.0);
    if (top <= 0.0)
        throw DegenerateSpectrumError("pinv_sqrt: no positive eigenvalues");
    const double cutoff = rel_tol * top;
    Vector out(values.size());
    for (Index i = 0; i < values.size(); ++i)
        out[i] = values[i] > cutoff ? 1.0 / std::sqrt(values[i]) : 0.0;
    return out;
}

// Ridge least squares: minimizes ||Phi w - z||^2 + theta ||w||^2.
// Solved through the r x r normal equations; theta == 0 falls back to a
// rank-revealing QR and requires full column rank.
inline Vector solve_ridge(const Eigen::Ref<const Matrix>& phi,
                          const Eigen::Ref<const Vector>& z,
                          double theta) {
    if (phi.rows() != z.size())
        throw std::invalid_argument("solve_ridge: row-count mismatch");
    if (theta < 0.0 || !std::isfinite(theta))
        throw std::invalid_argument("solve_ridge: theta must be non-negative");

    if (theta == 0.0) {
        Eigen::ColPivHouseholderQR<Matrix> qr(phi);
        if (qr.rank() < phi.cols())
            throw SingularSystemError(
                "solve_ridge: rank-deficient design with theta == 0");
        return qr.solve(z);
    }

    Matrix gram = phi.transpose() * phi;
    gram.diagonal().array() += theta;
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success)
        throw SingularSystemError("solve_ridge: normal equations not positive definite");
    return llt.solve(phi.transpose() * z);
}

}  // namespace nolana
