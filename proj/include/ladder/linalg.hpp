#pragma once

#include <Eigen/Dense>

namespace ladder {

/// Square symmetric matrix. Only the lower triangle is read by the routines
/// below; callers are expected to keep both triangles equal.
using SymMatrix = Eigen::MatrixXd;

struct CholeskyResult {
    Eigen::MatrixXd lower;  ///< G with G G^T = A + jitter_used I
    double jitter_used = 0.0;
};

struct EigenDecomp {
    Eigen::MatrixXd vectors;  ///< orthonormal columns, matching `values`
    Eigen::VectorXd values;   ///< nonnegative, sorted descending
};

/// 1e-8 times the mean of the diagonal (1e-8 when the diagonal is zero).
double default_jitter(const SymMatrix& a);

/// Lower Cholesky factor of A + jitter I. Tries `base_jitter` first, then
/// escalates by x10 up to six times. A zero base escalates from
/// 1e-10 * mean|diag|. Throws NotPositiveDefinite when every attempt fails.
CholeskyResult cholesky_psd(const SymMatrix& a, double base_jitter);

/// Symmetric eigendecomposition with eigenvalues sorted descending and
/// clamped at zero. The largest-magnitude component of every eigenvector is
/// made nonnegative. Throws NotPSD for eigenvalues below -1e-10 * trace.
EigenDecomp sym_eigendecomp(const SymMatrix& a);

/// Forward substitution: returns G^{-1} B. Throws ZeroPivot on a vanishing
/// diagonal entry.
Eigen::MatrixXd solve_lower(const Eigen::MatrixXd& lower, const Eigen::MatrixXd& b);

/// Back substitution with G^T: returns G^{-T} B.
Eigen::MatrixXd solve_upper_transposed(const Eigen::MatrixXd& lower, const Eigen::MatrixXd& b);

/// (G G^T)^{-1} B through the two triangular solves.
Eigen::MatrixXd cholesky_solve(const Eigen::MatrixXd& lower, const Eigen::MatrixXd& b);

/// log det(G G^T).
double cholesky_logdet(const Eigen::MatrixXd& lower);

}  // namespace ladder
