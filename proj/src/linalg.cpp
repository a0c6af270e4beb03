#include "ladder/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "ladder/errors.hpp"

namespace ladder {

namespace {

constexpr int kMaxEscalations = 6;

void require_square(const Eigen::MatrixXd& a, const char* what)
{
    if (a.rows() != a.cols() || a.rows() == 0)
        throw DimensionMismatch(std::string(what) + ": expected a nonempty square matrix, got " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
}

double mean_abs_diag(const SymMatrix& a)
{
    return a.diagonal().cwiseAbs().mean();
}

void check_pivots(const Eigen::MatrixXd& lower)
{
    for (Eigen::Index i = 0; i < lower.rows(); ++i) {
        const double d = lower(i, i);
        if (!(std::abs(d) > 1e-300))
            throw ZeroPivot("triangular solve: zero pivot at row " + std::to_string(i));
    }
}

}  // namespace

double default_jitter(const SymMatrix& a)
{
    const double scale = mean_abs_diag(a);
    return 1e-8 * (scale > 0.0 ? scale : 1.0);
}

CholeskyResult cholesky_psd(const SymMatrix& a, double base_jitter)
{
    require_square(a, "cholesky_psd");
    if (base_jitter < 0.0) throw NotPositiveDefinite("cholesky_psd: negative jitter");

    const Eigen::Index n = a.rows();
    double jitter = base_jitter;
    for (int attempt = 0; attempt <= kMaxEscalations; ++attempt) {
        Eigen::MatrixXd shifted = a;
        shifted.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(shifted);
        if (llt.info() == Eigen::Success) {
            Eigen::MatrixXd g = llt.matrixL();
            bool ok = g.allFinite();
            for (Eigen::Index i = 0; ok && i < n; ++i) ok = g(i, i) > 0.0;
            if (ok) return {std::move(g), jitter};
        }
        if (jitter == 0.0) {
            const double scale = mean_abs_diag(a);
            jitter = 1e-10 * (scale > 0.0 ? scale : 1.0);
        } else {
            jitter *= 10.0;
        }
    }
    throw NotPositiveDefinite("cholesky_psd: factorization failed after " +
                              std::to_string(kMaxEscalations) + " jitter escalations (last jitter " +
                              std::to_string(jitter / 10.0) + ")");
}

EigenDecomp sym_eigendecomp(const SymMatrix& a)
{
    require_square(a, "sym_eigendecomp");
    const Eigen::Index n = a.rows();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw NotPSD("sym_eigendecomp: eigensolver did not converge");

    const double tol = 1e-10 * std::abs(a.trace());
    const Eigen::VectorXd& raw = solver.eigenvalues();
    if (raw.minCoeff() < -tol)
        throw NotPSD("sym_eigendecomp: eigenvalue " + std::to_string(raw.minCoeff()) +
                     " below tolerance " + std::to_string(-tol));

    // Eigen returns ascending order; flip to descending with a stable tie order.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index i, Eigen::Index j) { return raw(i) > raw(j); });

    EigenDecomp out{Eigen::MatrixXd(n, n), Eigen::VectorXd(n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = order[static_cast<std::size_t>(k)];
        out.values(k) = std::max(raw(src), 0.0);
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        out.vectors.col(k) = v;
    }
    return out;
}

Eigen::MatrixXd solve_lower(const Eigen::MatrixXd& lower, const Eigen::MatrixXd& b)
{
    require_square(lower, "solve_lower");
    if (b.rows() != lower.rows()) throw DimensionMismatch("solve_lower: row count mismatch");
    check_pivots(lower);
    return lower.triangularView<Eigen::Lower>().solve(b);
}

Eigen::MatrixXd solve_upper_transposed(const Eigen::MatrixXd& lower, const Eigen::MatrixXd& b)
{
    require_square(lower, "solve_upper_transposed");
    if (b.rows() != lower.rows()) throw DimensionMismatch("solve_upper_transposed: row count mismatch");
    check_pivots(lower);
    return lower.triangularView<Eigen::Lower>().transpose().solve(b);
}

Eigen::MatrixXd cholesky_solve(const Eigen::MatrixXd& lower, const Eigen::MatrixXd& b)
{
    return solve_upper_transposed(lower, solve_lower(lower, b));
}

double cholesky_logdet(const Eigen::MatrixXd& lower)
{
    return 2.0 * lower.diagonal().array().log().sum();
}

}  // namespace ladder
