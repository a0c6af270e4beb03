#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ladder/expr.hpp"
#include "ladder/kernels.hpp"
#include "ladder/linalg.hpp"
#include "ladder/structured_kernel.hpp"

namespace ladder {

/// One evaluated point: latent z, its decoding x, and the objective y = f(x).
struct EvaluatedTriple {
    LatentVector z;
    Structure x;
    double y = 0.0;
};

/// Stacks the latent vectors of `triples` as rows.
Eigen::MatrixXd latent_rows(std::span<const EvaluatedTriple> triples);

/// Frozen per-fit state of the structure-coupled kernel
///   c(z, z') = k_z^T K^{-1} L K^{-1} k_{z'} = xi(z)^T xi(z'),
/// with L the latent Matern Gram, K the structural Gram over the decoded
/// training structures, and xi(z) = V^T K^{-1} k_z, V = U Sigma^{1/2} from the
/// eigendecomposition of L. Only K is jittered, so the training rows of the
/// kernel reproduce L.
class CoupledKernelState {
public:
    /// Throws NotPositiveDefinite if K stays singular after jitter
    /// escalation. `base_jitter` defaults to 1e-8 * mean(diag K).
    static CoupledKernelState fit(std::span<const EvaluatedTriple> triples, const MaternParams& latent_params,
                                  const StructuredKernel& structured, std::optional<double> base_jitter = {});

    Eigen::Index size() const noexcept { return latent_gram_.rows(); }
    const Eigen::MatrixXd& latent_points() const noexcept { return latent_points_; }
    std::span<const StructuredKernel::Prepared> structures() const noexcept { return structures_; }
    const SymMatrix& latent_gram() const noexcept { return latent_gram_; }
    const SymMatrix& structural_gram() const noexcept { return structural_gram_; }
    const Eigen::MatrixXd& structural_factor() const noexcept { return structural_factor_; }
    /// V = U Sigma^{1/2}; row j is the feature vector of training point j.
    const Eigen::MatrixXd& basis() const noexcept { return basis_; }
    const EigenDecomp& latent_eigen() const noexcept { return eigen_; }
    double jitter_used() const noexcept { return jitter_used_; }
    const MaternParams& latent_params() const noexcept { return latent_params_; }
    const StructuredKernel& structured_kernel() const noexcept { return structured_; }

    /// k_z: structured kernel between x and every training structure.
    Eigen::VectorXd structural_cross(const Structure& x) const;
    Eigen::VectorXd structural_cross(const StructuredKernel::Prepared& x) const;

    /// xi(z). Depends on z only through its decoding x.
    Eigen::VectorXd feature_map(const Structure& x) const;
    Eigen::VectorXd feature_map(const Eigen::Ref<const LatentVector>& /*z*/, const Structure& x) const
    {
        return feature_map(x);
    }
    Eigen::VectorXd feature_map_from_cross(const Eigen::VectorXd& k_z) const;

    double coupled_kernel(const Structure& a, const Structure& b) const;
    double coupled_kernel(const Eigen::Ref<const LatentVector>& /*za*/, const Structure& xa,
                          const Eigen::Ref<const LatentVector>& /*zb*/, const Structure& xb) const
    {
        return coupled_kernel(xa, xb);
    }

    /// Entry (i, j) is coupled_kernel on candidates i and j.
    SymMatrix coupled_gram(std::span<const Structure> candidates) const;

private:
    CoupledKernelState(StructuredKernel structured) : structured_(std::move(structured)) {}

    Eigen::MatrixXd latent_points_;
    std::vector<StructuredKernel::Prepared> structures_;
    SymMatrix latent_gram_;
    SymMatrix structural_gram_;
    Eigen::MatrixXd structural_factor_;
    EigenDecomp eigen_;
    Eigen::MatrixXd basis_;
    Eigen::MatrixXd projector_;  // K^{-1} V
    double jitter_used_ = 0.0;
    MaternParams latent_params_;
    StructuredKernel structured_;
};

}  // namespace ladder
