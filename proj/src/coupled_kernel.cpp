#include "ladder/coupled_kernel.hpp"

#include "ladder/errors.hpp"

namespace ladder {

Eigen::MatrixXd latent_rows(std::span<const EvaluatedTriple> triples)
{
    if (triples.empty()) return {};
    const Eigen::Index d = triples.front().z.size();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(triples.size()), d);
    for (std::size_t i = 0; i < triples.size(); ++i) {
        if (triples[i].z.size() != d) throw DimensionMismatch("latent vectors differ in dimension");
        out.row(static_cast<Eigen::Index>(i)) = triples[i].z.transpose();
    }
    return out;
}

CoupledKernelState CoupledKernelState::fit(std::span<const EvaluatedTriple> triples, const MaternParams& latent_params,
                                           const StructuredKernel& structured, std::optional<double> base_jitter)
{
    if (triples.empty()) throw ConfigError("coupled kernel: no training triples");
    latent_params.validate();

    CoupledKernelState s(structured);
    s.latent_params_ = latent_params;
    s.latent_points_ = latent_rows(triples);
    s.structures_.reserve(triples.size());
    for (const auto& t : triples) s.structures_.push_back(structured.prepare(t.x));

    s.latent_gram_ = matern_gram(s.latent_points_, latent_params);
    s.structural_gram_ = structured.gram(s.structures_);

    auto chol = cholesky_psd(s.structural_gram_, base_jitter.value_or(default_jitter(s.structural_gram_)));
    s.structural_factor_ = std::move(chol.lower);
    s.jitter_used_ = chol.jitter_used;

    s.eigen_ = sym_eigendecomp(s.latent_gram_);
    s.basis_ = s.eigen_.vectors * s.eigen_.values.cwiseSqrt().asDiagonal();
    s.projector_ = cholesky_solve(s.structural_factor_, s.basis_);
    return s;
}

Eigen::VectorXd CoupledKernelState::structural_cross(const StructuredKernel::Prepared& x) const
{
    return structured_.cross(x, structures_);
}

Eigen::VectorXd CoupledKernelState::structural_cross(const Structure& x) const
{
    return structural_cross(structured_.prepare(x));
}

Eigen::VectorXd CoupledKernelState::feature_map_from_cross(const Eigen::VectorXd& k_z) const
{
    if (k_z.size() != size()) throw DimensionMismatch("feature map: cross vector has wrong length");
    return projector_.transpose() * k_z;
}

Eigen::VectorXd CoupledKernelState::feature_map(const Structure& x) const
{
    return feature_map_from_cross(structural_cross(x));
}

double CoupledKernelState::coupled_kernel(const Structure& a, const Structure& b) const
{
    return feature_map(a).dot(feature_map(b));
}

SymMatrix CoupledKernelState::coupled_gram(std::span<const Structure> candidates) const
{
    const auto n = static_cast<Eigen::Index>(candidates.size());
    Eigen::MatrixXd features(size(), n);
    for (Eigen::Index i = 0; i < n; ++i) features.col(i) = feature_map(candidates[static_cast<std::size_t>(i)]);
    SymMatrix g = features.transpose() * features;
    return 0.5 * (g + g.transpose());
}

}  // namespace ladder
