#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "ladder/coupled_kernel.hpp"
#include "ladder/kernels.hpp"
#include "ladder/structured_kernel.hpp"

namespace ladder {

enum class KernelMode { LatentOnly, StructureCoupled };

std::string to_string(KernelMode mode);

struct GPHyperparams {
    MaternParams latent;
    double noise_variance = 1e-2;
    double mean_const = 0.0;
};

struct GPConfig {
    KernelMode mode = KernelMode::StructureCoupled;
    StructuredKernelConfig structured;
    double noise_floor = 1e-6;
    int restarts = 5;
    int evals_per_restart = 200;
    std::uint64_t seed = 0;
    /// Previous optimum, used as the second restart when present.
    std::optional<GPHyperparams> warm_start;
    /// Leave-one-out grid search over (gap decay, match decay) after the
    /// Matern hyperparameters are fitted.
    bool tune_structured = false;
    /// Base jitter for the structural Gram; default 1e-8 * mean(diag K).
    std::optional<double> structural_jitter;
};

struct Posterior {
    double mean = 0.0;
    double variance = 0.0;  ///< clamped at 0
    double raw_variance = 0.0;
};

/// Gaussian log-density of y under N(mean_const 1, C + noise I):
///   -1/2 r^T (C + noise I)^{-1} r - 1/2 log det(C + noise I) - m/2 log 2 pi.
/// Throws NotPositiveDefinite when C + noise I cannot be factorized.
double gaussian_log_likelihood(const SymMatrix& c, const Eigen::VectorXd& y, double mean_const, double noise);

/// Marginal likelihood of the triples' targets. The training Gram is the
/// latent Matern Gram L in both kernel modes, since the coupled kernel
/// reduces to L on its own training points.
double log_marginal_likelihood(std::span<const EvaluatedTriple> triples, const GPHyperparams& hp);

/// A conditioned GP. Immutable; predictions are thread-safe.
class GPModel {
public:
    /// Conditions on `triples` with fixed hyperparameters. The noise variance
    /// is raised to `noise_floor` if needed.
    static GPModel condition(std::span<const EvaluatedTriple> triples, const GPHyperparams& hp, KernelMode mode,
                             const StructuredKernel& structured, double noise_floor = 1e-6,
                             std::optional<double> structural_jitter = {});

    Posterior predict(const Eigen::Ref<const LatentVector>& z, const Structure& x) const;
    /// Coupled mode only: the prediction depends on x alone.
    Posterior predict_structure(const Structure& x) const;

    KernelMode mode() const noexcept { return mode_; }
    const GPHyperparams& hyperparams() const noexcept { return hp_; }
    const Eigen::VectorXd& targets() const noexcept { return targets_; }
    const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
    const Eigen::MatrixXd& train_factor() const noexcept { return train_factor_; }
    const Eigen::MatrixXd& latent_points() const noexcept { return latent_points_; }
    const std::optional<CoupledKernelState>& coupled_state() const noexcept { return coupled_; }
    const StructuredKernel& structured_kernel() const noexcept { return structured_; }
    double log_marginal_likelihood() const noexcept { return lml_; }
    Eigen::Index size() const noexcept { return targets_.size(); }

private:
    GPModel(StructuredKernel structured) : structured_(std::move(structured)) {}
    Posterior finish(const Eigen::VectorXd& cross, double self) const;

    KernelMode mode_ = KernelMode::LatentOnly;
    GPHyperparams hp_;
    Eigen::MatrixXd latent_points_;
    Eigen::VectorXd targets_;
    Eigen::VectorXd alpha_;
    Eigen::MatrixXd train_factor_;
    std::optional<CoupledKernelState> coupled_;
    StructuredKernel structured_;
    double lml_ = 0.0;
};

/// Maximizes the marginal likelihood over log-lengthscales, log-outputscale,
/// log-noise and the constant mean with multi-start Nelder-Mead, then
/// conditions the model. Throws OptimizationFailed if no restart produced a
/// factorizable model.
GPModel fit_hyperparams(std::span<const EvaluatedTriple> triples, const GPConfig& cfg);

/// Default starting point for the hyperparameter search.
GPHyperparams initial_hyperparams(std::span<const EvaluatedTriple> triples, double noise_floor);

Posterior posterior_predict(const Eigen::Ref<const LatentVector>& z, const Structure& x, const GPModel& model);

/// Mean absolute error of posterior means on `test`.
double surrogate_mae(const GPModel& model, std::span<const EvaluatedTriple> test);

/// Leave-one-out mean absolute error of a coupled model with fixed
/// hyperparameters under the given structured kernel.
double coupled_loo_error(std::span<const EvaluatedTriple> triples, const GPHyperparams& hp,
                         const StructuredKernel& structured, double noise_floor = 1e-6);

}  // namespace ladder
