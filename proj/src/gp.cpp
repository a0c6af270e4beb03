#include "ladder/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "ladder/errors.hpp"
#include "ladder/linalg.hpp"
#include "ladder/simplex.hpp"

namespace ladder {

std::string to_string(KernelMode mode)
{
    return mode == KernelMode::LatentOnly ? "latent-only" : "structure-coupled";
}

namespace {

Eigen::VectorXd targets_of(std::span<const EvaluatedTriple> triples)
{
    Eigen::VectorXd y(static_cast<Eigen::Index>(triples.size()));
    for (std::size_t i = 0; i < triples.size(); ++i) y(static_cast<Eigen::Index>(i)) = triples[i].y;
    return y;
}

void require_training(std::span<const EvaluatedTriple> triples, std::size_t min_count)
{
    if (triples.size() < min_count)
        throw ConfigError("GP needs at least " + std::to_string(min_count) + " training points, got " +
                          std::to_string(triples.size()));
}

// Packs hyperparameters as [log lengthscales..., log outputscale, log noise, mean].
struct Packing {
    Eigen::Index dim;
    double log_scale_lo, log_scale_hi;
    double log_noise_lo, log_noise_hi;

    GPHyperparams unpack(const Eigen::VectorXd& theta) const
    {
        GPHyperparams hp;
        hp.latent.lengthscales = theta.head(dim).array().max(std::log(1e-3)).min(std::log(1e3)).exp();
        hp.latent.outputscale = std::exp(std::clamp(theta(dim), log_scale_lo, log_scale_hi));
        hp.noise_variance = std::exp(std::clamp(theta(dim + 1), log_noise_lo, log_noise_hi));
        hp.mean_const = theta(dim + 2);
        return hp;
    }

    Eigen::VectorXd pack(const GPHyperparams& hp) const
    {
        Eigen::VectorXd theta(dim + 3);
        theta.head(dim) = hp.latent.lengthscales.array().log();
        theta(dim) = std::log(hp.latent.outputscale);
        theta(dim + 1) = std::log(hp.noise_variance);
        theta(dim + 2) = hp.mean_const;
        return theta;
    }
};

double target_variance(const Eigen::VectorXd& y)
{
    const double mean = y.mean();
    return (y.array() - mean).square().mean();
}

}  // namespace

double gaussian_log_likelihood(const SymMatrix& c, const Eigen::VectorXd& y, double mean_const, double noise)
{
    if (c.rows() != y.size()) throw DimensionMismatch("log likelihood: Gram and target sizes differ");
    SymMatrix shifted = c;
    shifted.diagonal().array() += noise;
    const auto chol = cholesky_psd(shifted, 0.0);
    const Eigen::VectorXd r = y.array() - mean_const;
    const Eigen::VectorXd w = solve_lower(chol.lower, r);
    const double m = static_cast<double>(y.size());
    return -0.5 * w.squaredNorm() - 0.5 * cholesky_logdet(chol.lower) - 0.5 * m * std::log(2.0 * std::numbers::pi);
}

double log_marginal_likelihood(std::span<const EvaluatedTriple> triples, const GPHyperparams& hp)
{
    require_training(triples, 1);
    const Eigen::MatrixXd z = latent_rows(triples);
    return gaussian_log_likelihood(matern_gram(z, hp.latent), targets_of(triples), hp.mean_const, hp.noise_variance);
}

GPModel GPModel::condition(std::span<const EvaluatedTriple> triples, const GPHyperparams& hp, KernelMode mode,
                           const StructuredKernel& structured, double noise_floor,
                           std::optional<double> structural_jitter)
{
    require_training(triples, 1);
    hp.latent.validate();
    GPModel model(structured);
    model.mode_ = mode;
    model.hp_ = hp;
    model.hp_.noise_variance = std::max(hp.noise_variance, noise_floor);
    model.latent_points_ = latent_rows(triples);
    model.targets_ = targets_of(triples);

    SymMatrix gram;
    if (mode == KernelMode::StructureCoupled) {
        model.coupled_ = CoupledKernelState::fit(triples, model.hp_.latent, structured, structural_jitter);
        gram = model.coupled_->latent_gram();
    } else {
        gram = matern_gram(model.latent_points_, model.hp_.latent);
    }
    gram.diagonal().array() += model.hp_.noise_variance;
    auto chol = cholesky_psd(gram, 0.0);
    model.train_factor_ = std::move(chol.lower);
    const Eigen::VectorXd r = model.targets_.array() - model.hp_.mean_const;
    const Eigen::VectorXd w = solve_lower(model.train_factor_, r);
    model.alpha_ = solve_upper_transposed(model.train_factor_, w);
    model.lml_ = -0.5 * w.squaredNorm() - 0.5 * cholesky_logdet(model.train_factor_) -
                 0.5 * static_cast<double>(r.size()) * std::log(2.0 * std::numbers::pi);
    return model;
}

Posterior GPModel::finish(const Eigen::VectorXd& cross, double self) const
{
    Posterior p;
    p.mean = hp_.mean_const + cross.dot(alpha_);
    const Eigen::VectorXd v = solve_lower(train_factor_, cross);
    p.raw_variance = self - v.squaredNorm();
    p.variance = std::max(p.raw_variance, 0.0);
    return p;
}

Posterior GPModel::predict_structure(const Structure& x) const
{
    if (!coupled_) throw ConfigError("predict_structure requires the structure-coupled kernel");
    const Eigen::VectorXd xi = coupled_->feature_map(x);
    return finish(coupled_->basis() * xi, xi.squaredNorm());
}

Posterior GPModel::predict(const Eigen::Ref<const LatentVector>& z, const Structure& x) const
{
    if (mode_ == KernelMode::StructureCoupled) return predict_structure(x);
    return finish(matern_cross(z, latent_points_, hp_.latent), hp_.latent.outputscale);
}

Posterior posterior_predict(const Eigen::Ref<const LatentVector>& z, const Structure& x, const GPModel& model)
{
    return model.predict(z, x);
}

double surrogate_mae(const GPModel& model, std::span<const EvaluatedTriple> test)
{
    if (test.empty()) throw ConfigError("surrogate_mae: empty test set");
    double total = 0.0;
    for (const auto& t : test) total += std::abs(model.predict(t.z, t.x).mean - t.y);
    return total / static_cast<double>(test.size());
}

GPHyperparams initial_hyperparams(std::span<const EvaluatedTriple> triples, double noise_floor)
{
    require_training(triples, 1);
    const Eigen::VectorXd y = targets_of(triples);
    const double var = target_variance(y);
    GPHyperparams hp;
    hp.latent = MaternParams::unit(triples.front().z.size());
    hp.latent.outputscale = var > 0.0 ? var : 1.0;
    hp.noise_variance = std::max(1e-2 * hp.latent.outputscale, noise_floor);
    hp.mean_const = y.mean();
    return hp;
}

namespace {

// For B = A^{-1} and b with b_i = 0, x = B b gives
//   A_{-i}^{-1} b_{-i} = x_{-i} - B_{-i,i} x_i / B_ii.
// The result is returned with a zero in slot i.
Eigen::VectorXd held_out_solve(const Eigen::MatrixXd& inverse, Eigen::VectorXd b, Eigen::Index i)
{
    b(i) = 0.0;
    Eigen::VectorXd x = inverse * b;
    x -= inverse.col(i) * (x(i) / inverse(i, i));
    x(i) = 0.0;
    return x;
}

Eigen::MatrixXd spd_inverse(const SymMatrix& a, double base_jitter)
{
    const auto chol = cholesky_psd(a, base_jitter);
    return cholesky_solve(chol.lower, Eigen::MatrixXd::Identity(a.rows(), a.cols()));
}

}  // namespace

double coupled_loo_error(std::span<const EvaluatedTriple> triples, const GPHyperparams& hp,
                         const StructuredKernel& structured, double noise_floor)
{
    require_training(triples, 3);
    const Eigen::Index m = static_cast<Eigen::Index>(triples.size());
    const Eigen::VectorXd r = targets_of(triples).array() - hp.mean_const;

    const SymMatrix latent = matern_gram(latent_rows(triples), hp.latent);
    SymMatrix noisy = latent;
    noisy.diagonal().array() += std::max(hp.noise_variance, noise_floor);
    const Eigen::MatrixXd noisy_inv = spd_inverse(noisy, 0.0);

    std::vector<StructuredKernel::Prepared> prepared;
    prepared.reserve(triples.size());
    for (const auto& t : triples) prepared.push_back(structured.prepare(t.x));
    const SymMatrix k = structured.gram(prepared);
    const Eigen::MatrixXd k_inv = spd_inverse(k, default_jitter(k));

    // Held-out mean: mean + k_i^T K_{-i}^{-1} L_{-i} (L_{-i} + noise I)^{-1} r_{-i}.
    double total = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::VectorXd smoothed = held_out_solve(noisy_inv, r, i);
        Eigen::VectorXd projected = latent * smoothed;
        const Eigen::VectorXd coeffs = held_out_solve(k_inv, std::move(projected), i);
        Eigen::VectorXd cross = k.col(i);
        cross(i) = 0.0;
        total += std::abs(cross.dot(coeffs) - r(i));
    }
    return total / static_cast<double>(m);
}

GPModel fit_hyperparams(std::span<const EvaluatedTriple> triples, const GPConfig& cfg)
{
    require_training(triples, 2);
    const Eigen::MatrixXd z = latent_rows(triples);
    const Eigen::VectorXd y = targets_of(triples);
    const Eigen::Index d = z.cols();
    const double var = target_variance(y);
    const double scale = var > 0.0 ? var : 1.0;
    const double sd = std::sqrt(scale);

    const Packing packing{d, std::log(scale) - 12.0, std::log(scale) + 8.0, std::log(cfg.noise_floor),
                          std::log(scale) + 4.0};

    auto negative_lml = [&](const Eigen::VectorXd& theta) {
        const GPHyperparams hp = packing.unpack(theta);
        try {
            return -gaussian_log_likelihood(matern_gram(z, hp.latent), y, hp.mean_const, hp.noise_variance);
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    const GPHyperparams init = initial_hyperparams(triples, cfg.noise_floor);
    Eigen::VectorXd step = Eigen::VectorXd::Constant(d + 3, 1.0);
    step(d + 2) = sd;

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    Eigen::VectorXd best_theta = packing.pack(init);
    double best_value = negative_lml(best_theta);
    for (int r = 0; r < cfg.restarts; ++r) {
        Eigen::VectorXd start;
        if (r == 0) {
            start = packing.pack(init);
        } else if (r == 1 && cfg.warm_start) {
            GPHyperparams warm = *cfg.warm_start;
            if (warm.latent.lengthscales.size() != d) warm = init;
            warm.noise_variance = std::max(warm.noise_variance, cfg.noise_floor);
            start = packing.pack(warm);
        } else {
            start = packing.pack(init);
            for (Eigen::Index k = 0; k < d + 2; ++k) start(k) += normal(rng);
            start(d + 2) += sd * normal(rng);
        }
        const auto result = nelder_mead(negative_lml, start, step, cfg.evals_per_restart);
        if (result.value < best_value) {
            best_value = result.value;
            best_theta = result.x;
        }
    }
    if (!std::isfinite(best_value)) throw OptimizationFailed("fit_hyperparams: every restart failed to factorize");

    const GPHyperparams hp = packing.unpack(best_theta);
    StructuredKernel structured(cfg.structured);

    if (cfg.tune_structured && cfg.mode == KernelMode::StructureCoupled &&
        cfg.structured.kind == StructuredKernelKind::String && triples.size() >= 3) {
        double best_loo = std::numeric_limits<double>::infinity();
        StructuredKernelConfig chosen = cfg.structured;
        for (double gap : {0.25, 0.5, 0.75}) {
            for (double match : {0.5, 0.8, 1.0}) {
                StructuredKernelConfig trial = cfg.structured;
                trial.string.gap_decay = gap;
                trial.string.match_decay = match;
                double loo = std::numeric_limits<double>::infinity();
                try {
                    loo = coupled_loo_error(triples, hp, StructuredKernel(trial), cfg.noise_floor);
                } catch (const Error&) {
                }
                if (loo < best_loo) {
                    best_loo = loo;
                    chosen = trial;
                }
            }
        }
        structured = StructuredKernel(chosen);
    }

    return GPModel::condition(triples, hp, cfg.mode, structured, cfg.noise_floor, cfg.structural_jitter);
}

}  // namespace ladder
