#include "ladder/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <unordered_map>
#include <vector>

namespace ladder {

double std_normal_pdf(double u)
{
    return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
}

double std_normal_cdf(double u)
{
    return 0.5 * std::erfc(-u / std::numbers::sqrt2);
}

double expected_improvement(const Posterior& p, double incumbent)
{
    const double delta = incumbent - p.mean;
    const double sigma = std::sqrt(std::max(p.variance, 0.0));
    if (!(sigma > 1e-12)) return std::max(delta, 0.0);
    const double u = delta / sigma;
    return std::max(delta * std_normal_cdf(u) + sigma * std_normal_pdf(u), 0.0);
}

SearchBox latent_bounds(const LatentModel& model, double margin)
{
    const auto db = model.database();
    if (db.empty()) throw ConfigError("latent_bounds: empty database");
    Eigen::VectorXd lo = model.encode(db.front());
    Eigen::VectorXd hi = lo;
    for (const auto& s : db.subspan(1)) {
        const Eigen::VectorXd z = model.encode(s);
        lo = lo.cwiseMin(z);
        hi = hi.cwiseMax(z);
    }
    const Eigen::VectorXd pad = margin * (hi - lo);
    return {lo - pad, hi + pad};
}

void CmaConfig::validate() const
{
    if (!(sigma0 > 0.0)) throw ConfigError("cma: sigma0 must be positive");
    if (population < 4) throw ConfigError("cma: population must be >= 4");
    if (iterations < 1) throw ConfigError("cma: iterations must be >= 1");
    if (restarts < 1) throw ConfigError("cma: restarts must be >= 1");
    if (bounds && (bounds->lo.size() != bounds->hi.size() || !(bounds->lo.array() <= bounds->hi.array()).all()))
        throw ConfigError("cma: malformed bounds");
}

CmaResult cmaes_minimize(const std::function<double(const Eigen::VectorXd&)>& objective,
                         const Eigen::VectorXd& start, const CmaConfig& cfg, std::mt19937_64& rng)
{
    cfg.validate();
    const Eigen::Index n = start.size();
    if (n < 1) throw DimensionMismatch("cma: empty start point");
    const double nd = static_cast<double>(n);
    const int lambda = cfg.population;
    const int mu = lambda / 2;

    Eigen::VectorXd weights(mu);
    for (int i = 0; i < mu; ++i) weights(i) = std::log(mu + 0.5) - std::log(i + 1.0);
    weights /= weights.sum();
    const double mueff = 1.0 / weights.squaredNorm();

    const double cs = (mueff + 2.0) / (nd + mueff + 5.0);
    const double ds = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (nd + 1.0)) - 1.0) + cs;
    const double cc = (4.0 + mueff / nd) / (nd + 4.0 + 2.0 * mueff / nd);
    const double c1 = 2.0 / ((nd + 1.3) * (nd + 1.3) + mueff);
    const double cmu = std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nd + 2.0) * (nd + 2.0) + mueff));
    const double chi_n = std::sqrt(nd) * (1.0 - 1.0 / (4.0 * nd) + 1.0 / (21.0 * nd * nd));

    Eigen::VectorXd mean = start;
    double sigma = cfg.sigma0;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd ps = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd pc = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd scales = Eigen::VectorXd::Ones(n);

    CmaResult result{start, std::numeric_limits<double>::infinity(), 0, 0};
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd steps(n, lambda);
    Eigen::MatrixXd points(n, lambda);
    std::vector<double> values(static_cast<std::size_t>(lambda));
    std::vector<int> order(static_cast<std::size_t>(lambda));
    int since_reset = 0;

    auto reset = [&] {
        cov.setIdentity();
        basis.setIdentity();
        scales.setOnes();
        ps.setZero();
        pc.setZero();
        sigma = cfg.sigma0;
        since_reset = 0;
        ++result.covariance_resets;
    };

    for (int gen = 0; gen < cfg.iterations; ++gen) {
        for (int k = 0; k < lambda; ++k) {
            Eigen::VectorXd u(n);
            for (Eigen::Index i = 0; i < n; ++i) u(i) = normal(rng);
            steps.col(k) = basis * scales.cwiseProduct(u);
            points.col(k) = mean + sigma * steps.col(k);
        }
        for (int k = 0; k < lambda; ++k) {
            const Eigen::VectorXd x = points.col(k);
            double v = objective(x);
            if (std::isnan(v)) v = std::numeric_limits<double>::infinity();
            values[static_cast<std::size_t>(k)] = v;
            ++result.evaluations;
            if (v < result.best_value || result.evaluations == 1) {
                result.best_value = v;
                result.best_point = x;
            }
        }
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return values[static_cast<std::size_t>(a)] < values[static_cast<std::size_t>(b)];
        });

        Eigen::VectorXd step_w = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < mu; ++i) step_w += weights(i) * steps.col(order[static_cast<std::size_t>(i)]);
        mean += sigma * step_w;

        // C^{-1/2} step_w = B D^{-1} B^T step_w
        const Eigen::VectorXd whitened = basis * (basis.transpose() * step_w).cwiseQuotient(scales);
        ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mueff) * whitened;
        ++since_reset;
        const double ps_norm = ps.norm() / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * since_reset));
        const bool hsig = ps_norm < (1.4 + 2.0 / (nd + 1.0)) * chi_n;
        pc = (1.0 - cc) * pc + (hsig ? std::sqrt(cc * (2.0 - cc) * mueff) : 0.0) * step_w;

        Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < mu; ++i) {
            const auto col = steps.col(order[static_cast<std::size_t>(i)]);
            rank_mu += weights(i) * col * col.transpose();
        }
        const double old_weight = 1.0 - c1 - cmu + (hsig ? 0.0 : c1 * cc * (2.0 - cc));
        cov = old_weight * cov + c1 * pc * pc.transpose() + cmu * rank_mu;
        cov = 0.5 * (cov + cov.transpose());
        sigma *= std::exp((cs / ds) * (ps.norm() / chi_n - 1.0));

        bool degenerate = !cov.allFinite() || !std::isfinite(sigma) || !mean.allFinite() || sigma <= 0.0;
        if (!degenerate) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
            if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
                degenerate = true;
            } else {
                basis = eig.eigenvectors();
                scales = eig.eigenvalues().cwiseSqrt();
                const double condition = scales.maxCoeff() / scales.minCoeff();
                degenerate = condition > 1e7 || sigma * scales.maxCoeff() < 1e-300;
            }
        }
        if (degenerate) {
            if (!mean.allFinite()) mean = result.best_point;
            reset();
        }
    }
    return result;
}

AcquisitionResult optimize_acquisition(const GPModel& gp, const LatentModel& latent, double incumbent,
                                       const std::unordered_set<Structure, StructureHash>& evaluated,
                                       const AcquisitionOptions& options, std::mt19937_64& rng)
{
    options.cma.validate();
    const SearchBox box = options.cma.bounds ? *options.cma.bounds : latent_bounds(latent);
    if (box.lo.size() != latent.dim()) throw DimensionMismatch("acquisition: bounds do not match latent dimension");

    const bool coupled = gp.mode() == KernelMode::StructureCoupled;
    std::unordered_map<Structure, double, StructureHash> ei_cache;

    AcquisitionResult best{LatentVector(), Structure(), -std::numeric_limits<double>::infinity(), 0};
    AcquisitionResult fallback = best;
    int evaluations = 0;

    auto score = [&](const Eigen::VectorXd& z) {
        ++evaluations;
        const Structure& x = latent.decode(z);
        double ei;
        if (coupled) {
            auto it = ei_cache.find(x);
            if (it == ei_cache.end()) it = ei_cache.emplace(x, expected_improvement(gp.predict_structure(x), incumbent)).first;
            ei = it->second;
        } else {
            ei = expected_improvement(gp.predict(z, x), incumbent);
        }
        if (ei > fallback.ei) fallback = {z, x, ei, 0};
        if (options.duplicate_penalty && evaluated.contains(x)) return std::numeric_limits<double>::infinity();
        if (ei > best.ei) best = {z, x, ei, 0};
        return -ei;
    };

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int r = 0; r < options.cma.restarts; ++r) {
        Eigen::VectorXd start(box.lo.size());
        for (Eigen::Index k = 0; k < start.size(); ++k) start(k) = box.lo(k) + (box.hi(k) - box.lo(k)) * unit(rng);
        score(start);
        cmaes_minimize(score, start, options.cma, rng);
    }

    best.evaluations = evaluations;
    fallback.evaluations = evaluations;
    if (best.z.size() == 0) throw AllCandidatesDuplicate(std::move(fallback));
    return best;
}

}  // namespace ladder
