#pragma once

#include <functional>
#include <optional>
#include <random>
#include <span>
#include <unordered_set>

#include <Eigen/Dense>

#include "ladder/errors.hpp"
#include "ladder/gp.hpp"
#include "ladder/latent.hpp"

namespace ladder {

double std_normal_pdf(double u);
double std_normal_cdf(double u);

/// Expected improvement below `incumbent` (minimization):
///   delta * Phi(delta / sigma) + sigma * phi(delta / sigma), delta = incumbent - mean,
/// and max(delta, 0) when sigma <= 1e-12.
double expected_improvement(const Posterior& p, double incumbent);

struct SearchBox {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
};

/// Bounding box of the database embeddings, widened by `margin` of its extent
/// on each side.
SearchBox latent_bounds(const LatentModel& model, double margin = 0.1);

struct CmaConfig {
    double sigma0 = 0.2;
    int population = 50;
    int iterations = 10;  ///< generations per restart
    int restarts = 10;
    /// Region restart points are drawn from; the search itself is unbounded.
    std::optional<SearchBox> bounds;

    void validate() const;
};

struct CmaResult {
    Eigen::VectorXd best_point;
    double best_value = 0.0;
    int evaluations = 0;
    int covariance_resets = 0;
};

/// (mu/mu_w, lambda)-CMA-ES with cumulative step-size adaptation and rank-one
/// plus rank-mu covariance updates, run for cfg.iterations generations from
/// `start`. Returns the best point ever evaluated. A degenerate covariance is
/// reset to the identity (with sigma0) without consuming extra budget.
CmaResult cmaes_minimize(const std::function<double(const Eigen::VectorXd&)>& objective,
                         const Eigen::VectorXd& start, const CmaConfig& cfg, std::mt19937_64& rng);

struct AcquisitionOptions {
    CmaConfig cma;
    bool duplicate_penalty = true;
};

struct AcquisitionResult {
    LatentVector z;
    Structure x;
    double ei = 0.0;
    int evaluations = 0;
};

/// Every candidate the search visited decodes to an already evaluated
/// structure. `fallback()` is the best such candidate by raw EI.
class AllCandidatesDuplicate : public Error {
public:
    explicit AllCandidatesDuplicate(AcquisitionResult fallback)
        : Error("acquisition: every candidate decodes to an evaluated structure"), fallback_(std::move(fallback)) {}
    const AcquisitionResult& fallback() const noexcept { return fallback_; }

private:
    AcquisitionResult fallback_;
};

/// Maximizes EI over the latent space: cma.restarts CMA-ES runs started at
/// uniform points of the search box, each candidate decoded before
/// prediction. With the duplicate penalty, candidates decoding to a
/// structure in `evaluated` score EI = -inf.
AcquisitionResult optimize_acquisition(const GPModel& gp, const LatentModel& latent, double incumbent,
                                       const std::unordered_set<Structure, StructureHash>& evaluated,
                                       const AcquisitionOptions& options, std::mt19937_64& rng);

}  // namespace ladder
