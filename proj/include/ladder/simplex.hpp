#pragma once

#include <functional>

#include <Eigen/Dense>

namespace ladder {

struct SimplexResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int evaluations = 0;
};

/// Nelder-Mead downhill simplex with the standard coefficients (reflection 1,
/// expansion 2, contraction 1/2, shrink 1/2). The initial simplex is x0 plus
/// `step(i)` along each axis. Non-finite values are treated as +inf. Stops
/// after `max_evals` evaluations or when the simplex values span less than
/// `ftol`.
SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                          const Eigen::VectorXd& step, int max_evals, double ftol = 1e-10);

}  // namespace ladder
