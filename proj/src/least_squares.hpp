#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>

namespace pfl::detail {

/// Weighted nonlinear least squares: minimize sum w_i (data_i - model_i(p))^2.
struct LeastSquaresProblem {
    Eigen::VectorXd data;
    Eigen::VectorXd weights;
    /// Fills model values and, when jacobian != nullptr, d model / d p.
    std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& model, Eigen::MatrixXd* jacobian)>
        evaluate;
    /// Rejects parameter vectors outside the model's domain (e.g. non-positive widths).
    std::function<bool(const Eigen::VectorXd& p)> admissible;
    /// Per-parameter magnitude used by the relative step test.
    Eigen::VectorXd scale;
};

struct LeastSquaresOptions {
    std::size_t max_iterations = 200;
    double step_tolerance = 1e-10;
};

struct LeastSquaresResult {
    Eigen::VectorXd parameters;
    Eigen::MatrixXd covariance;  // (J^T W J)^-1 scaled by reduced chi^2
    double chi2 = 0.0;
    double reduced_chi2 = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
};

/// Levenberg-Marquardt with Marquardt diagonal scaling and adaptive damping.
LeastSquaresResult levenberg_marquardt(const LeastSquaresProblem& problem,
                                       const Eigen::VectorXd& initial,
                                       const LeastSquaresOptions& options);

}  // namespace pfl::detail
