#include "least_squares.hpp"

#include <algorithm>
#include <cmath>

namespace pfl::detail {

namespace {

double weighted_chi2(const LeastSquaresProblem& problem, const Eigen::VectorXd& model) {
    return (problem.weights.array() * (problem.data - model).array().square()).sum();
}

double relative_step(const Eigen::VectorXd& step, const Eigen::VectorXd& p,
                     const Eigen::VectorXd& scale) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < step.size(); ++i) {
        const double s = std::max({std::abs(p[i]), scale[i], 1e-300});
        worst = std::max(worst, std::abs(step[i]) / s);
    }
    return worst;
}

}  // namespace

LeastSquaresResult levenberg_marquardt(const LeastSquaresProblem& problem,
                                       const Eigen::VectorXd& initial,
                                       const LeastSquaresOptions& options) {
    const Eigen::Index n_params = initial.size();
    const Eigen::Index n_data = problem.data.size();

    Eigen::VectorXd p = initial;
    Eigen::VectorXd model(n_data);
    Eigen::MatrixXd jacobian(n_data, n_params);
    problem.evaluate(p, model, &jacobian);
    double chi2 = weighted_chi2(problem, model);

    LeastSquaresResult result;
    double lambda = 1e-3;
    // After the convergence test passes, a few more undamped-ish steps polish the
    // iterate down to rounding so that refitting from it is a fixed point.
    std::size_t polish = 0;
    constexpr std::size_t polish_steps = 8;
    Eigen::VectorXd candidate_model(n_data);

    std::size_t iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        const Eigen::MatrixXd jw = jacobian.transpose() * problem.weights.asDiagonal();
        const Eigen::MatrixXd normal = jw * jacobian;
        const Eigen::VectorXd gradient = jw * (problem.data - model);
        Eigen::VectorXd diag = normal.diagonal().cwiseMax(1e-300);

        bool accepted = false;
        double step_size = 0.0;
        while (lambda < 1e16) {
            Eigen::MatrixXd damped = normal;
            damped.diagonal() += lambda * diag;
            const Eigen::VectorXd step = damped.ldlt().solve(gradient);
            step_size = relative_step(step, p, problem.scale);
            const Eigen::VectorXd candidate = p + step;
            if (step.allFinite() && (!problem.admissible || problem.admissible(candidate))) {
                problem.evaluate(candidate, candidate_model, nullptr);
                const double candidate_chi2 = weighted_chi2(problem, candidate_model);
                if (candidate_chi2 <= chi2) {
                    p = candidate;
                    chi2 = candidate_chi2;
                    lambda = std::max(lambda * 0.1, 1e-15);
                    accepted = true;
                    break;
                }
            }
            if (step_size < options.step_tolerance) break;  // nothing left to gain
            lambda *= 10.0;
        }

        if (step_size < options.step_tolerance) result.converged = true;
        if (!accepted) break;
        problem.evaluate(p, model, &jacobian);
        if (result.converged) {
            if (step_size < 1e-15 || ++polish >= polish_steps) break;
        }
    }
    result.iterations = iter;

    problem.evaluate(p, model, &jacobian);
    result.parameters = p;
    result.chi2 = weighted_chi2(problem, model);
    const double dof = static_cast<double>(std::max<Eigen::Index>(n_data - n_params, 1));
    result.reduced_chi2 = result.chi2 / dof;
    const Eigen::MatrixXd normal =
        jacobian.transpose() * problem.weights.asDiagonal() * jacobian;
    result.covariance = normal.ldlt().solve(Eigen::MatrixXd::Identity(n_params, n_params)) *
                        result.reduced_chi2;
    return result;
}

}  // namespace pfl::detail
