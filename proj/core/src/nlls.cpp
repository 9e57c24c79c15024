#include "adaptire/nlls.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "adaptire/error.hpp"

namespace adaptire {

const char* to_string(Termination t) {
    switch (t) {
        case Termination::ZeroResidual: return "zero-residual";
        case Termination::Gradient: return "gradient";
        case Termination::Step: return "step";
        case Termination::MaxIterations: return "max-iterations";
    }
    return "unknown";
}

std::string describe_nonfinite_residual(std::span<const double> residuals) {
    for (std::size_t i = 0; i < residuals.size(); ++i) {
        if (!std::isfinite(residuals[i])) {
            return "residual " + std::to_string(i) + " is non-finite";
        }
    }
    return {};
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class Evaluator {
public:
    explicit Evaluator(const LeastSquaresProblem& problem) : problem_(problem) {}

    VectorXd residuals(const VectorXd& p) const {
        VectorXd r(static_cast<Eigen::Index>(problem_.residualCount));
        problem_.residuals(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                           std::span<double>(r.data(), static_cast<std::size_t>(r.size())));
        if (!r.allFinite()) {
            throw FitError(describe_nonfinite_residual(std::span<const double>(r.data(), r.size())));
        }
        return r;
    }

private:
    const LeastSquaresProblem& problem_;
};

double sum_squares(const VectorXd& r) { return r.squaredNorm(); }

}  // namespace

LeastSquaresResult solve_least_squares(const LeastSquaresProblem& problem, const LeastSquaresOptions& options) {
    const auto n = static_cast<Eigen::Index>(problem.initialGuess.size());
    const auto m = static_cast<Eigen::Index>(problem.residualCount);
    if (n == 0 || m == 0 || !problem.residuals) {
        throw FitError("least-squares problem needs parameters, residuals and a residual function");
    }
    const bool bounded = !problem.lower.empty() || !problem.upper.empty();
    if (bounded && (problem.lower.size() != problem.initialGuess.size() ||
                    problem.upper.size() != problem.initialGuess.size())) {
        throw FitError("bounds must match the parameter count");
    }

    auto name_of = [&](Eigen::Index j) {
        return static_cast<std::size_t>(j) < problem.parameterNames.size()
                   ? problem.parameterNames[static_cast<std::size_t>(j)]
                   : "parameter " + std::to_string(j);
    };

    VectorXd scale(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto idx = static_cast<std::size_t>(j);
        double s = idx < problem.typicalScale.size() ? problem.typicalScale[idx] : 0.0;
        if (!(s > 0.0)) {
            s = std::abs(problem.initialGuess[idx]);
        }
        scale(j) = s > 0.0 ? s : 1.0;
    }

    auto project = [&](VectorXd& p) {
        if (!bounded) {
            return;
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            p(j) = std::clamp(p(j), problem.lower[static_cast<std::size_t>(j)],
                              problem.upper[static_cast<std::size_t>(j)]);
        }
    };

    const Evaluator eval(problem);
    VectorXd p = Eigen::Map<const VectorXd>(problem.initialGuess.data(), n);
    project(p);
    VectorXd r = eval.residuals(p);
    double cost = sum_squares(r);

    LeastSquaresResult result;
    result.acceptedCosts.push_back(cost);

    auto jacobian = [&](const VectorXd& at, const VectorXd& rAt) {
        MatrixXd jac(m, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double h = options.finiteDifferenceStep * std::max(std::abs(at(j)), scale(j));
            VectorXd shifted = at;
            shifted(j) += h;
            const double actual = shifted(j) - at(j);
            jac.col(j) = (eval.residuals(shifted) - rAt) / actual;
        }
        return jac;
    };

    auto gradient_cosine = [&](const MatrixXd& jac, const VectorXd& res) {
        const double rnorm = res.norm();
        if (rnorm == 0.0) {
            return 0.0;
        }
        double worst = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double cn = jac.col(j).norm();
            if (cn > 0.0) {
                worst = std::max(worst, std::abs(jac.col(j).dot(res)) / (cn * rnorm));
            }
        }
        return worst;
    };

    auto finish = [&](const MatrixXd& jac, Termination why) {
        result.parameters.assign(p.data(), p.data() + n);
        result.residualRms = std::sqrt(cost / static_cast<double>(m));
        result.termination = why;
        result.converged = why != Termination::MaxIterations;
        result.gradientNorm = gradient_cosine(jac, r);
        result.covarianceDiagonal.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
        if (m > n) {
            const MatrixXd jtj = jac.transpose() * jac;
            const Eigen::FullPivLU<MatrixXd> lu(jtj);
            if (lu.isInvertible()) {
                const MatrixXd inv = lu.inverse();
                const double s2 = cost / static_cast<double>(m - n);
                for (Eigen::Index j = 0; j < n; ++j) {
                    result.covarianceDiagonal[static_cast<std::size_t>(j)] = s2 * inv(j, j);
                }
            }
        }
        return result;
    };

    if (cost == 0.0) {
        return finish(MatrixXd::Zero(m, n), Termination::ZeroResidual);
    }

    MatrixXd jac = jacobian(p, r);

    // Singularity check on the column-equilibrated normal matrix at the initial guess.
    {
        VectorXd colNorm(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            colNorm(j) = jac.col(j).norm();
            if (!(colNorm(j) > 0.0)) {
                throw FitError("singular normal equations at initial guess: residuals do not depend on " +
                               name_of(j));
            }
        }
        const MatrixXd normalized = jac * colNorm.cwiseInverse().asDiagonal();
        const Eigen::JacobiSVD<MatrixXd> svd(normalized);
        const auto& sv = svd.singularValues();
        if (sv(n - 1) <= 1e-10 * sv(0)) {
            throw FitError("singular normal equations at initial guess: condition estimate " +
                           std::to_string(sv(0) / std::max(sv(n - 1), 1e-300)));
        }
    }

    double lambda = options.initialDamping;
    for (int iter = 0; iter < options.maxIterations; ++iter) {
        if (gradient_cosine(jac, r) < options.gradientTolerance) {
            result.iterations = iter;
            return finish(jac, Termination::Gradient);
        }
        result.iterations = iter + 1;

        const MatrixXd jtj = jac.transpose() * jac;
        const VectorXd g = jac.transpose() * r;
        MatrixXd damped = jtj;
        damped.diagonal() += lambda * jtj.diagonal();
        const VectorXd step = damped.ldlt().solve(-g);

        VectorXd trial = p + step;
        project(trial);
        const VectorXd taken = trial - p;

        double relStep = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            relStep = std::max(relStep, std::abs(taken(j)) / std::max(std::abs(p(j)), scale(j)));
        }
        if (!taken.allFinite()) {
            lambda *= options.dampingIncrease;
            continue;
        }
        if (relStep < options.stepTolerance) {
            return finish(jac, Termination::Step);
        }

        const VectorXd rTrial = eval.residuals(trial);
        const double trialCost = sum_squares(rTrial);
        if (trialCost < cost) {
            p = trial;
            r = rTrial;
            cost = trialCost;
            result.acceptedCosts.push_back(cost);
            lambda *= options.dampingDecrease;
            if (cost == 0.0) {
                return finish(jac, Termination::ZeroResidual);
            }
            jac = jacobian(p, r);
        } else {
            lambda *= options.dampingIncrease;
        }
    }
    return finish(jac, Termination::MaxIterations);
}

}  // namespace adaptire
