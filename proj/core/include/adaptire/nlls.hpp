#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace adaptire {

/// Residual callback: fills `residuals` (pre-sized) for the parameter vector `params`.
/// Must be re-entrant; the solver treats it as a pure function.
using ResidualFunction = std::function<void(std::span<const double> params, std::span<double> residuals)>;

struct LeastSquaresProblem {
    std::size_t residualCount = 0;
    ResidualFunction residuals;
    std::vector<double> initialGuess;
    /// Optional box constraints; empty means unbounded. Steps are projected onto the box.
    std::vector<double> lower;
    std::vector<double> upper;
    /// Optional per-parameter magnitude used for finite-difference steps and the step test
    /// when a parameter sits at or near zero.
    std::vector<double> typicalScale;
    /// Optional labels used in diagnostics.
    std::vector<std::string> parameterNames;
};

struct LeastSquaresOptions {
    double gradientTolerance = 1e-10;  // max cosine between residual and any Jacobian column
    double stepTolerance = 1e-12;      // max relative parameter change
    int maxIterations = 200;
    double initialDamping = 1e-3;
    double dampingDecrease = 0.3;
    double dampingIncrease = 2.0;
    double finiteDifferenceStep = 1e-7;  // relative forward-difference step
};

enum class Termination { ZeroResidual, Gradient, Step, MaxIterations };

[[nodiscard]] const char* to_string(Termination t);

struct LeastSquaresResult {
    std::vector<double> parameters;
    double residualRms = 0.0;
    double gradientNorm = 0.0;  // cosine measure at the returned point
    int iterations = 0;
    bool converged = false;     // ZeroResidual, Gradient or Step termination
    Termination termination = Termination::MaxIterations;
    std::vector<double> covarianceDiagonal;  // s^2 * diag((J^T J)^-1), s^2 = SSR/(m - n)
    std::vector<double> acceptedCosts;       // sum of squared residuals after each accepted step (first = initial)
};

/// Damped Gauss-Newton (Levenberg-Marquardt) with Marquardt diagonal scaling and a
/// forward-difference Jacobian.
///
/// Throws FitError when the normal equations are singular at the initial guess or a
/// residual is non-finite (the message names the residual index / parameter).
[[nodiscard]] LeastSquaresResult solve_least_squares(const LeastSquaresProblem& problem,
                                                     const LeastSquaresOptions& options = {});

/// Names the first non-finite entry, or returns an empty string when all are finite.
[[nodiscard]] std::string describe_nonfinite_residual(std::span<const double> residuals);

}  // namespace adaptire
