#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptire/mf_adapt.hpp"
#include "adaptire/nlls.hpp"

namespace adaptire {

/// One lateral-force sample from a slip sweep. Slip angle in radians.
struct SweepObservation {
    double slipAngle = 0.0;
    double normalLoad = 0.0;
    double pressure = 0.0;
    double treadDepth = 0.0;
    double surfaceTemperature = 0.0;
    double lateralForce = 0.0;

    [[nodiscard]] TireConditions conditions() const {
        return {pressure, treadDepth, surfaceTemperature, normalLoad};
    }
    friend bool operator==(const SweepObservation&, const SweepObservation&) = default;
};

enum class FitStage { BaseAtCondition, PressureTree, PressureTreadTree, TemperaturePoly, GripTree, JointRefinement };

[[nodiscard]] const char* to_string(FitStage stage);

using ObservationResidualFunction = std::function<void(
    std::span<const SweepObservation> observations, std::span<const double> coeffs, std::span<double> residuals)>;

struct FitProblem {
    std::vector<SweepObservation> observations;
    FitStage stage = FitStage::BaseAtCondition;
    std::vector<double> initialGuess;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> typicalScale;
    std::vector<std::string> names;
    /// Residual entries produced per observation (used to name offending observations).
    std::size_t residualsPerObservation = 1;
};

struct FitResult {
    std::vector<double> coefficients;
    double residualRms = 0.0;
    int iterations = 0;
    bool converged = false;
    double gradientNorm = 0.0;
    Termination termination = Termination::MaxIterations;
    std::vector<double> covarianceDiagonal;
    std::vector<double> acceptedCosts;
};

/// Validates the problem (finite observations inside the valid box, at least twice as many
/// observations as coefficients) and minimizes the sum of squared residuals.
[[nodiscard]] FitResult nlls_solve(const FitProblem& problem, const ObservationResidualFunction& residualFn,
                                   const LeastSquaresOptions& options = {});

/// Lateral force for one observation under a full coefficient tree.
[[nodiscard]] double predicted_lateral_force(const AdaptedMfCoefficients& tree, const SweepObservation& obs);

// ---------------------------------------------------------------------------
// Staged pipeline

/// Unique (pressure, tread, temperature) combination present in the data.
struct ConditionKey {
    double pressure = 0.0;
    double treadDepth = 0.0;
    double surfaceTemperature = 0.0;
    friend auto operator<=>(const ConditionKey&, const ConditionKey&) = default;
};

/// Stage-1 output for one condition: baseline MF coefficients from its load/slip sweeps.
struct ConditionFit {
    ConditionKey key;
    BaseMfCoefficients coefficients;
    FitResult fit;
    std::size_t observationCount = 0;
};

struct StageSummary {
    FitStage stage = FitStage::BaseAtCondition;
    double residualRms = 0.0;  // units depend on stage: N (sweeps), N/rad (stiffness), - (grip, scale)
    bool converged = true;
    std::string note;
};

struct PipelineResult {
    AdaptedMfCoefficients staged;
    AdaptedMfCoefficients refined;
    AdaptedMfCoefficients best;  // refined when it lowers the raw-force RMS, otherwise staged
    bool refinedSelected = false;
    double stagedForceRms = 0.0;
    double refinedForceRms = 0.0;
    FitResult refinement;
    std::vector<ConditionFit> conditionFits;
    std::vector<StageSummary> stages;
};

struct PipelineOptions {
    double temperatureSpan = 100.0;
    bool jointRefinement = true;
    LeastSquaresOptions solver{};
};

/// Stage 1: per-condition fit of (a1, a2, a3, a4, C, E) over all loads and slip angles.
/// Needs at least four loads per condition.
[[nodiscard]] std::vector<ConditionFit> fit_condition_sweeps(std::span<const SweepObservation> observations,
                                                             const LeastSquaresOptions& options = {});

/// Stages 2-3: pressure (quadratic a3, linear a4) then tread-depth (quadratic) polynomial fits of the
/// stage-1 stiffness coefficients, at every temperature level. Needs three pressures and three treads.
struct StiffnessTreeLevel {
    double surfaceTemperature = 0.0;
    std::array<Quadratic, 3> amplitude{};
    std::array<Quadratic, 2> loadTerm{};
    double pressureStageRms = 0.0;  // N/rad on a3, N on a4 combined
    double treadStageRms = 0.0;
};
[[nodiscard]] std::vector<StiffnessTreeLevel> fit_stiffness_levels(std::span<const ConditionFit> fits,
                                                                   const TireConditions& reference);

/// Grip tree (a11..a22) per temperature level from stage-1 (a1, a2), pressure-averaged.
struct GripTreeLevel {
    double surfaceTemperature = 0.0;
    Quadratic gripLoad{};
    Linear gripLevel{};
    double rms = 0.0;
};
[[nodiscard]] std::vector<GripTreeLevel> fit_grip_levels(std::span<const ConditionFit> fits,
                                                         const TireConditions& reference);

/// Stage 4: temperature polynomials for both branches; folds the per-level trees into one.
/// Needs three temperature levels.
[[nodiscard]] AdaptedMfCoefficients fit_temperature_stage(std::span<const ConditionFit> fits,
                                                          std::span<const StiffnessTreeLevel> stiffness,
                                                          std::span<const GripTreeLevel> grip,
                                                          const TireConditions& reference, double temperatureSpan,
                                                          std::vector<StageSummary>* summaries = nullptr);

/// Runs every stage, then an optional joint refinement of all coefficients on the raw sweeps.
/// Throws FitError naming the under-sampled axis when coverage is insufficient.
[[nodiscard]] PipelineResult fit_stage_pipeline(std::span<const SweepObservation> observations,
                                                const TireConditions& referenceConditions,
                                                const PipelineOptions& options = {});

/// Root-mean-square lateral-force residual of a tree over observations.
[[nodiscard]] double force_rms(const AdaptedMfCoefficients& tree, std::span<const SweepObservation> observations);

/// Plain-text fit report: coefficients, per-stage residual RMS and convergence flags.
void write_fit_report(std::ostream& out, const PipelineResult& result);

}  // namespace adaptire
