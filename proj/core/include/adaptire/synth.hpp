#pragma once

#include <cstdint>
#include <vector>

#include "adaptire/fitting.hpp"
#include "adaptire/mf_adapt.hpp"

namespace adaptire {

/// Sensitivity targets the calibrated generator tree is built to reproduce
/// (high-performance summer tire).
struct SensitivityTargets {
    double pressureStep = 0.20;             // +20 % inflation pressure
    double stiffnessGainHighLoad = 0.10;    // +10 % cornering stiffness at 1.5x nominal load
    double treadStep = -0.60;               // -60 % tread depth
    double stiffnessGainWorn = 0.30;        // +30 % cornering stiffness
    double gripGainWorn = 0.10;             // +10 % peak grip
    double coldTemperature = 25.0;          // [degC]
    double hotTemperature = 90.0;           // [degC]
    double stiffnessDropHot = 0.225;        // middle of the 20-25 % band
    double gripDropHot = 0.10;              // -10 % peak grip
    double highLoadFactor = 1.5;
    double lowLoadFactor = 0.33;
};

/// Ground-truth tree that reproduces `targets` exactly by construction. Reference conditions:
/// 250 kPa, 8 mm, 25 degC, 4000 N nominal load.
[[nodiscard]] AdaptedMfCoefficients calibrated_ground_truth(const SensitivityTargets& targets = {});

/// Random tree near the calibrated one with every coefficient branch exercised; always passes
/// validate_over_box.
[[nodiscard]] AdaptedMfCoefficients random_ground_truth(std::uint64_t seed);

struct GeneratorSettings {
    std::vector<double> pressures{200.0, 250.0, 300.0, 350.0};   // [kPa]
    std::vector<double> treadDepths{3.2, 5.6, 8.0};              // [mm]
    std::vector<double> temperatures{25.0, 57.5, 90.0};          // [degC]
    std::vector<double> loads{1320.0, 2500.0, 4000.0, 5000.0, 6000.0};  // [N]
    double slipMinDeg = -20.0;
    double slipMaxDeg = 20.0;
    int slipCount = 25;
    /// Gaussian noise sigma = noiseFraction * |Fy| + noiseFloor. Zero fraction disables noise entirely.
    double noiseFraction = 0.0;
    double noiseFloor = 20.0;  // [N]
    AdaptedMfCoefficients truth = calibrated_ground_truth();
};

/// Full-factorial sweep grid evaluated on the ground-truth tree, ordered
/// pressure > tread > temperature > load > slip. Deterministic in `seed`.
[[nodiscard]] std::vector<SweepObservation> synthesize_sweep_data(const GeneratorSettings& settings,
                                                                  std::uint64_t seed);

/// Relative sensitivities of a tree at the target operating points.
struct SensitivityReport {
    double stiffnessPressureHighLoad = 0.0;  // CS(p*(1+step), 1.5 Fz) / CS(p, 1.5 Fz) - 1
    double stiffnessPressureLowLoad = 0.0;   // same at 0.33 Fz
    double stiffnessWorn = 0.0;              // CS(d*(1-0.6)) / CS(d) - 1 at nominal load
    double stiffnessHot = 0.0;               // CS(hot) / CS(cold) - 1
    double gripWorn = 0.0;
    double gripHot = 0.0;
};
[[nodiscard]] SensitivityReport measure_sensitivities(const AdaptedMfCoefficients& tree,
                                                      const SensitivityTargets& targets = {});

}  // namespace adaptire
