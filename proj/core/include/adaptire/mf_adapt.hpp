#pragma once

#include <array>
#include <iosfwd>
#include <string>

#include "adaptire/mf_core.hpp"

namespace adaptire {

/// Operating conditions that drive the adaptation.
struct TireConditions {
    double pressure = 250.0;           // inflation pressure [kPa]
    double treadDepth = 8.0;           // remaining tread [mm]
    double surfaceTemperature = 25.0;  // tread surface temperature [degC]
    double normalLoad = 4000.0;        // [N]

    friend bool operator==(const TireConditions&, const TireConditions&) = default;
};

/// Valid operating box. Conditions outside it are clamped before polynomial evaluation.
struct ConditionBox {
    static constexpr double minPressure = 100.0;
    static constexpr double maxPressure = 450.0;
    static constexpr double minTread = 0.0;
    static constexpr double maxTread = 12.0;
    static constexpr double minTemperature = -20.0;
    static constexpr double maxTemperature = 150.0;
};

struct ClampedConditions {
    TireConditions conditions;
    bool clamped = false;
};

/// Throws InvalidInput on non-finite fields or non-positive load; clamps the rest.
[[nodiscard]] ClampedConditions clamp_to_valid_box(const TireConditions& cond);

/// c2*t^2 + c1*t + c0
struct Quadratic {
    double c2 = 0.0;
    double c1 = 0.0;
    double c0 = 0.0;
    [[nodiscard]] double operator()(double t) const { return (c2 * t + c1) * t + c0; }
    friend bool operator==(const Quadratic&, const Quadratic&) = default;
};

/// c1*t + c0
struct Linear {
    double c1 = 0.0;
    double c0 = 0.0;
    [[nodiscard]] double operator()(double t) const { return c1 * t + c0; }
    friend bool operator==(const Linear&, const Linear&) = default;
};

/// Polynomial arguments: x (pressure), y (tread depth), z (surface temperature),
/// each a normalized deviation from the reference conditions.
struct NormalizedConditions {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// Nested coefficient tree for adapted cornering stiffness and peak grip.
///
/// Cornering stiffness:
///   amplitude(x,y) = A[0](y)*x^2 + A[1](y)*x + A[2](y)       (A[i] quadratic in y: a3i1, a3i2, a3i3)
///   load(x,y)      = L[0](y)*x + L[1](y)                     (L[i] quadratic in y: a4i1, a4i2, a4i3)
///   BCD            = amplitude * sin(2 atan(Fz / load)) * stiffnessTemp(z)
///
/// Peak grip:
///   mu_max = (gripLoad(y) * Fz + gripLevel(y)) * gripTemp(z)
///
/// with x = (p - p_ref)/p_ref, y = (d - d_ref)/d_ref, z = (T - T_ref)/temperatureSpan.
struct AdaptedMfCoefficients {
    std::array<Quadratic, 3> amplitude{Quadratic{0, 0, 0}, Quadratic{0, 0, 0}, Quadratic{0, 0, 60000.0}};
    std::array<Quadratic, 2> loadTerm{Quadratic{0, 0, 0}, Quadratic{0, 0, 4000.0}};
    Quadratic stiffnessTemp{0, 0, 1.0};
    Quadratic gripLoad{0, 0, -2.0e-5};
    Linear gripLevel{0, 1.10};
    Quadratic gripTemp{0, 0, 1.0};
    double shapeC = 1.30;
    double curvatureE = -1.0;
    double offsetSv = 0.0;
    TireConditions reference{};
    double temperatureSpan = 100.0;  // [K] scale of z

    friend bool operator==(const AdaptedMfCoefficients&, const AdaptedMfCoefficients&) = default;
};

/// Tree whose adaptation is disabled: every condition evaluates to `base`.
[[nodiscard]] AdaptedMfCoefficients identity_tree(const BaseMfCoefficients& base, const TireConditions& reference);

[[nodiscard]] NormalizedConditions normalize(const AdaptedMfCoefficients& coeffs, const TireConditions& cond);
[[nodiscard]] TireConditions denormalize(const AdaptedMfCoefficients& coeffs, const NormalizedConditions& n,
                                         double normalLoad);

[[nodiscard]] double stiffness_amplitude(const AdaptedMfCoefficients& coeffs, const NormalizedConditions& n);
[[nodiscard]] double stiffness_load_term(const AdaptedMfCoefficients& coeffs, const NormalizedConditions& n);

[[nodiscard]] double adapted_cornering_stiffness(const AdaptedMfCoefficients& coeffs, const TireConditions& cond);
[[nodiscard]] double adapted_peak_friction(const AdaptedMfCoefficients& coeffs, const TireConditions& cond);

/// Effective baseline coefficients at `cond` (the load field of `cond` is ignored):
/// cornering_stiffness and peak_friction of the result reproduce the adapted values at every load.
[[nodiscard]] BaseMfCoefficients to_base_coefficients(const AdaptedMfCoefficients& coeffs, const TireConditions& cond);

/// Checks amplitude, load term and both temperature polynomials stay positive over the valid box
/// (sampled on a dense grid including the corners). Throws CoefficientError otherwise.
void validate_over_box(const AdaptedMfCoefficients& coeffs);

// Tree files: sectioned key = value text. Sections [stiffness] (a311..a423, b11..b13),
// [grip] (a11..a22, b11..b13), [shape] (C, E, Sv), [reference].
void write_tree(std::ostream& out, const AdaptedMfCoefficients& coeffs);
[[nodiscard]] AdaptedMfCoefficients read_tree(std::istream& in);
void save_tree(const std::string& path, const AdaptedMfCoefficients& coeffs);
[[nodiscard]] AdaptedMfCoefficients load_tree(const std::string& path);

}  // namespace adaptire
