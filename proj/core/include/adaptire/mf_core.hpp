#pragma once

// Baseline Pacejka lateral-force model (pure slip, zero camber).
//
//   BCD    = a3 * sin(2 * atan(Fz / a4))
//   mu_max = a1 * Fz + a2,   D = mu_max * Fz
//   Fy     = D * sin(C * atan(B*alpha - E*(B*alpha - atan(B*alpha)))) + Sv,   B = BCD / (C * D)
//
// Slip angles are in radians.

namespace adaptire {

struct BaseMfCoefficients {
    double a1 = -2.0e-5;     // load sensitivity of lateral friction [1/N]
    double a2 = 1.10;        // nominal lateral friction level [-]
    double a3 = 60000.0;     // maximum cornering stiffness [N/rad]
    double a4 = 4000.0;      // load at maximum cornering stiffness [N]
    double shapeC = 1.30;
    double curvatureE = -1.0;
    double offsetSv = 0.0;   // [N]

    /// Throws InvalidInput when any documented invariant is violated.
    void validate() const;
};

struct TireForceState {
    double slipAngle = 0.0;   // [rad]
    double normalLoad = 0.0;  // [N]
};

[[nodiscard]] double cornering_stiffness(const BaseMfCoefficients& coeffs, double normalLoad);

/// Peak lateral friction coefficient mu_max; the peak force is mu_max * Fz.
[[nodiscard]] double peak_friction(const BaseMfCoefficients& coeffs, double normalLoad);

[[nodiscard]] double lateral_force(const BaseMfCoefficients& coeffs, const TireForceState& state);

/// Central-difference slope of lateral_force at zero slip.
[[nodiscard]] double slope_at_origin(const BaseMfCoefficients& coeffs, double normalLoad);

}  // namespace adaptire
