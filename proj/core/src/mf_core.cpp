#include "adaptire/mf_core.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "adaptire/error.hpp"

namespace adaptire {

namespace {

void require_finite(double value, const char* what) {
    if (!std::isfinite(value)) {
        throw InvalidInput(std::string(what) + " must be finite");
    }
}

}  // namespace

void BaseMfCoefficients::validate() const {
    require_finite(a1, "a1");
    require_finite(a2, "a2");
    require_finite(a3, "a3");
    require_finite(a4, "a4");
    require_finite(shapeC, "shapeC");
    require_finite(curvatureE, "curvatureE");
    require_finite(offsetSv, "offsetSv");
    if (a3 <= 0.0 || a4 <= 0.0) {
        throw InvalidInput("a3 and a4 must be positive");
    }
    if (a2 <= 0.0) {
        throw InvalidInput("a2 must be positive");
    }
    if (a1 > 0.0) {
        throw InvalidInput("a1 must not be positive (friction decreases with load)");
    }
    if (shapeC < 1.0 || shapeC > 2.0) {
        throw InvalidInput("shapeC must lie in [1, 2]");
    }
    if (curvatureE > 1.0) {
        throw InvalidInput("curvatureE must not exceed 1");
    }
}

double cornering_stiffness(const BaseMfCoefficients& coeffs, double normalLoad) {
    require_finite(coeffs.a3, "a3");
    require_finite(coeffs.a4, "a4");
    require_finite(normalLoad, "normalLoad");
    if (normalLoad < 0.0) {
        throw InvalidInput("normalLoad must be non-negative");
    }
    return coeffs.a3 * std::sin(2.0 * std::atan(normalLoad / coeffs.a4));
}

double peak_friction(const BaseMfCoefficients& coeffs, double normalLoad) {
    require_finite(coeffs.a1, "a1");
    require_finite(coeffs.a2, "a2");
    require_finite(normalLoad, "normalLoad");
    const double mu = coeffs.a1 * normalLoad + coeffs.a2;
    if (!(mu > 0.0)) {
        throw CoefficientError("peak friction is non-positive at Fz = " + std::to_string(normalLoad) +
                               " N");
    }
    return mu;
}

double lateral_force(const BaseMfCoefficients& coeffs, const TireForceState& state) {
    require_finite(state.slipAngle, "slipAngle");
    require_finite(state.normalLoad, "normalLoad");
    if (std::abs(state.slipAngle) > std::numbers::pi / 2.0) {
        throw InvalidInput("|slipAngle| must not exceed pi/2");
    }
    if (state.slipAngle == 0.0) {
        return coeffs.offsetSv;
    }
    const double peak = state.normalLoad > 0.0 ? peak_friction(coeffs, state.normalLoad) * state.normalLoad : 0.0;
    if (peak == 0.0) {
        throw InvalidInput("zero peak force with nonzero slip leaves the stiffness factor undefined");
    }
    const double bcd = cornering_stiffness(coeffs, state.normalLoad);
    const double b = bcd / (coeffs.shapeC * peak);
    const double ba = b * state.slipAngle;
    const double phi = ba - coeffs.curvatureE * (ba - std::atan(ba));
    return peak * std::sin(coeffs.shapeC * std::atan(phi)) + coeffs.offsetSv;
}

double slope_at_origin(const BaseMfCoefficients& coeffs, double normalLoad) {
    if (normalLoad == 0.0) {
        return 0.0;
    }
    constexpr double h = 1e-7;
    const double plus = lateral_force(coeffs, {h, normalLoad});
    const double minus = lateral_force(coeffs, {-h, normalLoad});
    return (plus - minus) / (2.0 * h);
}

}  // namespace adaptire
