#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "adaptire/vehicle.hpp"

namespace adaptire {

class KeyValueDocument;

/// Wheel labels as used by the brake-rule table.
enum class BrakedWheel { None, FrontLeft, FrontRight, RearLeft, RearRight };

[[nodiscard]] const char* to_string(BrakedWheel w);
[[nodiscard]] BrakedWheel braked_wheel_from_string(const std::string& text);

/// The brake-rule table is laid out for a clockwise-positive yaw sign, so its left/right labels
/// swap when applied to the plant's counter-clockwise frame.
[[nodiscard]] Wheel plant_wheel(BrakedWheel w);

struct EscConfig {
    double slidingGainEta = 5.0;           // [1/s]
    double deadBand = 0.03;                // [rad/s]
    double maxBrakeTorque = 1500.0;        // [N m]
    bool adaptiveReference = true;         // reference from sensed tire conditions vs nominal
    bool adaptiveFrictionCap = true;       // yaw-rate cap from adapted vs nominal friction
    double slipTargetLongitudinal = 0.12;  // [-]
    double yawRateFilterTau = 0.02;        // desired yaw acceleration filter [s]

    void validate() const;
};

[[nodiscard]] EscConfig esc_config_from(const KeyValueDocument& doc, const std::string& prefix = "");
void esc_config_to(KeyValueDocument& doc, const EscConfig& config, const std::string& prefix = "");
[[nodiscard]] std::vector<std::string> esc_config_keys(const std::string& prefix = "");

struct EscDecision {
    double time = 0.0;
    double gamma = 0.0;
    double gammaDes = 0.0;
    double sliding = 0.0;             // s = gamma - gammaDes [rad/s]
    double desiredYawMomentMz = 0.0;  // [N m]
    BrakedWheel brakedWheel = BrakedWheel::None;
    double brakeTorqueTb = 0.0;       // [N m]
    bool intervention = false;
};

[[nodiscard]] double sliding_surface(double gamma, double gammaDes);

/// Moment that makes s' = -eta s under the 2-DOF yaw balance.
[[nodiscard]] double desired_yaw_moment(const VehicleParameters& params, double fyf, double fyr, double s,
                                        double gammaDesRate, double roadWheelAngle, const EscConfig& config);

/// Brake-rule table; any zero sign maps to None.
[[nodiscard]] BrakedWheel select_braked_wheel(double gammaDes, double s, double mz);

[[nodiscard]] double brake_torque(double mz, const VehicleParameters& params, const EscConfig& config);

struct WheelSlipState {
    double longitudinalSlip = 0.0;  // [-]
    double peakForce = 0.0;         // estimated mu_max * Fz [N]
    double lateralForce = 0.0;      // current lateral demand [N]
};

/// Caps the torque to the friction-circle budget and scales it back when slip exceeds the target.
[[nodiscard]] double limit_slip(double requestedTb, const WheelSlipState& wheel, const VehicleParameters& params,
                                const EscConfig& config);

struct EscMeasurements {
    double time = 0.0;
    double u = 0.0;
    double gamma = 0.0;
    double yawAccel = 0.0;
    double ay = 0.0;
    double roadWheelAngle = 0.0;
    std::array<TireConditions, 4> tires{};  // sensed pressure, tread, surface temperature, load
    std::array<WheelReport, 4> wheels{};    // slip and lateral force estimates
};

[[nodiscard]] EscMeasurements measure(const PlantState& state, double roadWheelAngle);

/// Filter and actuation memory owned by one controller instance.
struct EscState {
    bool initialized = false;
    double previousTime = 0.0;
    double previousGammaDes = 0.0;
    double gammaDesRate = 0.0;
    double appliedYawMoment = 0.0;  // moment commanded at the previous step [N m]
};

/// Reference conditions used by the controller this step (sensed or nominal).
struct EscReference {
    BicycleReference bicycle;
    double mu = 0.0;
    TireConditions front;
    TireConditions rear;
};

[[nodiscard]] EscReference esc_reference(const VehicleParameters& params, const AdaptedMfCoefficients& tireModel,
                                         const EscConfig& config, const EscMeasurements& m);

[[nodiscard]] EscDecision esc_step(const VehicleParameters& params, const AdaptedMfCoefficients& tireModel,
                                   const EscConfig& config, EscState& state, const EscMeasurements& m);

inline constexpr const char* kDecisionCsvHeader = "time_s,gamma,gamma_des,s,mz,wheel,tb,intervention";

void write_decision_log(std::ostream& out, const std::vector<EscDecision>& log);
[[nodiscard]] std::vector<EscDecision> read_decision_log(std::istream& in);

}  // namespace adaptire
