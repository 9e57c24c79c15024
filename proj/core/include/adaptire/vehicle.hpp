#pragma once

#include <array>
#include <string>
#include <vector>

#include "adaptire/mf_adapt.hpp"
#include "adaptire/thermal.hpp"

namespace adaptire {

class KeyValueDocument;

enum class Wheel : int { FrontLeft = 0, FrontRight = 1, RearLeft = 2, RearRight = 3 };

inline constexpr std::array<Wheel, 4> kWheels{Wheel::FrontLeft, Wheel::FrontRight, Wheel::RearLeft, Wheel::RearRight};

[[nodiscard]] const char* to_string(Wheel w);
[[nodiscard]] constexpr std::size_t index(Wheel w) { return static_cast<std::size_t>(w); }
[[nodiscard]] constexpr bool is_front(Wheel w) { return w == Wheel::FrontLeft || w == Wheel::FrontRight; }
[[nodiscard]] constexpr bool is_left(Wheel w) { return w == Wheel::FrontLeft || w == Wheel::RearLeft; }

/// Two-track plant geometry and inertia. Body axes: x forward, y left, yaw counter-clockwise
/// positive. Defaults describe a generic mid-size sedan.
struct VehicleParameters {
    double mass = 1500.0;             // [kg]
    double yawInertiaIz = 2500.0;     // [kg m^2]
    double lf = 1.2;                  // COG to front axle [m]
    double lr = 1.5;                  // COG to rear axle [m]
    double trackWidthTr = 1.5;        // [m]
    double cogHeight = 0.5;           // [m]
    double wheelRadiusRw = 0.3;       // [m]
    double wheelSpinInertia = 1.2;    // [kg m^2]
    double steeringRatio = 16.0;      // hand-wheel / road-wheel
    double frontStaticLoadWf = 0.0;   // axle load [N]; 0 derives it from the geometry
    double rearStaticLoadWr = 0.0;    // [N]
    double frontRollShare = 0.6;      // share of lateral load transfer on the front axle
    double aeroDrag = 0.4;            // F = aeroDrag * u^2 [N s^2/m^2]
    double rollingResistance = 0.01;  // per unit normal load
    ThermalParameters tireThermal{};
    bool tireHeating = true;          // off holds every surface temperature at its initial value

    [[nodiscard]] double wheelbase() const { return lf + lr; }
    /// Fills zero static loads from the geometry, then checks every invariant.
    void finalize();
    void validate() const;

    /// Longitudinal position and lateral offset of a wheel.
    [[nodiscard]] double wheel_x(Wheel w) const { return is_front(w) ? lf : -lr; }
    [[nodiscard]] double wheel_y(Wheel w) const { return is_left(w) ? 0.5 * trackWidthTr : -0.5 * trackWidthTr; }
};

/// Reads `prefix`-qualified keys (mass_kg, lf_m, ...); missing keys keep their defaults.
[[nodiscard]] VehicleParameters vehicle_parameters_from(const KeyValueDocument& doc, const std::string& prefix = "");
void vehicle_parameters_to(KeyValueDocument& doc, const VehicleParameters& params, const std::string& prefix = "");
[[nodiscard]] std::vector<std::string> vehicle_parameter_keys(const std::string& prefix = "");

struct WheelReport {
    double normalLoad = 0.0;       // [N]
    double slipAngle = 0.0;        // [rad]
    double longitudinalForce = 0.0;  // wheel frame, negative when braking [N]
    double lateralForce = 0.0;     // wheel frame [N]
    double peakForce = 0.0;        // mu_max * Fz [N]
    double longitudinalSlip = 0.0;  // (omega Rw - vx) / vx
    double wheelVelocity = 0.0;    // forward speed of the wheel centre, wheel frame [m/s]
};

struct PlantState {
    double time = 0.0;
    double longitudinalVelocityU = 0.0;  // [m/s]
    double lateralVelocityV = 0.0;       // [m/s]
    double yawRateGamma = 0.0;           // [rad/s]
    double heading = 0.0;                // unwrapped [rad]
    double positionX = 0.0;              // [m]
    double positionY = 0.0;              // [m]
    std::array<double, 4> wheelSpeeds{};  // [rad/s]
    std::array<TireConditions, 4> tires{};  // pressure, tread, surface temperature; load refreshed each step
    // Last-step accelerations (drive the steady-state load transfer) and per-wheel diagnostics.
    double longitudinalAccel = 0.0;  // [m/s^2]
    double lateralAccel = 0.0;       // [m/s^2]
    double yawAccel = 0.0;           // [rad/s^2]
    std::array<WheelReport, 4> wheels{};

    [[nodiscard]] double sideslip() const;
};

/// Straight running at speed `u` with rolling wheels and the given tire states.
[[nodiscard]] PlantState initial_state(const VehicleParameters& params, double u,
                                       const std::array<TireConditions, 4>& tires);

struct PlantInputs {
    double roadWheelAngle = 0.0;          // front wheels [rad]
    std::array<double, 4> brakeTorque{};  // >= 0 [N m]
};

/// Per-wheel vertical loads from static loads and steady-state transfer at (ax, ay).
[[nodiscard]] std::array<double, 4> wheel_loads(const VehicleParameters& params, double ax, double ay);

/// One explicit step of the 7-DOF planar two-track model. Throws SimulationError on wheel lift.
[[nodiscard]] PlantState plant_step(const VehicleParameters& params, const PlantState& state,
                                    const PlantInputs& inputs, const AdaptedMfCoefficients& tireModel, double dt);

struct BicycleReference {
    double frontCorneringStiffnessCf = 0.0;  // axle [N/rad]
    double rearCorneringStiffnessCr = 0.0;   // axle [N/rad]
    double understeerKus = 0.0;              // [rad]
    double characteristicSpeedUch = 0.0;     // [m/s]; 0 when Kus <= 0
};

[[nodiscard]] double understeer_gradient(const VehicleParameters& params, double cf, double cr);
[[nodiscard]] BicycleReference make_bicycle_reference(const VehicleParameters& params, double cf, double cr);

/// Axle cornering stiffnesses (two tires each at static load) from the adapted model.
[[nodiscard]] BicycleReference reference_from_tire_model(const VehicleParameters& params,
                                                         const AdaptedMfCoefficients& tireModel,
                                                         const TireConditions& front, const TireConditions& rear);

/// Lower of the two axles' peak friction at static load.
[[nodiscard]] double reference_friction(const VehicleParameters& params, const AdaptedMfCoefficients& tireModel,
                                        const TireConditions& front, const TireConditions& rear);

[[nodiscard]] double desired_yaw_rate(const VehicleParameters& params, const BicycleReference& reference, double u,
                                      double roadWheelAngle, double mu);

struct AxleForces {
    double front = 0.0;  // Fyf [N]
    double rear = 0.0;   // Fyr [N]
};

/// Inverse 2-DOF model. `externalYawMoment` is a known moment (e.g. from braking) removed from the
/// yaw balance before solving.
[[nodiscard]] AxleForces axle_forces_from_measurements(const VehicleParameters& params, double ay, double yawAccel,
                                                       double roadWheelAngle, double externalYawMoment = 0.0);

/// Linear 2-DOF bicycle model state, used as a test plant and estimator oracle.
struct BicycleState {
    double v = 0.0;
    double gamma = 0.0;
};

struct BicycleDerivative {
    double vDot = 0.0;
    double gammaDot = 0.0;
    double ay = 0.0;
    AxleForces forces{};
};

[[nodiscard]] BicycleDerivative bicycle_derivative(const VehicleParameters& params, double cf, double cr, double u,
                                                   const BicycleState& state, double roadWheelAngle,
                                                   double yawMoment = 0.0);

struct EstimatorSample {
    double time = 0.0;
    double ay = 0.0;
    double gamma = 0.0;
    double u = 0.0;
    double roadWheelAngle = 0.0;
};

struct EstimatorOptions {
    double forgetting = 0.995;
    double excitationThreshold = 0.5 * 3.14159265358979323846 / 180.0;  // [rad]
    double initialRelativeVariance = 1.0;  // prior variance as a fraction of prior^2
};

struct StiffnessEstimate {
    double cf = 0.0;
    double cr = 0.0;
    double covarianceTrace = 0.0;  // relative units (parameters scaled by the prior)
    int updates = 0;
    std::vector<double> cfTrace;  // estimate after each update
    std::vector<double> crTrace;
};

/// Recursive least squares on the bicycle regression m ay = Cf af + Cr ar,
/// Iz gamma' = lf Cf af - lr Cr ar. Lateral velocity integrates ay - u gamma; yaw acceleration
/// is a forward difference. Samples below the excitation threshold leave the estimate untouched.
[[nodiscard]] StiffnessEstimate estimate_cornering_stiffness(const VehicleParameters& params,
                                                             const std::vector<EstimatorSample>& history,
                                                             double priorCf, double priorCr,
                                                             const EstimatorOptions& options = {});

}  // namespace adaptire
