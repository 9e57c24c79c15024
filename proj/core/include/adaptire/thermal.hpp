#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace adaptire {

inline constexpr double kGravity = 9.81;  // [m/s^2]

/// Lumped contact-patch energy balance: W dT/dt = |Fy V alpha| - lambdaA (T - T0).
struct ThermalParameters {
    double heatCapacityW = 3000.0;            // [J/K]
    double thermalConductanceLambdaA = 150.0;  // lambda * A [W/K]
    double ambientT0 = 25.0;                  // [degC]

    void validate() const;
};

struct SlipKinematics {
    double forwardVelocityVx = 0.0;  // [m/s]
    double wheelSpeedOmega = 0.0;    // [rad/s]
    double effectiveRadiusR = 0.3;   // [m]
    double slipAngle = 0.0;          // [rad]
    double longAccelAx = 0.0;        // [m/s^2]
    double latAccelAy = 0.0;         // [m/s^2]
    double normalLoadFz = 0.0;       // [N]
};

struct SlipVelocities {
    double vsx = 0.0;  // longitudinal slip velocity [m/s]
    double vsy = 0.0;  // lateral slip velocity [m/s]
    double fx = 0.0;   // longitudinal force estimate [N]
    double fy = 0.0;   // lateral force estimate [N]
};

/// Slip velocities from wheel kinematics and force estimates from IMU accelerations.
[[nodiscard]] SlipVelocities slip_velocities(const SlipKinematics& k);

/// Dissipated sliding power |Fsx Vsx| + |Fsy Vsy| [W].
[[nodiscard]] double frictional_energy(double vsx, double vsy, double fsx, double fsy);

/// One explicit Euler step of the contact-patch energy balance. Requires 0 < dt <= W / lambdaA.
[[nodiscard]] double surface_temperature_step(double temperature, const ThermalParameters& params, double lateralForce,
                                              double velocity, double slipAngle, double dt);

/// Fixed point T0 + |Fy V alpha| / lambdaA of the energy balance.
[[nodiscard]] double equilibrium_temperature(const ThermalParameters& params, double lateralForce, double velocity,
                                             double slipAngle);

/// One sampled record of a thermal trajectory (the network's training columns).
struct ThermalSample {
    double time = 0.0;              // [s]
    double innerLiner = 0.0;        // [degC]
    double ambient = 0.0;           // [degC]
    double frictionEnergy = 0.0;    // [W]
    double velocity = 0.0;          // [m/s]
    double surfaceTemperature = 0.0;  // [degC]
    friend bool operator==(const ThermalSample&, const ThermalSample&) = default;
};

using ThermalTrace = std::vector<ThermalSample>;

/// Synthetic driving-profile trajectory integrated with surface_temperature_step. The inner liner
/// follows the surface temperature through a first-order lag (`linerTimeConstant`).
struct TraceSettings {
    double duration = 120.0;          // [s]
    double integrationStep = 0.01;    // [s]
    double sampleInterval = 0.5;      // [s]
    double linerTimeConstant = 40.0;  // [s]
    double corneringStiffness = 60000.0;  // linear tire for the profile [N/rad]
    double peakLateralForce = 4400.0;     // [N]
    ThermalParameters thermal{};
};

[[nodiscard]] ThermalTrace generate_thermal_trace(const TraceSettings& settings, std::uint64_t seed);

inline constexpr const char* kThermalCsvHeader =
    "time_s,inner_liner_c,ambient_c,friction_energy_w,velocity_mps,surface_temp_c";

/// Traces are written back to back; a new trace starts wherever time does not increase.
void write_thermal_csv(std::ostream& out, const std::vector<ThermalTrace>& traces);
[[nodiscard]] std::vector<ThermalTrace> read_thermal_csv(std::istream& in);

}  // namespace adaptire
