#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "adaptire/esc.hpp"
#include "adaptire/vehicle.hpp"

namespace adaptire {

class KeyValueDocument;

enum class ManeuverKind { SineWithDwell, StepSteer, StraightBrake };

[[nodiscard]] const char* to_string(ManeuverKind kind);

struct ManeuverSpec {
    ManeuverKind kind = ManeuverKind::SineWithDwell;
    double initialSpeed = 80.0 / 3.6;  // [m/s]
    double handWheelAmplitude = 180.0;  // [deg]
    double frequency = 0.7;             // [Hz]
    double dwellDuration = 0.5;         // hold at the second peak [s]
    double rampStart = 30.0;            // [deg]
    double rampStep = 30.0;             // [deg]
    double rampStop = 330.0;            // [deg]
    double steerDuration = 3.0;         // step steer / straight brake input length [s]
    double brakeTorque = 600.0;         // straight brake, every wheel [N m]
    double postSteerDuration = 4.0;     // simulated time after the input ends [s]
    double timeStep = 0.001;            // [s]
    double sampleInterval = 0.01;       // series spacing [s]
    bool ramp = false;                  // sim: run the whole amplitude ramp
    TireConditions frontTires{};        // initial tire state per axle (load is ignored)
    TireConditions rearTires{};

    void validate() const;
    [[nodiscard]] double steer_end() const;
    [[nodiscard]] double duration() const { return steer_end() + postSteerDuration; }
    [[nodiscard]] std::vector<double> ramp_amplitudes() const;
};

[[nodiscard]] ManeuverSpec maneuver_spec_from(const KeyValueDocument& doc);
void maneuver_spec_to(KeyValueDocument& doc, const ManeuverSpec& spec);

/// One 0.7 Hz-style sine cycle with a hold at the negative peak inserted after the third quarter.
[[nodiscard]] double sine_with_dwell_profile(const ManeuverSpec& spec, double t);

/// Hand-wheel angle [deg] for any maneuver kind.
[[nodiscard]] double hand_wheel_angle(const ManeuverSpec& spec, double t);

struct ManeuverSample {
    double time = 0.0;             // [s]
    double handWheelAngle = 0.0;   // [deg]
    double roadWheelAngle = 0.0;   // [rad]
    double yawRate = 0.0;          // [rad/s]
    double desiredYawRate = 0.0;   // [rad/s]
    double sideslip = 0.0;         // [rad]
    double speed = 0.0;            // [m/s]
    double heading = 0.0;          // [rad]
    std::array<double, 4> brakeTorque{};         // FL, FR, RL, RR [N m]
    std::array<double, 4> surfaceTemperature{};  // [degC]
    bool intervention = false;

    friend bool operator==(const ManeuverSample&, const ManeuverSample&) = default;
};

struct ManeuverSummary {
    double peakSideslip = 0.0;       // max |beta| [rad]
    double yawRateTrackingRms = 0.0;  // RMS of yaw rate minus desired yaw rate [rad/s]
    double speedLoss = 0.0;          // first minus last speed [m/s]
    int interventionCount = 0;       // samples with braking active
    double headingChange = 0.0;      // last minus first heading [rad]
    bool spinOut = false;            // |headingChange| > 90 deg

    friend bool operator==(const ManeuverSummary&, const ManeuverSummary&) = default;
};

/// Pure function of the series; the series must end at steer end + post-steer time.
[[nodiscard]] ManeuverSummary summarize(const std::vector<ManeuverSample>& series);

struct ManeuverResult {
    double amplitude = 0.0;  // [deg]
    bool escEnabled = false;
    bool adaptiveReference = false;
    std::vector<ManeuverSample> series;
    std::vector<EscDecision> decisions;  // every control step
    ManeuverSummary summary;
    double maxFrictionUtilization = 0.0;  // max over steps and wheels of |F| / (mu_max Fz)
    bool aborted = false;
    std::string abortReason;
};

/// Closed-loop run. The plant always uses `tireModel` at the spec's tire conditions; the
/// controller reference follows `esc.adaptiveReference`.
[[nodiscard]] ManeuverResult run_maneuver(const ManeuverSpec& spec, const VehicleParameters& params,
                                          const AdaptedMfCoefficients& tireModel, const EscConfig& esc,
                                          bool escEnabled);

struct RampPoint {
    double amplitude = 0.0;
    ManeuverSummary summary;
    bool aborted = false;
};

[[nodiscard]] std::vector<RampPoint> run_amplitude_ramp(const ManeuverSpec& spec, const VehicleParameters& params,
                                                        const AdaptedMfCoefficients& tireModel,
                                                        const EscConfig& esc, bool escEnabled);

struct ComparisonDeltas {
    // adaptive minus fixed; negative favours the adaptive controller
    double yawRateTrackingRms = 0.0;
    double peakSideslip = 0.0;
    int interventionCount = 0;
    double speedLoss = 0.0;

    [[nodiscard]] bool adaptive_better_on_all() const {
        return yawRateTrackingRms < 0.0 && peakSideslip < 0.0 && interventionCount < 0 && speedLoss < 0.0;
    }
};

struct Comparison {
    ManeuverResult adaptive;
    ManeuverResult fixed;
    ComparisonDeltas deltas;
};

[[nodiscard]] Comparison compare_adaptive_vs_fixed(const ManeuverSpec& spec, const VehicleParameters& params,
                                                   const AdaptedMfCoefficients& tireModel, const EscConfig& esc);

inline constexpr const char* kSeriesCsvHeader =
    "time_s,hand_wheel_deg,road_wheel_rad,yaw_rate_radps,desired_yaw_rate_radps,sideslip_rad,speed_mps,heading_rad,"
    "tb_fl_nm,tb_fr_nm,tb_rl_nm,tb_rr_nm,temp_fl_c,temp_fr_c,temp_rl_c,temp_rr_c,intervention";

void write_series_csv(std::ostream& out, const std::vector<ManeuverSample>& series);
[[nodiscard]] std::vector<ManeuverSample> read_series_csv(std::istream& in);
void write_summary(std::ostream& out, const ManeuverResult& result);
void write_ramp_csv(std::ostream& out, const std::vector<RampPoint>& ramp);
void write_comparison(std::ostream& out, const Comparison& comparison);

/// Writes `<dir>/<stem>_series.csv`, `<dir>/<stem>_decisions.csv` and `<dir>/<stem>_summary.txt`.
void export_results(const ManeuverResult& result, const std::string& directory, const std::string& stem);

}  // namespace adaptire
