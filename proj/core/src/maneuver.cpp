#include "adaptire/maneuver.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "adaptire/error.hpp"
#include "adaptire/keyvalue.hpp"

namespace adaptire {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct NumberKey {
    const char* name;
    double ManeuverSpec::*field;
};

constexpr NumberKey kNumberKeys[] = {
    {"initial_speed_mps", &ManeuverSpec::initialSpeed},
    {"hand_wheel_amplitude_deg", &ManeuverSpec::handWheelAmplitude},
    {"frequency_hz", &ManeuverSpec::frequency},
    {"dwell_s", &ManeuverSpec::dwellDuration},
    {"ramp_start_deg", &ManeuverSpec::rampStart},
    {"ramp_step_deg", &ManeuverSpec::rampStep},
    {"ramp_stop_deg", &ManeuverSpec::rampStop},
    {"steer_duration_s", &ManeuverSpec::steerDuration},
    {"brake_torque_nm", &ManeuverSpec::brakeTorque},
    {"post_steer_s", &ManeuverSpec::postSteerDuration},
    {"time_step_s", &ManeuverSpec::timeStep},
    {"sample_interval_s", &ManeuverSpec::sampleInterval},
};

void read_axle(const KeyValueDocument& doc, const std::string& axle, TireConditions& t) {
    t.pressure = doc.number_or("tires." + axle + "_pressure_kpa", t.pressure);
    t.treadDepth = doc.number_or("tires." + axle + "_tread_mm", t.treadDepth);
    t.surfaceTemperature = doc.number_or("tires." + axle + "_surface_temp_c", t.surfaceTemperature);
}

void write_axle(KeyValueDocument& doc, const std::string& axle, const TireConditions& t) {
    doc.set("tires." + axle + "_pressure_kpa", t.pressure);
    doc.set("tires." + axle + "_tread_mm", t.treadDepth);
    doc.set("tires." + axle + "_surface_temp_c", t.surfaceTemperature);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
}

std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    return out;
}

}  // namespace

const char* to_string(ManeuverKind kind) {
    switch (kind) {
        case ManeuverKind::SineWithDwell: return "sine_with_dwell";
        case ManeuverKind::StepSteer: return "step_steer";
        case ManeuverKind::StraightBrake: return "straight_brake";
    }
    return "?";
}

void ManeuverSpec::validate() const {
    if (!(frequency > 0.0) || !std::isfinite(frequency)) {
        throw InvalidInput("maneuver frequency must be positive");
    }
    for (double a : {handWheelAmplitude, rampStart, rampStop}) {
        if (!(a >= 0.0 && a <= 330.0)) {
            throw InvalidInput("hand-wheel amplitudes must lie in [0, 330] deg");
        }
    }
    if (!(rampStep > 0.0) || rampStop < rampStart) {
        throw InvalidInput("amplitude ramp needs step > 0 and stop >= start");
    }
    if (!(initialSpeed > 0.0) || !(dwellDuration >= 0.0) || !(steerDuration > 0.0) || !(brakeTorque >= 0.0) ||
        !(postSteerDuration >= 0.0)) {
        throw InvalidInput("maneuver speed, durations and brake torque must be non-negative (speed positive)");
    }
    if (!(timeStep > 0.0 && timeStep <= 0.002) || !(sampleInterval >= timeStep)) {
        throw InvalidInput("time_step_s must lie in (0, 0.002] and sample_interval_s must be >= time_step_s");
    }
    const double ratio = sampleInterval / timeStep;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
        throw InvalidInput("sample_interval_s must be a whole multiple of time_step_s");
    }
}

double ManeuverSpec::steer_end() const {
    return kind == ManeuverKind::SineWithDwell ? 1.0 / frequency + dwellDuration : steerDuration;
}

std::vector<double> ManeuverSpec::ramp_amplitudes() const {
    std::vector<double> out;
    for (int k = 0;; ++k) {
        const double a = rampStart + k * rampStep;
        if (a > rampStop + 1e-9) break;
        out.push_back(a);
    }
    return out;
}

ManeuverSpec maneuver_spec_from(const KeyValueDocument& doc) {
    std::vector<std::string> allowed{"kind", "ramp"};
    for (const auto& k : kNumberKeys) allowed.emplace_back(k.name);
    for (const char* axle : {"front", "rear"}) {
        for (const char* f : {"_pressure_kpa", "_tread_mm", "_surface_temp_c"}) {
            allowed.push_back(std::string("tires.") + axle + f);
        }
    }
    doc.require_known(allowed);
    ManeuverSpec s;
    if (doc.contains("kind")) {
        const std::string& kind = doc.text("kind");
        if (kind == "sine_with_dwell") s.kind = ManeuverKind::SineWithDwell;
        else if (kind == "step_steer") s.kind = ManeuverKind::StepSteer;
        else if (kind == "straight_brake") s.kind = ManeuverKind::StraightBrake;
        else throw InvalidInput("unknown maneuver kind '" + kind + "'");
    }
    for (const auto& k : kNumberKeys) s.*k.field = doc.number_or(k.name, s.*k.field);
    s.ramp = doc.boolean_or("ramp", s.ramp);
    read_axle(doc, "front", s.frontTires);
    read_axle(doc, "rear", s.rearTires);
    s.validate();
    return s;
}

void maneuver_spec_to(KeyValueDocument& doc, const ManeuverSpec& s) {
    doc.set("kind", std::string(to_string(s.kind)));
    for (const auto& k : kNumberKeys) doc.set(k.name, s.*k.field);
    doc.set("ramp", std::string(s.ramp ? "on" : "off"));
    write_axle(doc, "front", s.frontTires);
    write_axle(doc, "rear", s.rearTires);
}

double sine_with_dwell_profile(const ManeuverSpec& s, double t) {
    const double period = 1.0 / s.frequency;
    const double w = 2.0 * std::numbers::pi * s.frequency;
    if (t < 0.0) return 0.0;
    if (t < 0.75 * period) return s.handWheelAmplitude * std::sin(w * t);
    if (t < 0.75 * period + s.dwellDuration) return -s.handWheelAmplitude;
    if (t < period + s.dwellDuration) return s.handWheelAmplitude * std::sin(w * (t - s.dwellDuration));
    return 0.0;
}

double hand_wheel_angle(const ManeuverSpec& s, double t) {
    switch (s.kind) {
        case ManeuverKind::SineWithDwell: return sine_with_dwell_profile(s, t);
        case ManeuverKind::StepSteer:
            if (t < 0.0 || t >= s.steerDuration) return 0.0;
            return s.handWheelAmplitude * std::min(1.0, t / 0.2);
        case ManeuverKind::StraightBrake: return 0.0;
    }
    return 0.0;
}

ManeuverSummary summarize(const std::vector<ManeuverSample>& series) {
    ManeuverSummary sum;
    if (series.empty()) {
        return sum;
    }
    double sq = 0.0;
    for (const auto& s : series) {
        sum.peakSideslip = std::max(sum.peakSideslip, std::abs(s.sideslip));
        const double e = s.yawRate - s.desiredYawRate;
        sq += e * e;
        sum.interventionCount += s.intervention ? 1 : 0;
    }
    sum.yawRateTrackingRms = std::sqrt(sq / static_cast<double>(series.size()));
    sum.speedLoss = series.front().speed - series.back().speed;
    sum.headingChange = series.back().heading - series.front().heading;
    sum.spinOut = std::abs(sum.headingChange) > 0.5 * std::numbers::pi;
    return sum;
}

ManeuverResult run_maneuver(const ManeuverSpec& spec, const VehicleParameters& params,
                            const AdaptedMfCoefficients& tireModel, const EscConfig& esc, bool escEnabled) {
    spec.validate();
    params.validate();
    esc.validate();
    ManeuverResult result;
    result.amplitude = spec.handWheelAmplitude;
    result.escEnabled = escEnabled;
    result.adaptiveReference = esc.adaptiveReference;

    PlantState state = initial_state(params, spec.initialSpeed,
                                     {spec.frontTires, spec.frontTires, spec.rearTires, spec.rearTires});
    EscState escState;
    const auto steps = static_cast<long>(std::llround(spec.duration() / spec.timeStep));
    const auto every = static_cast<long>(std::llround(spec.sampleInterval / spec.timeStep));
    bool stopped = false;
    result.decisions.reserve(static_cast<std::size_t>(steps + 1));

    for (long k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * spec.timeStep;
        state.time = t;
        const double hw = hand_wheel_angle(spec, t);
        const double delta = hw * kDegToRad / params.steeringRatio;

        EscDecision decision;
        decision.time = t;
        decision.gamma = state.yawRateGamma;
        if (!stopped && state.longitudinalVelocityU > 1.0) {
            decision = esc_step(params, tireModel, esc, escState, measure(state, delta));
        }
        result.decisions.push_back(decision);

        PlantInputs inputs;
        inputs.roadWheelAngle = delta;
        if (spec.kind == ManeuverKind::StraightBrake && t < spec.steerDuration) {
            inputs.brakeTorque.fill(spec.brakeTorque);
        }
        const bool braking = escEnabled && decision.intervention;
        if (braking) {
            inputs.brakeTorque[index(plant_wheel(decision.brakedWheel))] += decision.brakeTorqueTb;
        }

        if (k % every == 0 || k == steps) {
            ManeuverSample s;
            s.time = t;
            s.handWheelAngle = hw;
            s.roadWheelAngle = delta;
            s.yawRate = state.yawRateGamma;
            s.desiredYawRate = decision.gammaDes;
            s.sideslip = stopped ? result.series.back().sideslip : state.sideslip();
            s.speed = std::hypot(state.longitudinalVelocityU, state.lateralVelocityV);
            s.heading = state.heading;
            s.brakeTorque = inputs.brakeTorque;
            for (auto w : kWheels) s.surfaceTemperature[index(w)] = state.tires[index(w)].surfaceTemperature;
            s.intervention = braking;
            result.series.push_back(s);
        }
        if (k == steps || stopped) {
            continue;
        }
        try {
            state = plant_step(params, state, inputs, tireModel, spec.timeStep);
        } catch (const SimulationError& e) {
            result.aborted = true;
            result.abortReason = e.what();
            break;
        }
        for (const auto& w : state.wheels) {
            if (w.peakForce > 0.0) {
                result.maxFrictionUtilization = std::max(
                    result.maxFrictionUtilization, std::hypot(w.longitudinalForce, w.lateralForce) / w.peakForce);
            }
        }
        if (std::hypot(state.longitudinalVelocityU, state.lateralVelocityV) < 0.5) {
            stopped = true;
            state.longitudinalVelocityU = state.lateralVelocityV = state.yawRateGamma = 0.0;
        }
    }
    result.summary = summarize(result.series);
    return result;
}

std::vector<RampPoint> run_amplitude_ramp(const ManeuverSpec& spec, const VehicleParameters& params,
                                          const AdaptedMfCoefficients& tireModel, const EscConfig& esc,
                                          bool escEnabled) {
    std::vector<RampPoint> out;
    for (double a : spec.ramp_amplitudes()) {
        ManeuverSpec s = spec;
        s.handWheelAmplitude = a;
        const ManeuverResult r = run_maneuver(s, params, tireModel, esc, escEnabled);
        out.push_back({a, r.summary, r.aborted});
    }
    return out;
}

Comparison compare_adaptive_vs_fixed(const ManeuverSpec& spec, const VehicleParameters& params,
                                     const AdaptedMfCoefficients& tireModel, const EscConfig& esc) {
    EscConfig adaptive = esc, fixed = esc;
    adaptive.adaptiveReference = true;
    fixed.adaptiveReference = false;
    Comparison c;
    c.adaptive = run_maneuver(spec, params, tireModel, adaptive, true);
    c.fixed = run_maneuver(spec, params, tireModel, fixed, true);
    const auto& a = c.adaptive.summary;
    const auto& f = c.fixed.summary;
    c.deltas = {a.yawRateTrackingRms - f.yawRateTrackingRms, a.peakSideslip - f.peakSideslip,
                a.interventionCount - f.interventionCount, a.speedLoss - f.speedLoss};
    return c;
}

void write_series_csv(std::ostream& out, const std::vector<ManeuverSample>& series) {
    out << kSeriesCsvHeader << '\n';
    for (const auto& s : series) {
        out << format_double(s.time) << ',' << format_double(s.handWheelAngle) << ','
            << format_double(s.roadWheelAngle) << ',' << format_double(s.yawRate) << ','
            << format_double(s.desiredYawRate) << ',' << format_double(s.sideslip) << ','
            << format_double(s.speed) << ',' << format_double(s.heading);
        for (double v : s.brakeTorque) out << ',' << format_double(v);
        for (double v : s.surfaceTemperature) out << ',' << format_double(v);
        out << ',' << (s.intervention ? 1 : 0) << '\n';
    }
}

std::vector<ManeuverSample> read_series_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kSeriesCsvHeader) {
        throw InvalidInput("series csv: unexpected header");
    }
    std::vector<ManeuverSample> series;
    int lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 17) {
            throw InvalidInput("series csv line " + std::to_string(lineNo) + ": expected 17 fields");
        }
        ManeuverSample s;
        double* scalars[] = {&s.time,           &s.handWheelAngle, &s.roadWheelAngle, &s.yawRate,
                             &s.desiredYawRate, &s.sideslip,       &s.speed,          &s.heading};
        std::size_t c = 0;
        for (double* p : scalars) *p = parse_double(f[c++]);
        for (double& v : s.brakeTorque) v = parse_double(f[c++]);
        for (double& v : s.surfaceTemperature) v = parse_double(f[c++]);
        if (f[c] != "0" && f[c] != "1") {
            throw InvalidInput("series csv line " + std::to_string(lineNo) + ": intervention must be 0 or 1");
        }
        s.intervention = f[c] == "1";
        series.push_back(s);
    }
    return series;
}

void write_summary(std::ostream& out, const ManeuverResult& r) {
    const auto& s = r.summary;
    KeyValueDocument doc;
    doc.set("amplitude_deg", r.amplitude);
    doc.set("esc", std::string(r.escEnabled ? "on" : "off"));
    doc.set("adaptive", std::string(r.adaptiveReference ? "on" : "off"));
    doc.set("peak_sideslip_rad", s.peakSideslip);
    doc.set("yaw_rate_tracking_rms_radps", s.yawRateTrackingRms);
    doc.set("speed_loss_mps", s.speedLoss);
    doc.set("intervention_count", static_cast<double>(s.interventionCount));
    doc.set("heading_change_rad", s.headingChange);
    doc.set("spin_out", std::string(s.spinOut ? "true" : "false"));
    doc.set("max_friction_utilization", r.maxFrictionUtilization);
    doc.set("aborted", std::string(r.aborted ? "true" : "false"));
    if (r.aborted) {
        doc.set("abort_reason", r.abortReason);
    }
    doc.write(out);
}

void write_ramp_csv(std::ostream& out, const std::vector<RampPoint>& ramp) {
    out << "amplitude_deg,spin_out,heading_change_rad,peak_sideslip_rad,yaw_rate_tracking_rms_radps,"
           "intervention_count,speed_loss_mps,aborted\n";
    for (const auto& p : ramp) {
        out << format_double(p.amplitude) << ',' << (p.summary.spinOut ? 1 : 0) << ','
            << format_double(p.summary.headingChange) << ',' << format_double(p.summary.peakSideslip) << ','
            << format_double(p.summary.yawRateTrackingRms) << ',' << p.summary.interventionCount << ','
            << format_double(p.summary.speedLoss) << ',' << (p.aborted ? 1 : 0) << '\n';
    }
}

void write_comparison(std::ostream& out, const Comparison& c) {
    KeyValueDocument doc;
    auto put = [&](const std::string& prefix, const ManeuverSummary& s) {
        doc.set(prefix + ".yaw_rate_tracking_rms_radps", s.yawRateTrackingRms);
        doc.set(prefix + ".peak_sideslip_rad", s.peakSideslip);
        doc.set(prefix + ".intervention_count", static_cast<double>(s.interventionCount));
        doc.set(prefix + ".speed_loss_mps", s.speedLoss);
        doc.set(prefix + ".spin_out", std::string(s.spinOut ? "true" : "false"));
    };
    put("adaptive", c.adaptive.summary);
    put("fixed", c.fixed.summary);
    doc.set("delta.yaw_rate_tracking_rms_radps", c.deltas.yawRateTrackingRms);
    doc.set("delta.peak_sideslip_rad", c.deltas.peakSideslip);
    doc.set("delta.intervention_count", static_cast<double>(c.deltas.interventionCount));
    doc.set("delta.speed_loss_mps", c.deltas.speedLoss);
    doc.set("delta.adaptive_better_on_all", std::string(c.deltas.adaptive_better_on_all() ? "true" : "false"));
    doc.write(out);
}

void export_results(const ManeuverResult& result, const std::string& directory, const std::string& stem) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) {
        throw IoError("cannot create directory '" + directory + "': " + ec.message());
    }
    const std::string base = (std::filesystem::path(directory) / stem).string();
    {
        auto out = open_for_write(base + "_series.csv");
        write_series_csv(out, result.series);
        if (!out) throw IoError("write failed for '" + base + "_series.csv'");
    }
    {
        auto out = open_for_write(base + "_decisions.csv");
        write_decision_log(out, result.decisions);
        if (!out) throw IoError("write failed for '" + base + "_decisions.csv'");
    }
    {
        auto out = open_for_write(base + "_summary.txt");
        write_summary(out, result);
        if (!out) throw IoError("write failed for '" + base + "_summary.txt'");
    }
}

}  // namespace adaptire
