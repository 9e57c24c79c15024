#include "adaptire/esc.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "adaptire/error.hpp"
#include "adaptire/keyvalue.hpp"

namespace adaptire {
namespace {

int sign(double v) { return (v > 0.0) - (v < 0.0); }

TireConditions axle_average(const TireConditions& a, const TireConditions& b) {
    return {0.5 * (a.pressure + b.pressure), 0.5 * (a.treadDepth + b.treadDepth),
            0.5 * (a.surfaceTemperature + b.surfaceTemperature), 0.5 * (a.normalLoad + b.normalLoad)};
}

}  // namespace

const char* to_string(BrakedWheel w) {
    switch (w) {
        case BrakedWheel::None: return "none";
        case BrakedWheel::FrontLeft: return "front_left";
        case BrakedWheel::FrontRight: return "front_right";
        case BrakedWheel::RearLeft: return "rear_left";
        case BrakedWheel::RearRight: return "rear_right";
    }
    return "?";
}

BrakedWheel braked_wheel_from_string(const std::string& text) {
    for (auto w : {BrakedWheel::None, BrakedWheel::FrontLeft, BrakedWheel::FrontRight, BrakedWheel::RearLeft,
                   BrakedWheel::RearRight}) {
        if (text == to_string(w)) {
            return w;
        }
    }
    throw InvalidInput("unknown wheel '" + text + "'");
}

Wheel plant_wheel(BrakedWheel w) {
    switch (w) {
        case BrakedWheel::FrontLeft: return Wheel::FrontRight;
        case BrakedWheel::FrontRight: return Wheel::FrontLeft;
        case BrakedWheel::RearLeft: return Wheel::RearRight;
        case BrakedWheel::RearRight: return Wheel::RearLeft;
        case BrakedWheel::None: break;
    }
    throw InvalidInput("no plant wheel for 'none'");
}

void EscConfig::validate() const {
    if (!(slidingGainEta > 0.0) || !(deadBand >= 0.0) || !(maxBrakeTorque > 0.0) ||
        !(slipTargetLongitudinal > 0.0) || !(yawRateFilterTau >= 0.0) || !std::isfinite(slidingGainEta) ||
        !std::isfinite(maxBrakeTorque)) {
        throw InvalidInput("esc config needs eta > 0, dead_band >= 0, max_brake_torque > 0, slip_target > 0");
    }
}

std::vector<std::string> esc_config_keys(const std::string& prefix) {
    return {prefix + "sliding_gain_eta", prefix + "dead_band_radps",    prefix + "max_brake_torque_nm",
            prefix + "adaptive_reference", prefix + "adaptive_friction_cap", prefix + "slip_target",
            prefix + "yaw_rate_filter_tau_s"};
}

EscConfig esc_config_from(const KeyValueDocument& doc, const std::string& prefix) {
    EscConfig c;
    c.slidingGainEta = doc.number_or(prefix + "sliding_gain_eta", c.slidingGainEta);
    c.deadBand = doc.number_or(prefix + "dead_band_radps", c.deadBand);
    c.maxBrakeTorque = doc.number_or(prefix + "max_brake_torque_nm", c.maxBrakeTorque);
    c.adaptiveReference = doc.boolean_or(prefix + "adaptive_reference", c.adaptiveReference);
    c.adaptiveFrictionCap = doc.boolean_or(prefix + "adaptive_friction_cap", c.adaptiveFrictionCap);
    c.slipTargetLongitudinal = doc.number_or(prefix + "slip_target", c.slipTargetLongitudinal);
    c.yawRateFilterTau = doc.number_or(prefix + "yaw_rate_filter_tau_s", c.yawRateFilterTau);
    c.validate();
    return c;
}

void esc_config_to(KeyValueDocument& doc, const EscConfig& c, const std::string& prefix) {
    doc.set(prefix + "sliding_gain_eta", c.slidingGainEta);
    doc.set(prefix + "dead_band_radps", c.deadBand);
    doc.set(prefix + "max_brake_torque_nm", c.maxBrakeTorque);
    doc.set(prefix + "adaptive_reference", std::string(c.adaptiveReference ? "on" : "off"));
    doc.set(prefix + "adaptive_friction_cap", std::string(c.adaptiveFrictionCap ? "on" : "off"));
    doc.set(prefix + "slip_target", c.slipTargetLongitudinal);
    doc.set(prefix + "yaw_rate_filter_tau_s", c.yawRateFilterTau);
}

double sliding_surface(double gamma, double gammaDes) { return gamma - gammaDes; }

double desired_yaw_moment(const VehicleParameters& p, double fyf, double fyr, double s, double gammaDesRate,
                          double delta, const EscConfig& config) {
    return p.yawInertiaIz * (gammaDesRate - config.slidingGainEta * s) - p.lf * fyf * std::cos(delta) +
           p.lr * fyr;
}

BrakedWheel select_braked_wheel(double gammaDes, double s, double mz) {
    const int g = sign(gammaDes), e = sign(s), m = sign(mz);
    if (g == 0 || e == 0 || m == 0) {
        return BrakedWheel::None;
    }
    if (g > 0) {
        if (e > 0) return m > 0 ? BrakedWheel::None : BrakedWheel::FrontLeft;
        return m > 0 ? BrakedWheel::RearRight : BrakedWheel::None;
    }
    if (e > 0) return m > 0 ? BrakedWheel::None : BrakedWheel::RearLeft;
    return m > 0 ? BrakedWheel::FrontRight : BrakedWheel::None;
}

double brake_torque(double mz, const VehicleParameters& p, const EscConfig& config) {
    return std::min(std::abs(mz) * p.wheelRadiusRw / (0.5 * p.trackWidthTr), config.maxBrakeTorque);
}

double limit_slip(double requestedTb, const WheelSlipState& w, const VehicleParameters& p, const EscConfig& config) {
    const double budget = std::sqrt(std::max(0.0, w.peakForce * w.peakForce - w.lateralForce * w.lateralForce));
    double tb = std::clamp(requestedTb, 0.0, budget * p.wheelRadiusRw);
    const double slip = std::abs(w.longitudinalSlip);
    if (slip > config.slipTargetLongitudinal) {
        tb *= config.slipTargetLongitudinal / slip;
    }
    return tb;
}

EscMeasurements measure(const PlantState& s, double roadWheelAngle) {
    EscMeasurements m;
    m.time = s.time;
    m.u = s.longitudinalVelocityU;
    m.gamma = s.yawRateGamma;
    m.yawAccel = s.yawAccel;
    m.ay = s.lateralAccel;
    m.roadWheelAngle = roadWheelAngle;
    m.tires = s.tires;
    m.wheels = s.wheels;
    return m;
}

EscReference esc_reference(const VehicleParameters& p, const AdaptedMfCoefficients& tireModel,
                           const EscConfig& config, const EscMeasurements& m) {
    EscReference r;
    const TireConditions sensedFront = axle_average(m.tires[index(Wheel::FrontLeft)], m.tires[index(Wheel::FrontRight)]);
    const TireConditions sensedRear = axle_average(m.tires[index(Wheel::RearLeft)], m.tires[index(Wheel::RearRight)]);
    r.front = config.adaptiveReference ? sensedFront : tireModel.reference;
    r.rear = config.adaptiveReference ? sensedRear : tireModel.reference;
    r.bicycle = reference_from_tire_model(p, tireModel, r.front, r.rear);
    r.mu = config.adaptiveFrictionCap && config.adaptiveReference
               ? reference_friction(p, tireModel, r.front, r.rear)
               : reference_friction(p, tireModel, tireModel.reference, tireModel.reference);
    return r;
}

EscDecision esc_step(const VehicleParameters& p, const AdaptedMfCoefficients& tireModel, const EscConfig& config,
                     EscState& state, const EscMeasurements& m) {
    const EscReference ref = esc_reference(p, tireModel, config, m);
    EscDecision d;
    d.time = m.time;
    d.gamma = m.gamma;
    d.gammaDes = desired_yaw_rate(p, ref.bicycle, m.u, m.roadWheelAngle, ref.mu);

    if (!state.initialized) {
        state.initialized = true;
        state.gammaDesRate = 0.0;
    } else {
        const double dt = m.time - state.previousTime;
        if (!(dt > 0.0)) {
            throw InvalidInput("esc measurements must advance in time");
        }
        const double raw = (d.gammaDes - state.previousGammaDes) / dt;
        state.gammaDesRate += dt / (config.yawRateFilterTau + dt) * (raw - state.gammaDesRate);
    }
    state.previousTime = m.time;
    state.previousGammaDes = d.gammaDes;

    d.sliding = sliding_surface(m.gamma, d.gammaDes);
    if (std::abs(d.sliding) <= config.deadBand) {
        state.appliedYawMoment = 0.0;
        return d;
    }
    const AxleForces axle =
        axle_forces_from_measurements(p, m.ay, m.yawAccel, m.roadWheelAngle, state.appliedYawMoment);
    d.desiredYawMomentMz =
        desired_yaw_moment(p, axle.front, axle.rear, d.sliding, state.gammaDesRate, m.roadWheelAngle, config);
    d.brakedWheel = select_braked_wheel(d.gammaDes, d.sliding, d.desiredYawMomentMz);
    if (d.brakedWheel != BrakedWheel::None) {
        const Wheel w = plant_wheel(d.brakedWheel);
        const auto& wheel = m.wheels[index(w)];
        TireConditions cond = is_front(w) ? ref.front : ref.rear;
        cond.normalLoad = wheel.normalLoad;
        const double peak = wheel.normalLoad > 0.0 ? adapted_peak_friction(tireModel, cond) * wheel.normalLoad : 0.0;
        d.brakeTorqueTb = limit_slip(brake_torque(d.desiredYawMomentMz, p, config),
                                     {wheel.longitudinalSlip, peak, wheel.lateralForce}, p, config);
        if (!(d.brakeTorqueTb > 0.0)) {
            d.brakeTorqueTb = 0.0;
            d.brakedWheel = BrakedWheel::None;
        }
    }
    d.intervention = d.brakedWheel != BrakedWheel::None;
    state.appliedYawMoment = d.intervention ? p.wheel_y(plant_wheel(d.brakedWheel)) * d.brakeTorqueTb / p.wheelRadiusRw
                                            : 0.0;
    return d;
}

void write_decision_log(std::ostream& out, const std::vector<EscDecision>& log) {
    out << kDecisionCsvHeader << '\n';
    for (const auto& d : log) {
        out << format_double(d.time) << ',' << format_double(d.gamma) << ',' << format_double(d.gammaDes) << ','
            << format_double(d.sliding) << ',' << format_double(d.desiredYawMomentMz) << ','
            << to_string(d.brakedWheel) << ',' << format_double(d.brakeTorqueTb) << ',' << (d.intervention ? 1 : 0)
            << '\n';
    }
}

std::vector<EscDecision> read_decision_log(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kDecisionCsvHeader) {
        throw InvalidInput(std::string("decision log: expected header '") + kDecisionCsvHeader + "'");
    }
    std::vector<EscDecision> log;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 8) {
            throw InvalidInput("decision log: expected 8 fields in '" + line + "'");
        }
        EscDecision d;
        d.time = parse_double(f[0]);
        d.gamma = parse_double(f[1]);
        d.gammaDes = parse_double(f[2]);
        d.sliding = parse_double(f[3]);
        d.desiredYawMomentMz = parse_double(f[4]);
        d.brakedWheel = braked_wheel_from_string(f[5]);
        d.brakeTorqueTb = parse_double(f[6]);
        d.intervention = f[7] == "1";
        log.push_back(d);
    }
    return log;
}

}  // namespace adaptire
