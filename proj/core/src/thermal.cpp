#include "adaptire/thermal.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>

#include "adaptire/error.hpp"
#include "adaptire/keyvalue.hpp"

namespace adaptire {

void ThermalParameters::validate() const {
    if (!(heatCapacityW > 0.0) || !(thermalConductanceLambdaA > 0.0) || !std::isfinite(heatCapacityW) ||
        !std::isfinite(thermalConductanceLambdaA)) {
        throw InvalidInput("thermal heat capacity and conductance must be positive and finite");
    }
    if (!std::isfinite(ambientT0)) {
        throw InvalidInput("ambient temperature must be finite");
    }
}

SlipVelocities slip_velocities(const SlipKinematics& k) {
    if (!(k.forwardVelocityVx >= 0.0) || !(k.effectiveRadiusR > 0.0)) {
        throw InvalidInput("slip kinematics need Vx >= 0 and a positive effective radius");
    }
    if (!(std::abs(k.slipAngle) < std::numbers::pi / 2.0)) {
        throw InvalidInput("|slip angle| must be below pi/2");
    }
    return {k.forwardVelocityVx - k.effectiveRadiusR * k.wheelSpeedOmega,
            k.forwardVelocityVx * std::tan(k.slipAngle), k.normalLoadFz * k.longAccelAx / kGravity,
            k.normalLoadFz * k.latAccelAy / kGravity};
}

double frictional_energy(double vsx, double vsy, double fsx, double fsy) {
    return std::abs(fsx * vsx) + std::abs(fsy * vsy);
}

double surface_temperature_step(double temperature, const ThermalParameters& params, double lateralForce,
                                double velocity, double slipAngle, double dt) {
    const double stable = params.heatCapacityW / params.thermalConductanceLambdaA;
    if (!(dt > 0.0) || dt > stable) {
        throw InvalidInput("thermal step dt must lie in (0, W/lambdaA] = (0, " + std::to_string(stable) + "] s");
    }
    const double heat = std::abs(lateralForce * velocity * slipAngle);
    const double loss = params.thermalConductanceLambdaA * (temperature - params.ambientT0);
    return temperature + dt * (heat - loss) / params.heatCapacityW;
}

double equilibrium_temperature(const ThermalParameters& params, double lateralForce, double velocity,
                               double slipAngle) {
    return params.ambientT0 + std::abs(lateralForce * velocity * slipAngle) / params.thermalConductanceLambdaA;
}

ThermalTrace generate_thermal_trace(const TraceSettings& s, std::uint64_t seed) {
    s.thermal.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    ThermalParameters thermal = s.thermal;
    thermal.ambientT0 = 15.0 + 20.0 * u(rng);

    // Piecewise driving profile: each segment holds a speed target and a sinusoidal slip demand.
    struct Segment {
        double end, speed, slipAmp, slipFreq;
    };
    std::vector<Segment> segments;
    for (double t = 0.0; t < s.duration;) {
        const double len = 8.0 + 17.0 * u(rng);
        segments.push_back({t + len, 10.0 + 30.0 * u(rng), 0.07 * u(rng), 0.1 + 0.4 * u(rng)});
        t += len;
    }

    double surface = thermal.ambientT0 + 10.0 * u(rng);
    double liner = thermal.ambientT0 + 0.5 * (surface - thermal.ambientT0);
    double speed = segments.front().speed;
    std::size_t seg = 0;

    ThermalTrace trace;
    const auto steps = static_cast<long>(std::llround(s.duration / s.integrationStep));
    const auto sampleEvery = std::max<long>(1, std::llround(s.sampleInterval / s.integrationStep));
    for (long i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) * s.integrationStep;
        while (seg + 1 < segments.size() && t >= segments[seg].end) {
            ++seg;
        }
        const auto& sg = segments[seg];
        speed += (sg.speed - speed) * s.integrationStep / 3.0;
        const double alpha = sg.slipAmp * std::sin(2.0 * std::numbers::pi * sg.slipFreq * t);
        const double fy = std::clamp(s.corneringStiffness * alpha, -s.peakLateralForce, s.peakLateralForce);
        const double energy = frictional_energy(0.0, speed * std::tan(alpha), 0.0, fy);
        if (i % sampleEvery == 0) {
            trace.push_back({t, liner, thermal.ambientT0, energy, speed, surface});
        }
        const double next = surface_temperature_step(surface, thermal, fy, speed, alpha, s.integrationStep);
        liner += s.integrationStep * (surface - liner) / s.linerTimeConstant;
        surface = next;
    }
    return trace;
}

void write_thermal_csv(std::ostream& out, const std::vector<ThermalTrace>& traces) {
    out << kThermalCsvHeader << '\n';
    for (const auto& trace : traces) {
        for (const auto& r : trace) {
            out << format_double(r.time) << ',' << format_double(r.innerLiner) << ',' << format_double(r.ambient)
                << ',' << format_double(r.frictionEnergy) << ',' << format_double(r.velocity) << ','
                << format_double(r.surfaceTemperature) << '\n';
        }
    }
}

std::vector<ThermalTrace> read_thermal_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kThermalCsvHeader) {
        throw InvalidInput(std::string("thermal csv: expected header '") + kThermalCsvHeader + "'");
    }
    std::vector<ThermalTrace> traces;
    int lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty()) {
            continue;
        }
        double v[6];
        std::size_t start = 0;
        for (int k = 0; k < 6; ++k) {
            const auto comma = line.find(',', start);
            if ((k < 5) == (comma == std::string::npos)) {
                throw InvalidInput("thermal csv line " + std::to_string(lineNo) + ": expected 6 fields");
            }
            v[k] = parse_double(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            start = comma + 1;
        }
        const ThermalSample sample{v[0], v[1], v[2], v[3], v[4], v[5]};
        if (traces.empty() || !(sample.time > traces.back().back().time)) {
            traces.emplace_back();
        }
        traces.back().push_back(sample);
    }
    return traces;
}

}  // namespace adaptire
