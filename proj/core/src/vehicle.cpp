#include "adaptire/vehicle.hpp"

#include <cmath>

#include "adaptire/error.hpp"
#include "adaptire/keyvalue.hpp"

namespace adaptire {
namespace {

struct ParamKey {
    const char* name;
    double VehicleParameters::*field;
};

constexpr ParamKey kParamKeys[] = {
    {"mass_kg", &VehicleParameters::mass},
    {"yaw_inertia_kgm2", &VehicleParameters::yawInertiaIz},
    {"lf_m", &VehicleParameters::lf},
    {"lr_m", &VehicleParameters::lr},
    {"track_width_m", &VehicleParameters::trackWidthTr},
    {"cog_height_m", &VehicleParameters::cogHeight},
    {"wheel_radius_m", &VehicleParameters::wheelRadiusRw},
    {"wheel_spin_inertia_kgm2", &VehicleParameters::wheelSpinInertia},
    {"steering_ratio", &VehicleParameters::steeringRatio},
    {"front_static_load_n", &VehicleParameters::frontStaticLoadWf},
    {"rear_static_load_n", &VehicleParameters::rearStaticLoadWr},
    {"front_roll_share", &VehicleParameters::frontRollShare},
    {"aero_drag_ns2pm2", &VehicleParameters::aeroDrag},
    {"rolling_resistance", &VehicleParameters::rollingResistance},
};

struct ThermalKey {
    const char* name;
    double ThermalParameters::*field;
};

constexpr ThermalKey kThermalKeys[] = {
    {"tire_heat_capacity_jpk", &ThermalParameters::heatCapacityW},
    {"tire_conductance_wpk", &ThermalParameters::thermalConductanceLambdaA},
    {"ambient_c", &ThermalParameters::ambientT0},
};

double sign_or_one(double v) { return v < 0.0 ? -1.0 : 1.0; }

}  // namespace

const char* to_string(Wheel w) {
    switch (w) {
        case Wheel::FrontLeft: return "front_left";
        case Wheel::FrontRight: return "front_right";
        case Wheel::RearLeft: return "rear_left";
        case Wheel::RearRight: return "rear_right";
    }
    return "?";
}

void VehicleParameters::finalize() {
    const double weight = mass * kGravity;
    if (frontStaticLoadWf == 0.0 && rearStaticLoadWr == 0.0 && wheelbase() > 0.0) {
        frontStaticLoadWf = weight * lr / wheelbase();
        rearStaticLoadWr = weight * lf / wheelbase();
    }
    validate();
}

void VehicleParameters::validate() const {
    const double positives[] = {mass,          yawInertiaIz,     lf,
                                lr,            trackWidthTr,     cogHeight,
                                wheelRadiusRw, wheelSpinInertia, steeringRatio,
                                frontStaticLoadWf, rearStaticLoadWr};
    for (double v : positives) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw InvalidInput("vehicle parameters must all be positive and finite");
        }
    }
    if (!(frontRollShare >= 0.0 && frontRollShare <= 1.0)) {
        throw InvalidInput("front_roll_share must lie in [0, 1]");
    }
    if (!(aeroDrag >= 0.0) || !(rollingResistance >= 0.0)) {
        throw InvalidInput("drag and rolling resistance must be non-negative");
    }
    const double weight = mass * kGravity;
    if (std::abs(frontStaticLoadWf + rearStaticLoadWr - weight) > 1e-6 * weight) {
        throw InvalidInput("static axle loads must sum to mass * g");
    }
    if (std::abs(frontStaticLoadWf * lf - rearStaticLoadWr * lr) > 1e-6 * weight * wheelbase()) {
        throw InvalidInput("static axle loads must balance about the centre of gravity (Wf lf = Wr lr)");
    }
    tireThermal.validate();
}

std::vector<std::string> vehicle_parameter_keys(const std::string& prefix) {
    std::vector<std::string> keys;
    for (const auto& k : kParamKeys) keys.push_back(prefix + k.name);
    for (const auto& k : kThermalKeys) keys.push_back(prefix + k.name);
    keys.push_back(prefix + "tire_heating");
    return keys;
}

VehicleParameters vehicle_parameters_from(const KeyValueDocument& doc, const std::string& prefix) {
    VehicleParameters p;
    for (const auto& k : kParamKeys) {
        p.*k.field = doc.number_or(prefix + k.name, p.*k.field);
    }
    for (const auto& k : kThermalKeys) {
        p.tireThermal.*k.field = doc.number_or(prefix + k.name, p.tireThermal.*k.field);
    }
    p.tireHeating = doc.boolean_or(prefix + "tire_heating", p.tireHeating);
    p.finalize();
    return p;
}

void vehicle_parameters_to(KeyValueDocument& doc, const VehicleParameters& params, const std::string& prefix) {
    for (const auto& k : kParamKeys) doc.set(prefix + k.name, params.*k.field);
    for (const auto& k : kThermalKeys) doc.set(prefix + k.name, params.tireThermal.*k.field);
    doc.set(prefix + "tire_heating", std::string(params.tireHeating ? "on" : "off"));
}

double PlantState::sideslip() const { return std::atan2(lateralVelocityV, longitudinalVelocityU); }

PlantState initial_state(const VehicleParameters& params, double u, const std::array<TireConditions, 4>& tires) {
    if (!(u > 0.0)) {
        throw InvalidInput("initial speed must be positive");
    }
    PlantState s;
    s.longitudinalVelocityU = u;
    s.tires = tires;
    const auto loads = wheel_loads(params, 0.0, 0.0);
    for (auto w : kWheels) {
        const auto i = index(w);
        s.wheelSpeeds[i] = u / params.wheelRadiusRw;
        s.tires[i].normalLoad = loads[i];
        s.wheels[i].normalLoad = loads[i];
        s.wheels[i].wheelVelocity = u;
    }
    return s;
}

std::array<double, 4> wheel_loads(const VehicleParameters& p, double ax, double ay) {
    const double longTransfer = p.mass * ax * p.cogHeight / p.wheelbase();  // front loses under acceleration
    const double latTransfer = p.mass * ay * p.cogHeight / p.trackWidthTr;  // left loses in a left turn
    const double front = 0.5 * (p.frontStaticLoadWf - longTransfer);
    const double rear = 0.5 * (p.rearStaticLoadWr + longTransfer);
    const double df = p.frontRollShare * latTransfer;
    const double dr = (1.0 - p.frontRollShare) * latTransfer;
    return {front - df, front + df, rear - dr, rear + dr};
}

PlantState plant_step(const VehicleParameters& p, const PlantState& s, const PlantInputs& in,
                      const AdaptedMfCoefficients& tireModel, double dt) {
    if (!(dt > 0.0 && dt <= 0.002)) {
        throw InvalidInput("plant step dt must lie in (0, 0.002] s");
    }
    const auto loads = wheel_loads(p, s.longitudinalAccel, s.lateralAccel);
    for (auto w : kWheels) {
        if (!(loads[index(w)] > 0.0)) {
            throw SimulationError("wheel lift at t=" + format_double(s.time) + " s: " + to_string(w) +
                                  " normal load " + format_double(loads[index(w)]) + " N");
        }
    }

    PlantState next = s;
    const double u = s.longitudinalVelocityU;
    const double v = s.lateralVelocityV;
    const double r = s.yawRateGamma;
    double sumFx = -p.aeroDrag * u * std::abs(u);
    double sumFy = 0.0;
    double sumMz = 0.0;

    for (auto w : kWheels) {
        const auto i = index(w);
        const double delta = is_front(w) ? in.roadWheelAngle : 0.0;
        const double cd = std::cos(delta), sd = std::sin(delta);
        const double vxb = u - r * p.wheel_y(w);
        const double vyb = v + r * p.wheel_x(w);
        const double vx = vxb * cd + vyb * sd;
        const double vy = -vxb * sd + vyb * cd;
        const double alpha = -std::atan2(vy, std::abs(vx));
        const double fz = loads[i];

        TireConditions cond = s.tires[i];
        cond.normalLoad = fz;
        const BaseMfCoefficients base = to_base_coefficients(tireModel, cond);
        const double peak = peak_friction(base, fz) * fz;
        const double fy0 = lateral_force(base, {alpha, fz});

        const double budget = std::sqrt(std::max(0.0, peak * peak - fy0 * fy0));
        const double tb = std::max(0.0, in.brakeTorque[i]);
        const double demand = tb / p.wheelRadiusRw + p.rollingResistance * fz;
        const double dir = sign_or_one(vx);
        const double rolling = vx / p.wheelRadiusRw;
        double omega = s.wheelSpeeds[i];
        double fxMag;
        const bool wasRolling = std::abs(s.wheels[i].longitudinalSlip) < 1e-9;
        if (demand <= budget && wasRolling) {
            fxMag = demand;
            omega = rolling;
        } else {
            // Sliding: the circle budget is delivered and the surplus torque spins the wheel down.
            fxMag = std::min(demand, budget);
            double spin = dir * omega + dt * (budget * p.wheelRadiusRw - tb) / p.wheelSpinInertia;
            spin = std::clamp(spin, 0.0, std::abs(rolling));
            omega = dir * spin;
            if (spin == std::abs(rolling) && demand <= budget) {
                fxMag = demand;
            }
        }
        const double fx = -dir * fxMag;
        const double fy = peak > 0.0 ? fy0 * std::sqrt(std::max(0.0, 1.0 - (fxMag / peak) * (fxMag / peak))) : 0.0;

        const double fxb = fx * cd - fy * sd;
        const double fyb = fx * sd + fy * cd;
        sumFx += fxb;
        sumFy += fyb;
        sumMz += p.wheel_x(w) * fyb - p.wheel_y(w) * fxb;

        next.wheelSpeeds[i] = omega;
        next.wheels[i] = {fz, alpha, fx, fy, peak,
                          (omega * p.wheelRadiusRw - vx) / std::max(std::abs(vx), 0.1), vx};
        next.tires[i].normalLoad = fz;
        if (p.tireHeating) {
            next.tires[i].surfaceTemperature =
                surface_temperature_step(s.tires[i].surfaceTemperature, p.tireThermal, fy, std::abs(vx), alpha, dt);
        }
    }

    const double ax = sumFx / p.mass;
    const double ay = sumFy / p.mass;
    const double yawAccel = sumMz / p.yawInertiaIz;
    next.longitudinalVelocityU = u + dt * (ax + v * r);
    next.lateralVelocityV = v + dt * (ay - u * r);
    next.yawRateGamma = r + dt * yawAccel;
    next.heading = s.heading + dt * r;
    next.positionX = s.positionX + dt * (u * std::cos(s.heading) - v * std::sin(s.heading));
    next.positionY = s.positionY + dt * (u * std::sin(s.heading) + v * std::cos(s.heading));
    next.longitudinalAccel = ax;
    next.lateralAccel = ay;
    next.yawAccel = yawAccel;
    next.time = s.time + dt;
    return next;
}

double understeer_gradient(const VehicleParameters& p, double cf, double cr) {
    if (!(cf > 0.0) || !(cr > 0.0)) {
        throw InvalidInput("axle cornering stiffnesses must be positive");
    }
    return p.frontStaticLoadWf / cf - p.rearStaticLoadWr / cr;
}

BicycleReference make_bicycle_reference(const VehicleParameters& p, double cf, double cr) {
    BicycleReference ref;
    ref.frontCorneringStiffnessCf = cf;
    ref.rearCorneringStiffnessCr = cr;
    ref.understeerKus = understeer_gradient(p, cf, cr);
    ref.characteristicSpeedUch =
        ref.understeerKus > 0.0 ? std::sqrt(p.wheelbase() * kGravity / ref.understeerKus) : 0.0;
    return ref;
}

BicycleReference reference_from_tire_model(const VehicleParameters& p, const AdaptedMfCoefficients& tireModel,
                                           const TireConditions& front, const TireConditions& rear) {
    TireConditions f = front, r = rear;
    f.normalLoad = 0.5 * p.frontStaticLoadWf;
    r.normalLoad = 0.5 * p.rearStaticLoadWr;
    return make_bicycle_reference(p, 2.0 * adapted_cornering_stiffness(tireModel, f),
                                  2.0 * adapted_cornering_stiffness(tireModel, r));
}

double reference_friction(const VehicleParameters& p, const AdaptedMfCoefficients& tireModel,
                          const TireConditions& front, const TireConditions& rear) {
    TireConditions f = front, r = rear;
    f.normalLoad = 0.5 * p.frontStaticLoadWf;
    r.normalLoad = 0.5 * p.rearStaticLoadWr;
    return std::min(adapted_peak_friction(tireModel, f), adapted_peak_friction(tireModel, r));
}

double desired_yaw_rate(const VehicleParameters& p, const BicycleReference& ref, double u, double delta,
                        double mu) {
    if (!(u > 0.0)) {
        throw InvalidInput("desired yaw rate needs positive speed");
    }
    if (delta == 0.0) {
        return 0.0;
    }
    const double cap = std::abs(mu) * kGravity / u;
    const double denom = p.wheelbase() + ref.understeerKus * u * u / kGravity;
    const double nominal = denom > 0.0 ? u * std::abs(delta) / denom : cap;
    return std::copysign(std::min(nominal, cap), delta);
}

AxleForces axle_forces_from_measurements(const VehicleParameters& p, double ay, double yawAccel, double delta,
                                         double externalYawMoment) {
    const double c = std::cos(delta);
    const double det = c * p.wheelbase();
    if (std::abs(det) < 1e-9) {
        throw InvalidInput("axle force inversion is singular (cos(delta) * wheelbase ~ 0)");
    }
    // m ay = c Fyf + Fyr ; Iz yawAccel - Mext = lf c Fyf - lr Fyr
    const double lateral = p.mass * ay;
    const double yaw = p.yawInertiaIz * yawAccel - externalYawMoment;
    return {(p.lr * lateral + yaw) / det, (p.lf * lateral - yaw) / p.wheelbase()};
}

BicycleDerivative bicycle_derivative(const VehicleParameters& p, double cf, double cr, double u,
                                     const BicycleState& st, double delta, double yawMoment) {
    const double af = delta - (st.v + p.lf * st.gamma) / u;
    const double ar = -(st.v - p.lr * st.gamma) / u;
    BicycleDerivative d;
    d.forces = {cf * af, cr * ar};
    d.ay = (d.forces.front * std::cos(delta) + d.forces.rear) / p.mass;
    d.vDot = d.ay - u * st.gamma;
    d.gammaDot = (p.lf * d.forces.front * std::cos(delta) - p.lr * d.forces.rear + yawMoment) / p.yawInertiaIz;
    return d;
}

StiffnessEstimate estimate_cornering_stiffness(const VehicleParameters& p, const std::vector<EstimatorSample>& h,
                                               double priorCf, double priorCr, const EstimatorOptions& opt) {
    if (!(priorCf > 0.0) || !(priorCr > 0.0)) {
        throw InvalidInput("estimator priors must be positive");
    }
    if (!(opt.forgetting > 0.0 && opt.forgetting <= 1.0) || !(opt.initialRelativeVariance > 0.0)) {
        throw InvalidInput("estimator forgetting must lie in (0, 1] and the prior variance must be positive");
    }
    for (std::size_t k = 1; k < h.size(); ++k) {
        if (!(h[k].time > h[k - 1].time)) {
            throw InvalidInput("estimator history must be strictly increasing in time");
        }
    }
    // Parameters are scaled by the prior so the covariance is dimensionless.
    double theta[2] = {1.0, 1.0};
    double P[2][2] = {{opt.initialRelativeVariance, 0.0}, {0.0, opt.initialRelativeVariance}};
    StiffnessEstimate est{priorCf, priorCr, P[0][0] + P[1][1], 0, {}, {}};

    auto update = [&](const double phi[2], double y, double lambda) {
        const double Pphi[2] = {P[0][0] * phi[0] + P[0][1] * phi[1], P[1][0] * phi[0] + P[1][1] * phi[1]};
        const double denom = lambda + phi[0] * Pphi[0] + phi[1] * Pphi[1];
        const double K[2] = {Pphi[0] / denom, Pphi[1] / denom};
        const double err = y - (phi[0] * theta[0] + phi[1] * theta[1]);
        theta[0] += K[0] * err;
        theta[1] += K[1] * err;
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                P[a][b] = (P[a][b] - K[a] * Pphi[b]) / lambda;
            }
        }
    };

    double v = 0.0;
    for (std::size_t k = 0; k + 1 < h.size(); ++k) {
        const auto& s = h[k];
        const double dt = h[k + 1].time - s.time;
        if (s.u > 1.0 && std::abs(s.roadWheelAngle) > opt.excitationThreshold) {
            const double yawAccel = (h[k + 1].gamma - s.gamma) / dt;
            const double c = std::cos(s.roadWheelAngle);
            const double af = s.roadWheelAngle - (v + p.lf * s.gamma) / s.u;
            const double ar = -(v - p.lr * s.gamma) / s.u;
            const double row1[2] = {priorCf * af * c / p.mass, priorCr * ar / p.mass};
            const double row2[2] = {p.lf * priorCf * af * c / p.yawInertiaIz, -p.lr * priorCr * ar / p.yawInertiaIz};
            update(row1, s.ay, opt.forgetting);
            update(row2, yawAccel, 1.0);
            ++est.updates;
            est.cfTrace.push_back(theta[0] * priorCf);
            est.crTrace.push_back(theta[1] * priorCr);
        }
        v += dt * (s.ay - s.u * s.gamma);
    }
    if (est.updates > 0) {
        est.cf = theta[0] * priorCf;
        est.cr = theta[1] * priorCr;
        est.covarianceTrace = P[0][0] + P[1][1];
    }
    return est;
}

}  // namespace adaptire
