#include "adaptire/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "adaptire/error.hpp"

namespace adaptire {

namespace {

constexpr double kNominalLoad = 4000.0;
constexpr double kAmplitude = 60000.0;  // a3 at reference conditions [N/rad]
constexpr double kLoadAtPeak = 5000.0;  // a4 at reference conditions [N]
constexpr double kGripLoad = -2.5e-5;   // [1/N]
constexpr double kGripLevel = 1.20;

double load_shape(double fz, double a4) { return std::sin(2.0 * std::atan(fz / a4)); }

/// Factored form: amplitude = A0 * P(x) * G(y), load = L0 * (1 + q1 x), temp = 1 + c1 z + c2 z^2.
struct Factors {
    double a0 = kAmplitude;
    double l0 = kLoadAtPeak;
    double p1 = 0.0, p2 = -0.5;
    double q1 = 1.0;
    double t1 = 0.0, t2 = 0.25;
    double c1 = 0.0, c2 = -0.10;
    double gripLoad = kGripLoad;
    double gripLevel = kGripLevel;
    double gripTread = 0.0;
    double g1 = 0.0, g2 = -0.05;
};

// Solves c1 so that (1 + c1 zh + c2 zh^2) = ratio * (1 + c1 zc + c2 zc^2).
double solve_linear_term(double zc, double zh, double c2, double ratio) {
    return (ratio * (1.0 + c2 * zc * zc) - 1.0 - c2 * zh * zh) / (zh - ratio * zc);
}

Factors calibrate(const SensitivityTargets& t, const TireConditions& ref, double span) {
    Factors f;
    const double x = t.pressureStep;
    const double fzHigh = t.highLoadFactor * ref.normalLoad;
    const double loadRatio = 1.0 + f.q1 * x;
    const double ampRatio =
        (1.0 + t.stiffnessGainHighLoad) * load_shape(fzHigh, f.l0) / load_shape(fzHigh, f.l0 * loadRatio);
    f.p1 = (ampRatio - 1.0 - f.p2 * x * x) / x;

    const double y = t.treadStep;
    f.t1 = (t.stiffnessGainWorn - f.t2 * y * y) / y;

    const double zc = (t.coldTemperature - ref.surfaceTemperature) / span;
    const double zh = (t.hotTemperature - ref.surfaceTemperature) / span;
    f.c1 = solve_linear_term(zc, zh, f.c2, 1.0 - t.stiffnessDropHot);
    f.g1 = solve_linear_term(zc, zh, f.g2, 1.0 - t.gripDropHot);

    const double muRef = f.gripLoad * ref.normalLoad + f.gripLevel;
    f.gripTread = t.gripGainWorn * muRef / y;
    return f;
}

AdaptedMfCoefficients expand(const Factors& f, const TireConditions& ref, double span) {
    AdaptedMfCoefficients tree;
    const Quadratic tread{f.t2, f.t1, 1.0};
    const double px[3] = {f.p2, f.p1, 1.0};
    for (int i = 0; i < 3; ++i) {
        const double s = f.a0 * px[i];
        tree.amplitude[i] = {s * tread.c2, s * tread.c1, s * tread.c0};
    }
    tree.loadTerm = {Quadratic{0.0, 0.0, f.l0 * f.q1}, Quadratic{0.0, 0.0, f.l0}};
    tree.stiffnessTemp = {f.c2, f.c1, 1.0};
    tree.gripLoad = {0.0, 0.0, f.gripLoad};
    tree.gripLevel = {f.gripTread, f.gripLevel};
    tree.gripTemp = {f.g2, f.g1, 1.0};
    tree.shapeC = 1.30;
    tree.curvatureE = -1.0;
    tree.offsetSv = 0.0;
    tree.reference = ref;
    tree.temperatureSpan = span;
    return tree;
}

TireConditions default_reference() { return {250.0, 8.0, 25.0, kNominalLoad}; }

bool grip_valid(const AdaptedMfCoefficients& tree) {
    // a1 stays non-positive and mu stays positive up to twice the nominal load over the tread box.
    for (int j = 0; j <= 24; ++j) {
        const double d = ConditionBox::minTread + (ConditionBox::maxTread - ConditionBox::minTread) * j / 24.0;
        const double y = (d - tree.reference.treadDepth) / tree.reference.treadDepth;
        if (tree.gripLoad(y) > 0.0) {
            return false;
        }
        if (!(tree.gripLoad(y) * 2.0 * tree.reference.normalLoad + tree.gripLevel(y) > 0.2)) {
            return false;
        }
    }
    return true;
}

}  // namespace

AdaptedMfCoefficients calibrated_ground_truth(const SensitivityTargets& targets) {
    const auto ref = default_reference();
    constexpr double span = 100.0;
    return expand(calibrate(targets, ref, span), ref, span);
}

AdaptedMfCoefficients random_ground_truth(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto ref = default_reference();
    constexpr double span = 100.0;
    const Factors base = calibrate(SensitivityTargets{}, ref, span);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Factors f = base;
        f.a0 *= 1.0 + 0.15 * u(rng);
        f.l0 *= 1.0 + 0.15 * u(rng);
        f.p1 *= 1.0 + 0.3 * u(rng);
        f.p2 *= 1.0 + 0.3 * u(rng);
        f.q1 *= 1.0 + 0.3 * u(rng);
        f.t1 *= 1.0 + 0.3 * u(rng);
        f.t2 *= 1.0 + 0.3 * u(rng);
        f.c1 *= 1.0 + 0.3 * u(rng);
        f.c2 *= 1.0 + 0.3 * u(rng);
        f.gripLoad *= 1.0 + 0.2 * u(rng);
        f.gripLevel *= 1.0 + 0.1 * u(rng);
        f.gripTread *= 1.0 + 0.3 * u(rng);
        f.g1 *= 1.0 + 0.3 * u(rng);
        f.g2 *= 1.0 + 0.3 * u(rng);
        auto tree = expand(f, ref, span);
        // Break the factored structure so every coefficient of the tree is exercised.
        for (auto& q : tree.amplitude) {
            q.c2 += 0.03 * f.a0 * u(rng);
            q.c1 += 0.03 * f.a0 * u(rng);
            q.c0 += 0.03 * f.a0 * u(rng);
        }
        tree.loadTerm[0].c2 += 0.05 * f.l0 * u(rng);
        tree.loadTerm[0].c1 += 0.10 * f.l0 * u(rng);
        tree.loadTerm[1].c2 += 0.05 * f.l0 * u(rng);
        tree.loadTerm[1].c1 += 0.10 * f.l0 * u(rng);
        tree.stiffnessTemp.c0 = 1.0 + 0.1 * u(rng);
        tree.gripLoad.c2 = 0.3e-5 * u(rng);
        tree.gripLoad.c1 = 0.5e-5 * u(rng);
        tree.gripTemp.c0 = 1.0 + 0.05 * u(rng);
        tree.shapeC = 1.3 + 0.15 * u(rng);
        tree.curvatureE = -1.0 + 0.5 * u(rng);
        try {
            validate_over_box(tree);
        } catch (const CoefficientError&) {
            continue;
        }
        if (grip_valid(tree)) {
            return tree;
        }
    }
    throw CoefficientError("random_ground_truth: no valid tree after 1000 draws");
}

std::vector<SweepObservation> synthesize_sweep_data(const GeneratorSettings& settings, std::uint64_t seed) {
    if (settings.slipCount < 2 || !(settings.slipMaxDeg > settings.slipMinDeg)) {
        throw InvalidInput("generator needs at least two slip angles over a non-empty range");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<SweepObservation> out;
    out.reserve(settings.pressures.size() * settings.treadDepths.size() * settings.temperatures.size() *
                settings.loads.size() * static_cast<std::size_t>(settings.slipCount));
    for (const double p : settings.pressures) {
        for (const double d : settings.treadDepths) {
            for (const double temp : settings.temperatures) {
                const auto base = to_base_coefficients(settings.truth, {p, d, temp, 1.0});
                for (const double fz : settings.loads) {
                    for (int k = 0; k < settings.slipCount; ++k) {
                        const double deg = settings.slipMinDeg + (settings.slipMaxDeg - settings.slipMinDeg) * k /
                                                                     (settings.slipCount - 1);
                        SweepObservation obs{deg * std::numbers::pi / 180.0, fz, p, d, temp, 0.0};
                        double fy = lateral_force(base, {obs.slipAngle, fz});
                        if (settings.noiseFraction > 0.0) {
                            const double sigma = settings.noiseFraction * std::abs(fy) + settings.noiseFloor;
                            fy += sigma * gauss(rng);
                        }
                        obs.lateralForce = fy;
                        out.push_back(obs);
                    }
                }
            }
        }
    }
    return out;
}

SensitivityReport measure_sensitivities(const AdaptedMfCoefficients& tree, const SensitivityTargets& t) {
    const auto ref = tree.reference;
    auto cs = [&](double p, double d, double temp, double fz) {
        return adapted_cornering_stiffness(tree, {p, d, temp, fz});
    };
    auto mu = [&](double d, double temp) {
        return adapted_peak_friction(tree, {ref.pressure, d, temp, ref.normalLoad});
    };
    const double pUp = ref.pressure * (1.0 + t.pressureStep);
    const double dWorn = ref.treadDepth * (1.0 + t.treadStep);
    const double hi = t.highLoadFactor * ref.normalLoad;
    const double lo = t.lowLoadFactor * ref.normalLoad;
    const double td = ref.treadDepth;
    const double tc = t.coldTemperature;
    const double th = t.hotTemperature;
    SensitivityReport r;
    r.stiffnessPressureHighLoad = cs(pUp, td, tc, hi) / cs(ref.pressure, td, tc, hi) - 1.0;
    r.stiffnessPressureLowLoad = cs(pUp, td, tc, lo) / cs(ref.pressure, td, tc, lo) - 1.0;
    r.stiffnessWorn = cs(ref.pressure, dWorn, tc, ref.normalLoad) / cs(ref.pressure, td, tc, ref.normalLoad) - 1.0;
    r.stiffnessHot = cs(ref.pressure, td, th, ref.normalLoad) / cs(ref.pressure, td, tc, ref.normalLoad) - 1.0;
    r.gripWorn = mu(dWorn, tc) / mu(td, tc) - 1.0;
    r.gripHot = mu(td, th) / mu(td, tc) - 1.0;
    return r;
}

}  // namespace adaptire
