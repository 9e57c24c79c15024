#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "adaptire/error.hpp"
#include "adaptire/mf_adapt.hpp"
#include "adaptire/synth.hpp"

using namespace adaptire;

namespace {

// Direct expansion of the nested polynomials with the raw coefficient names.
double expanded_stiffness(const AdaptedMfCoefficients& t, const TireConditions& c) {
    const double x = (c.pressure - t.reference.pressure) / t.reference.pressure;
    const double y = (c.treadDepth - t.reference.treadDepth) / t.reference.treadDepth;
    const double z = (c.surfaceTemperature - t.reference.surfaceTemperature) / t.temperatureSpan;
    const double a311 = t.amplitude[0].c2, a312 = t.amplitude[0].c1, a313 = t.amplitude[0].c0;
    const double a321 = t.amplitude[1].c2, a322 = t.amplitude[1].c1, a323 = t.amplitude[1].c0;
    const double a331 = t.amplitude[2].c2, a332 = t.amplitude[2].c1, a333 = t.amplitude[2].c0;
    const double a411 = t.loadTerm[0].c2, a412 = t.loadTerm[0].c1, a413 = t.loadTerm[0].c0;
    const double a421 = t.loadTerm[1].c2, a422 = t.loadTerm[1].c1, a423 = t.loadTerm[1].c0;
    const double b11 = t.stiffnessTemp.c2, b12 = t.stiffnessTemp.c1, b13 = t.stiffnessTemp.c0;
    const double amp = (a311 * y * y + a312 * y + a313) * x * x + (a321 * y * y + a322 * y + a323) * x +
                       (a331 * y * y + a332 * y + a333);
    const double load = (a411 * y * y + a412 * y + a413) * x + (a421 * y * y + a422 * y + a423);
    const double temp = b11 * z * z + b12 * z + b13;
    return amp * std::sin(2.0 * std::atan(c.normalLoad / load)) * temp;
}

double expanded_grip(const AdaptedMfCoefficients& t, const TireConditions& c) {
    const double y = (c.treadDepth - t.reference.treadDepth) / t.reference.treadDepth;
    const double z = (c.surfaceTemperature - t.reference.surfaceTemperature) / t.temperatureSpan;
    const double a11 = t.gripLoad.c2, a12 = t.gripLoad.c1, a13 = t.gripLoad.c0;
    const double a21 = t.gripLevel.c1, a22 = t.gripLevel.c0;
    const double b11 = t.gripTemp.c2, b12 = t.gripTemp.c1, b13 = t.gripTemp.c0;
    return ((a11 * y * y + a12 * y + a13) * c.normalLoad + (a21 * y + a22)) * (b11 * z * z + b12 * z + b13);
}

TireConditions random_conditions(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> p(150.0, 400.0), d(1.0, 11.0), t(0.0, 120.0), fz(500.0, 9000.0);
    return {p(rng), d(rng), t(rng), fz(rng)};
}

}  // namespace

TEST_CASE("identity tree reduces to the baseline model") {
    BaseMfCoefficients base;
    const TireConditions ref{250.0, 8.0, 25.0, 4000.0};
    const auto tree = identity_tree(base, ref);
    CHECK(adapted_cornering_stiffness(tree, ref) == 60000.0);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto c = random_conditions(rng);
        CHECK(adapted_cornering_stiffness(tree, c) == doctest::Approx(cornering_stiffness(base, c.normalLoad)));
        CHECK(adapted_peak_friction(tree, c) == doctest::Approx(peak_friction(base, c.normalLoad)));
    }
}

TEST_CASE("evaluation matches the expanded polynomials") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto tree = random_ground_truth(seed);
        std::mt19937_64 rng(seed);
        for (int i = 0; i < 40; ++i) {
            const auto c = random_conditions(rng);
            CHECK(adapted_cornering_stiffness(tree, c) == doctest::Approx(expanded_stiffness(tree, c)).epsilon(1e-12));
            CHECK(adapted_peak_friction(tree, c) == doctest::Approx(expanded_grip(tree, c)).epsilon(1e-12));
        }
    }
}

TEST_CASE("calibrated tree sensitivities") {
    const auto tree = calibrated_ground_truth();
    const auto& ref = tree.reference;
    const double hi = 1.5 * ref.normalLoad;
    auto cs = [&](double p, double d, double t, double fz) { return adapted_cornering_stiffness(tree, {p, d, t, fz}); };
    auto mu = [&](double d, double t) { return adapted_peak_friction(tree, {ref.pressure, d, t, ref.normalLoad}); };

    CHECK(cs(ref.pressure * 1.2, 8.0, 25.0, hi) / cs(ref.pressure, 8.0, 25.0, hi) == doctest::Approx(1.10).epsilon(0.01));
    CHECK(cs(ref.pressure, 3.2, 25.0, 4000.0) / cs(ref.pressure, 8.0, 25.0, 4000.0) ==
          doctest::Approx(1.30).epsilon(0.01));
    const double hot = cs(ref.pressure, 8.0, 90.0, 4000.0) / cs(ref.pressure, 8.0, 25.0, 4000.0) - 1.0;
    CHECK(hot <= -0.20);
    CHECK(hot >= -0.25);
    CHECK(mu(3.2, 25.0) / mu(8.0, 25.0) == doctest::Approx(1.10).epsilon(0.01));
    CHECK(mu(8.0, 90.0) / mu(8.0, 25.0) == doctest::Approx(0.90).epsilon(0.01));

    // cross-over: more pressure softens at light load, stiffens at heavy load
    const double lo = 0.33 * ref.normalLoad;
    CHECK(cs(ref.pressure * 1.05, 8.0, 25.0, lo) < cs(ref.pressure, 8.0, 25.0, lo));
    CHECK(cs(ref.pressure * 1.05, 8.0, 25.0, hi) > cs(ref.pressure, 8.0, 25.0, hi));

    // temperature polynomial positive and decreasing over 25..90 degC
    double previous = cs(ref.pressure, 8.0, 25.0, 4000.0);
    for (double t = 26.0; t <= 90.0; t += 1.0) {
        const double now = cs(ref.pressure, 8.0, t, 4000.0);
        CHECK(now < previous);
        previous = now;
    }
    CHECK_NOTHROW(validate_over_box(tree));
}

TEST_CASE("load shape peaks at the load term") {
    const auto tree = calibrated_ground_truth();
    TireConditions c{280.0, 6.0, 40.0, 1.0};
    const double peakLoad = stiffness_load_term(tree, normalize(tree, c));
    c.normalLoad = peakLoad;
    const double atPeak = adapted_cornering_stiffness(tree, c);
    for (double f : {0.5, 0.9, 0.99, 1.01, 1.1, 2.0}) {
        c.normalLoad = peakLoad * f;
        CHECK(adapted_cornering_stiffness(tree, c) < atPeak);
    }
}

TEST_CASE("to_base_coefficients reproduces adapted values") {
    const auto tree = calibrated_ground_truth();
    const auto atRef = to_base_coefficients(tree, tree.reference);
    CHECK(cornering_stiffness(atRef, tree.reference.normalLoad) == adapted_cornering_stiffness(tree, tree.reference));

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> fz(200.0, 9000.0);
    for (int k = 0; k < 20; ++k) {
        auto c = random_conditions(rng);
        const auto base = to_base_coefficients(tree, c);
        CHECK_NOTHROW(base.validate());
        for (int i = 0; i < 20; ++i) {
            c.normalLoad = fz(rng);
            const double a = cornering_stiffness(base, c.normalLoad);
            const double b = adapted_cornering_stiffness(tree, c);
            CHECK(std::abs(a - b) <= 1e-12 * std::abs(b));
            const double ma = peak_friction(base, c.normalLoad);
            const double mb = adapted_peak_friction(tree, c);
            CHECK(std::abs(ma - mb) <= 1e-12 * std::abs(mb));
            for (double alpha : {-0.3, -0.05, 0.02, 0.2, 1.0}) {
                const double fy = lateral_force(base, {alpha, c.normalLoad});
                CHECK(fy == -lateral_force(base, {-alpha, c.normalLoad}));
                CHECK(std::abs(fy) <= ma * c.normalLoad);
            }
        }
    }
}

TEST_CASE("identity tree returns the reference baseline exactly") {
    BaseMfCoefficients base;
    base.a1 = -3e-5;
    base.a2 = 1.2;
    base.a3 = 55000.0;
    base.a4 = 4200.0;
    const auto tree = identity_tree(base, TireConditions{});
    const auto out = to_base_coefficients(tree, tree.reference);
    CHECK(out.a1 == base.a1);
    CHECK(out.a2 == base.a2);
    CHECK(out.a3 == base.a3);
    CHECK(out.a4 == base.a4);
}

TEST_CASE("out-of-box conditions clamp") {
    const auto tree = calibrated_ground_truth();
    TireConditions c{600.0, 15.0, 200.0, 4000.0};
    const auto clamped = clamp_to_valid_box(c);
    CHECK(clamped.clamped);
    CHECK(clamped.conditions.pressure == ConditionBox::maxPressure);
    CHECK(clamped.conditions.treadDepth == ConditionBox::maxTread);
    CHECK(clamped.conditions.surfaceTemperature == ConditionBox::maxTemperature);
    CHECK(adapted_cornering_stiffness(tree, c) == adapted_cornering_stiffness(tree, clamped.conditions));
    CHECK_FALSE(clamp_to_valid_box(tree.reference).clamped);
    c.normalLoad = 0.0;
    CHECK_THROWS_AS((void)clamp_to_valid_box(c), InvalidInput);
}

TEST_CASE("non-positive terms are coefficient errors") {
    auto tree = calibrated_ground_truth();
    tree.loadTerm[1] = Quadratic{0, 0, -1.0};
    CHECK_THROWS_AS((void)adapted_cornering_stiffness(tree, tree.reference), CoefficientError);
    CHECK_THROWS_AS(validate_over_box(tree), CoefficientError);
    tree = calibrated_ground_truth();
    tree.gripTemp = Quadratic{0, 0, -1.0};
    CHECK_THROWS_AS((void)adapted_peak_friction(tree, tree.reference), CoefficientError);
}

TEST_CASE("tree text round-trip is bit exact") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto tree = random_ground_truth(seed);
        std::stringstream ss;
        write_tree(ss, tree);
        const auto back = read_tree(ss);
        CHECK(back == tree);
    }
    const std::string text = "[stiffness]\na311 = 1\n";
    std::istringstream bad(text);
    CHECK_THROWS((void)read_tree(bad));
}
