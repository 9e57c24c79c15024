#include <doctest.h>

#include <cmath>
#include <sstream>

#include "adaptire/error.hpp"
#include "adaptire/fitting.hpp"
#include "adaptire/sweep_io.hpp"
#include "adaptire/synth.hpp"

using namespace adaptire;

namespace {

double grid(double a, double b, int i) { return a + (b - a) * i / 4.0; }

struct GridError {
    double stiffness = 0.0;
    double grip = 0.0;
};

// RMS relative error over a 5^4 grid spanning the data.
GridError grid_error(const AdaptedMfCoefficients& fitted, const AdaptedMfCoefficients& truth) {
    double sc = 0.0, sg = 0.0;
    int n = 0;
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b)
            for (int c = 0; c < 5; ++c)
                for (int d = 0; d < 5; ++d) {
                    const TireConditions tc{grid(200, 350, a), grid(3.2, 8, b), grid(25, 90, c), grid(1320, 6000, d)};
                    const double e1 = adapted_cornering_stiffness(fitted, tc) / adapted_cornering_stiffness(truth, tc) - 1;
                    const double e2 = adapted_peak_friction(fitted, tc) / adapted_peak_friction(truth, tc) - 1;
                    sc += e1 * e1;
                    sg += e2 * e2;
                    ++n;
                }
    return {std::sqrt(sc / n), std::sqrt(sg / n)};
}

}  // namespace

TEST_CASE("generator grid size and determinism") {
    GeneratorSettings g;
    const auto a = synthesize_sweep_data(g, 42);
    const auto b = synthesize_sweep_data(g, 42);
    CHECK(a.size() == 4500);
    CHECK(a == b);
    g.noiseFraction = 0.02;
    const auto c = synthesize_sweep_data(g, 42);
    const auto d = synthesize_sweep_data(g, 42);
    const auto e = synthesize_sweep_data(g, 43);
    CHECK(c == d);
    CHECK_FALSE(c == e);
}

TEST_CASE("generator sanity at reference") {
    const auto truth = calibrated_ground_truth();
    const double mu = adapted_peak_friction(truth, truth.reference);
    CHECK(mu >= 0.9);
    CHECK(mu <= 1.3);
    const auto s = measure_sensitivities(truth);
    CHECK(std::abs(s.stiffnessPressureHighLoad - 0.10) <= 0.01);
    CHECK(std::abs(s.stiffnessWorn - 0.30) <= 0.01);
    CHECK(std::abs(s.stiffnessHot + 0.225) <= 0.01);
    CHECK(std::abs(s.gripWorn - 0.10) <= 0.01);
    CHECK(std::abs(s.gripHot + 0.10) <= 0.01);
    CHECK(s.stiffnessPressureLowLoad < 0.0);
}

TEST_CASE("random trees are valid and distinct") {
    const auto a = random_ground_truth(1);
    const auto b = random_ground_truth(2);
    CHECK_NOTHROW(validate_over_box(a));
    CHECK_NOTHROW(validate_over_box(b));
    CHECK_FALSE(a == b);
    CHECK(random_ground_truth(1) == a);
}

TEST_CASE("zero-noise pipeline round trip") {
    for (std::uint64_t seed : {1u, 7u, 13u}) {
        GeneratorSettings g;
        g.truth = random_ground_truth(seed);
        const auto obs = synthesize_sweep_data(g, seed);
        const auto r = fit_stage_pipeline(obs, g.truth.reference);
        const auto e = grid_error(r.best, g.truth);
        CHECK(e.stiffness < 1e-3);
        CHECK(e.grip < 1e-3);
        CHECK(r.stages.size() >= 5);
        CHECK(r.conditionFits.size() == 36);
    }
}

TEST_CASE("noisy pipeline stays within 5% RMS") {
    GeneratorSettings g;
    g.noiseFraction = 0.02;
    const auto obs = synthesize_sweep_data(g, 5);
    const auto r = fit_stage_pipeline(obs, g.truth.reference);
    const auto e = grid_error(r.best, g.truth);
    CHECK(e.stiffness < 0.05);
    CHECK(e.grip < 0.05);
    CHECK(r.refinedForceRms <= r.stagedForceRms + 1e-9);
}

TEST_CASE("single temperature fails at the temperature stage") {
    GeneratorSettings g;
    g.temperatures = {25.0};
    const auto obs = synthesize_sweep_data(g, 1);
    const auto fits = fit_condition_sweeps(obs);
    CHECK(fits.size() == 12);
    const auto stiff = fit_stiffness_levels(fits, g.truth.reference);
    const auto grip = fit_grip_levels(fits, g.truth.reference);
    CHECK(stiff.size() == 1);
    CHECK_THROWS_WITH_AS((void)fit_temperature_stage(fits, stiff, grip, g.truth.reference, 100.0),
                         doctest::Contains("temperature axis under-sampled"), FitError);
    CHECK_THROWS_WITH_AS((void)fit_stage_pipeline(obs, g.truth.reference),
                         doctest::Contains("temperature axis under-sampled"), FitError);
}

TEST_CASE("other under-sampled axes are named") {
    GeneratorSettings g;
    g.pressures = {250.0, 300.0};
    CHECK_THROWS_WITH_AS((void)fit_stage_pipeline(synthesize_sweep_data(g, 1), g.truth.reference),
                         doctest::Contains("pressure"), FitError);
    g = {};
    g.treadDepths = {5.0, 8.0};
    CHECK_THROWS_WITH_AS((void)fit_stage_pipeline(synthesize_sweep_data(g, 1), g.truth.reference),
                         doctest::Contains("tread"), FitError);
    g = {};
    g.loads = {2000.0, 4000.0, 6000.0};
    CHECK_THROWS_WITH_AS((void)fit_stage_pipeline(synthesize_sweep_data(g, 1), g.truth.reference),
                         doctest::Contains("load"), FitError);
}

TEST_CASE("pipeline is deterministic") {
    GeneratorSettings g;
    g.noiseFraction = 0.01;
    const auto obs = synthesize_sweep_data(g, 9);
    const auto a = fit_stage_pipeline(obs, g.truth.reference);
    const auto b = fit_stage_pipeline(obs, g.truth.reference);
    CHECK(a.best == b.best);
    std::ostringstream ra, rb;
    write_fit_report(ra, a);
    write_fit_report(rb, b);
    CHECK(ra.str() == rb.str());
    CHECK(ra.str().find("converged") != std::string::npos);
}

TEST_CASE("predicted force matches the base model at each condition") {
    const auto truth = calibrated_ground_truth();
    const SweepObservation o{0.08, 3500.0, 280.0, 6.0, 50.0, 0.0};
    const auto base = to_base_coefficients(truth, o.conditions());
    CHECK(predicted_lateral_force(truth, o) == doctest::Approx(lateral_force(base, {0.08, 3500.0})));
}

TEST_CASE("sweep csv round trip") {
    GeneratorSettings g;
    g.noiseFraction = 0.02;
    g.loads = {2000.0, 4000.0};
    const auto obs = synthesize_sweep_data(g, 3);
    std::stringstream ss;
    write_sweep_csv(ss, obs);
    CHECK(ss.str().rfind(kSweepCsvHeader, 0) == 0);
    const auto back = read_sweep_csv(ss);
    REQUIRE(back.size() == obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        CHECK(back[i].lateralForce == obs[i].lateralForce);
        CHECK(back[i].slipAngle == doctest::Approx(obs[i].slipAngle).epsilon(1e-15));
        CHECK(back[i].normalLoad == obs[i].normalLoad);
    }
}

TEST_CASE("sweep csv errors carry line numbers") {
    std::istringstream badHeader("a,b,c\n");
    CHECK_THROWS_AS((void)read_sweep_csv(badHeader), InvalidInput);
    std::istringstream badRow(std::string(kSweepCsvHeader) + "\n1,2,3,4,5,6\n1,2,3\n");
    CHECK_THROWS_WITH_AS((void)read_sweep_csv(badRow), doctest::Contains("line 3"), InvalidInput);
    CHECK_THROWS_AS((void)load_sweep_csv("/nonexistent/sweep.csv"), IoError);
}
