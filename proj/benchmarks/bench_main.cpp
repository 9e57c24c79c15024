#include <benchmark/benchmark.h>

#include "adaptire/esc.hpp"
#include "adaptire/fitting.hpp"
#include "adaptire/maneuver.hpp"
#include "adaptire/mf_core.hpp"
#include "adaptire/rnn.hpp"
#include "adaptire/synth.hpp"
#include "adaptire/thermal.hpp"
#include "adaptire/vehicle.hpp"

using namespace adaptire;

static void BM_LateralForce(benchmark::State& state) {
    const auto base = to_base_coefficients(calibrated_ground_truth(), TireConditions{});
    double alpha = 0.0;
    for (auto _ : state) {
        alpha += 1e-4;
        if (alpha > 0.3) alpha = -0.3;
        benchmark::DoNotOptimize(lateral_force(base, {alpha, 4000.0}));
    }
}
BENCHMARK(BM_LateralForce);

static void BM_AdaptedCoefficients(benchmark::State& state) {
    const auto tree = calibrated_ground_truth();
    TireConditions c{230.0, 5.0, 60.0, 3500.0};
    for (auto _ : state) {
        c.surfaceTemperature = c.surfaceTemperature > 90.0 ? 30.0 : c.surfaceTemperature + 0.01;
        benchmark::DoNotOptimize(to_base_coefficients(tree, c));
    }
}
BENCHMARK(BM_AdaptedCoefficients);

static void BM_PlantStep(benchmark::State& state) {
    VehicleParameters p;
    p.finalize();
    const auto tree = calibrated_ground_truth();
    const auto start = initial_state(p, 22.0, {tree.reference, tree.reference, tree.reference, tree.reference});
    auto s = start;
    PlantInputs in;
    in.roadWheelAngle = 0.03;
    long k = 0;
    for (auto _ : state) {
        s = plant_step(p, s, in, tree, 0.001);
        if (++k % 2000 == 0) s = start;
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_PlantStep);

static void BM_SineWithDwell(benchmark::State& state) {
    VehicleParameters p;
    p.finalize();
    const auto tree = calibrated_ground_truth();
    ManeuverSpec spec;
    spec.handWheelAmplitude = 210.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_maneuver(spec, p, tree, EscConfig{}, true));
    }
}
BENCHMARK(BM_SineWithDwell)->Unit(benchmark::kMillisecond);

static void BM_FitPipeline(benchmark::State& state) {
    const GeneratorSettings g;
    const auto obs = synthesize_sweep_data(g, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_stage_pipeline(obs, g.truth.reference));
    }
}
BENCHMARK(BM_FitPipeline)->Unit(benchmark::kMillisecond);

static void BM_RnnGradient(benchmark::State& state) {
    TraceSettings ts;
    const std::vector<RnnSequence> data{sequence_from_trace(generate_thermal_trace(ts, 1))};
    RnnTrainingOptions o;
    o.epochs = 1;
    const auto model = rnn_train(data, o).model;
    for (auto _ : state) {
        benchmark::DoNotOptimize(rnn_loss_gradient(model, data));
    }
}
BENCHMARK(BM_RnnGradient)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
