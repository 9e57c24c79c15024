// Command-line harness: synthetic data, coefficient fitting, maneuver simulation,
// adaptive-vs-fixed comparison and thermal network training.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adaptire/error.hpp"
#include "adaptire/fitting.hpp"
#include "adaptire/keyvalue.hpp"
#include "adaptire/maneuver.hpp"
#include "adaptire/rnn.hpp"
#include "adaptire/sweep_io.hpp"
#include "adaptire/synth.hpp"

namespace fs = std::filesystem;
using namespace adaptire;

namespace {

struct Options {
    std::string config;
    std::string tire;
    std::string maneuver;
    std::string out = ".";
    std::uint64_t seed = 42;
    std::string esc = "on";
    std::string adaptive = "on";
    std::string input;
};

std::vector<std::string> known_config_keys() {
    std::vector<std::string> keys = vehicle_parameter_keys("vehicle.");
    for (auto& k : esc_config_keys("esc.")) keys.push_back(k);
    for (const char* k : {"fit.joint_refinement", "fit.reference_pressure_kpa", "fit.reference_tread_mm",
                          "fit.reference_temp_c", "fit.reference_load_n", "fit.temperature_span_k",
                          "generator.noise_fraction", "generator.noise_floor_n", "generator.random_truth",
                          "rnn.epochs", "rnn.learning_rate", "rnn.neurons", "rnn.init_scale", "rnn.training_traces",
                          "rnn.trace_duration_s", "rnn.sample_interval_s"}) {
        keys.emplace_back(k);
    }
    return keys;
}

KeyValueDocument load_config(const Options& o) {
    if (o.config.empty()) {
        return {};
    }
    KeyValueDocument doc = KeyValueDocument::load(o.config);
    doc.require_known(known_config_keys());
    return doc;
}

bool on_off(const std::string& flag, const std::string& value) {
    if (value == "on") return true;
    if (value == "off") return false;
    throw InvalidInput("--" + flag + " expects on|off, got '" + value + "'");
}

AdaptedMfCoefficients load_tire(const Options& o) {
    return o.tire.empty() ? calibrated_ground_truth() : load_tree(o.tire);
}

ManeuverSpec load_maneuver(const Options& o) {
    return o.maneuver.empty() ? ManeuverSpec{} : maneuver_spec_from(KeyValueDocument::load(o.maneuver));
}

fs::path output_dir(const Options& o) {
    std::error_code ec;
    fs::create_directories(o.out, ec);
    if (ec) {
        throw IoError("cannot create directory '" + o.out + "': " + ec.message());
    }
    return fs::path(o.out);
}

template <class Writer>
void write_file(const fs::path& path, Writer&& writer) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    writer(out);
    if (!out) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

int run_synth(const Options& o) {
    const KeyValueDocument cfg = load_config(o);
    GeneratorSettings settings;
    settings.noiseFraction = cfg.number_or("generator.noise_fraction", settings.noiseFraction);
    settings.noiseFloor = cfg.number_or("generator.noise_floor_n", settings.noiseFloor);
    if (!o.tire.empty()) {
        settings.truth = load_tree(o.tire);
    } else if (cfg.boolean_or("generator.random_truth", false)) {
        settings.truth = random_ground_truth(o.seed);
    }
    const auto observations = synthesize_sweep_data(settings, o.seed);
    const fs::path dir = output_dir(o);
    save_sweep_csv((dir / "sweep.csv").string(), observations);
    save_tree((dir / "truth_tree.txt").string(), settings.truth);
    std::cout << "synth: " << observations.size() << " observations -> " << (dir / "sweep.csv").string() << '\n';
    return 0;
}

int run_fit(const Options& o) {
    if (o.input.empty()) {
        throw InvalidInput("fit needs a sweep CSV path");
    }
    const KeyValueDocument cfg = load_config(o);
    TireConditions reference;
    reference.pressure = cfg.number_or("fit.reference_pressure_kpa", reference.pressure);
    reference.treadDepth = cfg.number_or("fit.reference_tread_mm", reference.treadDepth);
    reference.surfaceTemperature = cfg.number_or("fit.reference_temp_c", reference.surfaceTemperature);
    reference.normalLoad = cfg.number_or("fit.reference_load_n", reference.normalLoad);
    PipelineOptions options;
    options.jointRefinement = cfg.boolean_or("fit.joint_refinement", options.jointRefinement);
    options.temperatureSpan = cfg.number_or("fit.temperature_span_k", options.temperatureSpan);

    const auto observations = load_sweep_csv(o.input);
    const PipelineResult result = fit_stage_pipeline(observations, reference, options);
    const fs::path dir = output_dir(o);
    save_tree((dir / "fitted_tree.txt").string(), result.best);
    write_file(dir / "fit_report.txt", [&](std::ostream& out) { write_fit_report(out, result); });
    const SensitivityReport s = measure_sensitivities(result.best);
    write_file(dir / "sensitivities.txt", [&](std::ostream& out) {
        KeyValueDocument doc;
        doc.set("stiffness_pressure_high_load", s.stiffnessPressureHighLoad);
        doc.set("stiffness_pressure_low_load", s.stiffnessPressureLowLoad);
        doc.set("stiffness_worn", s.stiffnessWorn);
        doc.set("stiffness_hot", s.stiffnessHot);
        doc.set("grip_worn", s.gripWorn);
        doc.set("grip_hot", s.gripHot);
        doc.write(out);
    });
    std::cout << "fit: " << observations.size() << " observations, Fy rms " << format_double(result.stagedForceRms)
              << " N staged, " << format_double(result.refinedForceRms) << " N refined -> "
              << (dir / "fitted_tree.txt").string() << '\n';
    return 0;
}

int run_sim(const Options& o) {
    const KeyValueDocument cfg = load_config(o);
    const VehicleParameters params = vehicle_parameters_from(cfg, "vehicle.");
    EscConfig esc = esc_config_from(cfg, "esc.");
    esc.adaptiveReference = on_off("adaptive", o.adaptive);
    const bool escOn = on_off("esc", o.esc);
    const AdaptedMfCoefficients tire = load_tire(o);
    const ManeuverSpec spec = load_maneuver(o);
    const fs::path dir = output_dir(o);

    if (spec.ramp) {
        const auto ramp = run_amplitude_ramp(spec, params, tire, esc, escOn);
        write_file(dir / "ramp.csv", [&](std::ostream& out) { write_ramp_csv(out, ramp); });
        std::optional<double> firstSpin;
        for (const auto& p : ramp) {
            if (p.summary.spinOut && !firstSpin) firstSpin = p.amplitude;
        }
        std::cout << "sim: ramp of " << ramp.size() << " amplitudes, first spin-out "
                  << (firstSpin ? format_double(*firstSpin) + " deg" : std::string("none")) << '\n';
        return 0;
    }
    const ManeuverResult result = run_maneuver(spec, params, tire, esc, escOn);
    export_results(result, dir.string(), "sim");
    if (result.aborted) {
        throw SimulationError(result.abortReason + " (partial results written)");
    }
    std::cout << "sim: " << to_string(spec.kind);
    if (spec.kind != ManeuverKind::StraightBrake) {
        std::cout << " " << format_double(spec.handWheelAmplitude) << " deg";
    }
    std::cout << ", spin_out=" << (result.summary.spinOut ? "true" : "false")
              << " peak_sideslip_rad=" << format_double(result.summary.peakSideslip) << '\n';
    return 0;
}

int run_compare(const Options& o) {
    const KeyValueDocument cfg = load_config(o);
    const VehicleParameters params = vehicle_parameters_from(cfg, "vehicle.");
    const EscConfig esc = esc_config_from(cfg, "esc.");
    const AdaptedMfCoefficients tire = load_tire(o);
    const ManeuverSpec spec = load_maneuver(o);
    const Comparison c = compare_adaptive_vs_fixed(spec, params, tire, esc);
    const fs::path dir = output_dir(o);
    export_results(c.adaptive, dir.string(), "adaptive");
    export_results(c.fixed, dir.string(), "fixed");
    write_file(dir / "comparison.txt", [&](std::ostream& out) { write_comparison(out, c); });
    if (c.adaptive.aborted || c.fixed.aborted) {
        throw SimulationError((c.adaptive.aborted ? c.adaptive.abortReason : c.fixed.abortReason) +
                              " (partial results written)");
    }
    std::cout << "compare: adaptive_better_on_all=" << (c.deltas.adaptive_better_on_all() ? "true" : "false")
              << " d_rms=" << format_double(c.deltas.yawRateTrackingRms)
              << " d_sideslip=" << format_double(c.deltas.peakSideslip)
              << " d_interventions=" << c.deltas.interventionCount
              << " d_speed_loss=" << format_double(c.deltas.speedLoss) << '\n';
    return 0;
}

int run_thermal_train(const Options& o) {
    const KeyValueDocument cfg = load_config(o);
    RnnTrainingOptions train;
    train.epochs = static_cast<int>(cfg.number_or("rnn.epochs", train.epochs));
    train.learningRate = cfg.number_or("rnn.learning_rate", train.learningRate);
    train.neurons = static_cast<int>(cfg.number_or("rnn.neurons", train.neurons));
    train.initScale = cfg.number_or("rnn.init_scale", train.initScale);
    train.seed = o.seed;

    std::vector<ThermalTrace> traces;
    ThermalTrace heldOut;
    if (!o.input.empty()) {
        std::ifstream in(o.input);
        if (!in) {
            throw IoError("cannot open '" + o.input + "' for reading");
        }
        traces = read_thermal_csv(in);
        if (traces.empty()) {
            throw InvalidInput(o.input + ": no thermal traces");
        }
        heldOut = traces.size() > 1 ? traces.back() : traces.front();
        if (traces.size() > 1) traces.pop_back();
    } else {
        TraceSettings ts;
        ts.duration = cfg.number_or("rnn.trace_duration_s", ts.duration);
        ts.sampleInterval = cfg.number_or("rnn.sample_interval_s", ts.sampleInterval);
        const auto count = static_cast<int>(cfg.number_or("rnn.training_traces", 8));
        if (count <= 0) {
            throw InvalidInput("rnn.training_traces must be positive");
        }
        for (int k = 0; k < count; ++k) {
            traces.push_back(generate_thermal_trace(ts, o.seed * 1000 + static_cast<std::uint64_t>(k)));
        }
        heldOut = generate_thermal_trace(ts, o.seed * 1000 + 999);
    }
    std::vector<RnnSequence> data;
    for (const auto& t : traces) data.push_back(sequence_from_trace(t));
    const RnnTrainingResult result = rnn_train(data, train);
    const RnnSequence test = sequence_from_trace(heldOut);
    const auto predicted = rnn_predict(result.model, test.inputs);
    double sq = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        sq += (predicted[i] - test.targets[i]) * (predicted[i] - test.targets[i]);
    }
    const double rms = std::sqrt(sq / static_cast<double>(predicted.size()));

    const fs::path dir = output_dir(o);
    write_file(dir / "thermal_training.csv", [&](std::ostream& out) { write_thermal_csv(out, traces); });
    save_model((dir / "rnn_model.txt").string(), result.model);
    write_file(dir / "thermal_heldout.csv", [&](std::ostream& out) {
        out << "time_s,surface_temp_c,predicted_c\n";
        for (std::size_t i = 0; i < predicted.size(); ++i) {
            out << format_double(heldOut[i + 1].time) << ',' << format_double(test.targets[i]) << ','
                << format_double(predicted[i]) << '\n';
        }
    });
    write_file(dir / "thermal_report.txt", [&](std::ostream& out) {
        KeyValueDocument doc;
        doc.set("training_traces", static_cast<double>(traces.size()));
        doc.set("epochs", static_cast<double>(train.epochs));
        doc.set("initial_loss", result.lossHistory.front());
        doc.set("final_loss", result.lossHistory.back());
        doc.set("heldout_rms_c", rms);
        doc.write(out);
    });
    std::cout << "thermal-train: final loss " << format_double(result.lossHistory.back()) << ", held-out rms "
              << format_double(rms) << " C -> " << (dir / "rnn_model.txt").string() << '\n';
    return 0;
}

const char* error_code(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e)) return "io";
    if (dynamic_cast<const InvalidInput*>(&e)) return "invalid_input";
    if (dynamic_cast<const FitError*>(&e)) return "fit";
    if (dynamic_cast<const SimulationError*>(&e)) return "simulation";
    if (dynamic_cast<const CoefficientError*>(&e)) return "coefficient";
    return "internal";
}

int exit_code(const std::exception& e) {
    if (dynamic_cast<const InvalidInput*>(&e)) return 2;
    if (dynamic_cast<const IoError*>(&e)) return 3;
    if (dynamic_cast<const FitError*>(&e)) return 4;
    if (dynamic_cast<const SimulationError*>(&e)) return 5;
    if (dynamic_cast<const CoefficientError*>(&e)) return 6;
    return 1;
}

void print_error(const std::string& code, std::string message) {
    for (char& c : message) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    std::cerr << "error: " << code << ": " << message << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adapted tire model, fitting and stability-control simulation harness"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "key = value configuration file");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--seed", o.seed, "random seed (u64)");
    };
    auto add_sim = [&](CLI::App* sub) {
        sub->add_option("--tire", o.tire, "coefficient tree file (default: calibrated synthetic tree)");
        sub->add_option("--maneuver", o.maneuver, "maneuver spec file");
    };

    auto* synth = app.add_subcommand("synth", "generate calibrated synthetic sweep data");
    add_common(synth);
    synth->add_option("--tire", o.tire, "ground-truth tree (default: calibrated tree)");

    auto* fit = app.add_subcommand("fit", "fit an adapted coefficient tree to sweep CSV data");
    add_common(fit);
    fit->add_option("sweep", o.input, "sweep CSV")->required();

    auto* sim = app.add_subcommand("sim", "run one maneuver (or the amplitude ramp)");
    add_common(sim);
    add_sim(sim);
    sim->add_option("--esc", o.esc, "on|off");
    sim->add_option("--adaptive", o.adaptive, "on|off");

    auto* compare = app.add_subcommand("compare", "adaptive vs fixed reference controller");
    add_common(compare);
    add_sim(compare);

    auto* thermal = app.add_subcommand("thermal-train", "train and evaluate the surface-temperature network");
    add_common(thermal);
    thermal->add_option("data", o.input, "training CSV (default: generated from the thermal ODE)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return 2;
    }

    try {
        if (*synth) return run_synth(o);
        if (*fit) return run_fit(o);
        if (*sim) return run_sim(o);
        if (*compare) return run_compare(o);
        if (*thermal) return run_thermal_train(o);
    } catch (const std::exception& e) {
        print_error(error_code(e), e.what());
        return exit_code(e);
    }
    return 1;
}
