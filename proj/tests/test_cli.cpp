#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cli_runner.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "adaptire_cli_test";

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream(path) << text;
}

bool one_error_line(const cli::Run& r, const std::string& code) {
    const std::string prefix = "error: " + code + ": ";
    return r.err.rfind(prefix, 0) == 0 && r.err.find('\n') == r.err.size() - 1;
}

// Runs the same invocation twice into the same directory and compares everything it wrote.
void check_rerun(const std::string& args, const fs::path& out) {
    fs::remove_all(out);
    const auto first = cli::run(args + " --out '" + out.string() + "'", kRoot / "io");
    REQUIRE_MESSAGE(first.status == 0, first.err);
    const auto a = cli::snapshot(out);
    fs::remove_all(out);
    const auto second = cli::run(args + " --out '" + out.string() + "'", kRoot / "io");
    REQUIRE(second.status == 0);
    const auto b = cli::snapshot(out);
    CHECK(!a.empty());
    CHECK(a == b);
    CHECK(first.out == second.out);
}

}  // namespace

TEST_CASE("synth and fit rerun byte-identically") {
    const auto cfg = kRoot / "noisy.cfg";
    write_text(cfg, "[generator]\nnoise_fraction = 0.02\n");
    check_rerun("synth --seed 7 --config '" + cfg.string() + "'", kRoot / "synth");
    const auto files = cli::snapshot(kRoot / "synth");
    CHECK(files.count("sweep.csv") == 1);
    CHECK(files.count("truth_tree.txt") == 1);
    check_rerun("fit '" + (kRoot / "synth" / "sweep.csv").string() + "'", kRoot / "fit");
    const auto fitted = cli::snapshot(kRoot / "fit");
    CHECK(fitted.count("fitted_tree.txt") == 1);
    CHECK(fitted.count("fit_report.txt") == 1);
    CHECK(fitted.count("sensitivities.txt") == 1);
}

TEST_CASE("sim and compare rerun byte-identically") {
    check_rerun("sim --maneuver '" + cli::config("maneuvers/sine_with_dwell.cfg") + "' --esc on --adaptive on",
                kRoot / "sim");
    CHECK(cli::snapshot(kRoot / "sim").count("sim_series.csv") == 1);
    check_rerun("sim --maneuver '" + cli::config("maneuvers/straight_brake.cfg") + "' --esc off", kRoot / "brake");
    check_rerun("compare --config '" + cli::config("default.cfg") + "' --maneuver '" +
                    cli::config("maneuvers/compare_worn_hot_low.cfg") + "'",
                kRoot / "compare");
    const auto files = cli::snapshot(kRoot / "compare");
    CHECK(files.count("comparison.txt") == 1);
    CHECK(files.count("adaptive_series.csv") == 1);
    CHECK(files.count("fixed_decisions.csv") == 1);
}

TEST_CASE("thermal-train reruns byte-identically") {
    const auto cfg = kRoot / "rnn.cfg";
    write_text(cfg, "[rnn]\nepochs = 40\ntraining_traces = 2\ntrace_duration_s = 40\n");
    check_rerun("thermal-train --seed 3 --config '" + cfg.string() + "'", kRoot / "thermal");
    const auto files = cli::snapshot(kRoot / "thermal");
    CHECK(files.count("rnn_model.txt") == 1);
    CHECK(files.count("thermal_training.csv") == 1);
    // retraining from the exported CSV also works
    const auto data = (kRoot / "thermal" / "thermal_training.csv").string();
    const auto r = cli::run("thermal-train '" + data + "' --config '" + cfg.string() + "' --out '" +
                                (kRoot / "thermal2").string() + "'",
                            kRoot / "io");
    CHECK(r.status == 0);
}

TEST_CASE("errors are one machine-readable line with a nonzero exit") {
    auto r = cli::run("bogus", kRoot / "io");
    CHECK(r.status == 2);
    CHECK(one_error_line(r, "usage"));

    r = cli::run("fit /nonexistent/sweep.csv --out '" + (kRoot / "x").string() + "'", kRoot / "io");
    CHECK(r.status == 3);
    CHECK(one_error_line(r, "io"));

    r = cli::run("sim --esc maybe --out '" + (kRoot / "x").string() + "'", kRoot / "io");
    CHECK(r.status == 2);
    CHECK(one_error_line(r, "invalid_input"));

    const auto badCfg = kRoot / "bad.cfg";
    write_text(badCfg, "[vehicle]\nwings = 2\n");
    r = cli::run("sim --config '" + badCfg.string() + "' --out '" + (kRoot / "x").string() + "'", kRoot / "io");
    CHECK(r.status == 2);
    CHECK(one_error_line(r, "invalid_input"));

    // single-temperature data fails the temperature stage
    const auto cfg = kRoot / "noisy.cfg";
    write_text(cfg, "[generator]\nnoise_fraction = 0.02\n");
    REQUIRE(cli::run("synth --config '" + cfg.string() + "' --out '" + (kRoot / "one").string() + "'", kRoot / "io")
                .status == 0);
    const auto sweep = cli::read_file(kRoot / "one" / "sweep.csv");
    std::istringstream in(sweep);
    std::string line, filtered;
    std::getline(in, line);
    filtered = line + "\n";
    while (std::getline(in, line)) {
        if (line.find(",25,") != std::string::npos) filtered += line + "\n";
    }
    write_text(kRoot / "one" / "cold.csv", filtered);
    r = cli::run("fit '" + (kRoot / "one" / "cold.csv").string() + "' --out '" + (kRoot / "x").string() + "'",
                 kRoot / "io");
    CHECK(r.status == 4);
    CHECK(one_error_line(r, "fit"));
    CHECK(r.err.find("temperature axis under-sampled") != std::string::npos);
}

TEST_CASE("help exits cleanly") {
    const auto r = cli::run("--help", kRoot / "io");
    CHECK(r.status == 0);
    CHECK(r.out.find("thermal-train") != std::string::npos);
}
