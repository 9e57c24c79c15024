#pragma once

// Runs the command-line harness as a child process and snapshots its output directory.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace cli {

struct Run {
    int status = -1;
    std::string out;
    std::string err;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Run run(const std::string& args, const std::filesystem::path& scratch) {
    std::filesystem::create_directories(scratch);
    const auto outPath = scratch / "stdout.txt";
    const auto errPath = scratch / "stderr.txt";
    const std::string command = std::string("'") + ADAPTIRE_CLI_PATH + "' " + args + " > '" + outPath.string() +
                                "' 2> '" + errPath.string() + "'";
    const int raw = std::system(command.c_str());
    Run r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = read_file(outPath);
    r.err = read_file(errPath);
    return r;
}

using Snapshot = std::map<std::string, std::string>;

inline Snapshot snapshot(const std::filesystem::path& dir) {
    Snapshot s;
    if (!std::filesystem::exists(dir)) return s;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file()) s[e.path().filename().string()] = read_file(e.path());
    }
    return s;
}

inline std::string config(const std::string& name) { return std::string(ADAPTIRE_CONFIG_DIR) + "/" + name; }

}  // namespace cli
