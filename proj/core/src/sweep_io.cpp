#include "adaptire/sweep_io.hpp"

#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "adaptire/error.hpp"
#include "adaptire/keyvalue.hpp"

namespace adaptire {

void write_sweep_csv(std::ostream& out, const std::vector<SweepObservation>& observations) {
    out << kSweepCsvHeader << '\n';
    for (const auto& o : observations) {
        out << format_double(o.slipAngle * 180.0 / std::numbers::pi) << ',' << format_double(o.normalLoad) << ','
            << format_double(o.pressure) << ',' << format_double(o.treadDepth) << ','
            << format_double(o.surfaceTemperature) << ',' << format_double(o.lateralForce) << '\n';
    }
}

std::vector<SweepObservation> read_sweep_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw InvalidInput("sweep csv: empty input");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kSweepCsvHeader) {
        throw InvalidInput(std::string("sweep csv: expected header '") + kSweepCsvHeader + "'");
    }
    std::vector<SweepObservation> out;
    int lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        double v[6];
        std::size_t start = 0;
        for (int k = 0; k < 6; ++k) {
            const auto comma = line.find(',', start);
            if ((k < 5) == (comma == std::string::npos)) {
                throw InvalidInput("sweep csv line " + std::to_string(lineNo) + ": expected 6 fields");
            }
            const auto field = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            try {
                v[k] = parse_double(field);
            } catch (const InvalidInput& e) {
                throw InvalidInput("sweep csv line " + std::to_string(lineNo) + ": " + e.what());
            }
            start = comma + 1;
        }
        out.push_back({v[0] * std::numbers::pi / 180.0, v[1], v[2], v[3], v[4], v[5]});
    }
    return out;
}

void save_sweep_csv(const std::string& path, const std::vector<SweepObservation>& observations) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path);
    }
    write_sweep_csv(out, observations);
}

std::vector<SweepObservation> load_sweep_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    return read_sweep_csv(in);
}

}  // namespace adaptire
