#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "adaptire/fitting.hpp"

namespace adaptire {

inline constexpr const char* kSweepCsvHeader =
    "slip_angle_deg,normal_load_n,pressure_kpa,tread_depth_mm,surface_temp_c,lateral_force_n";

/// Writes slip angles in degrees.
void write_sweep_csv(std::ostream& out, const std::vector<SweepObservation>& observations);

/// Reads the sweep CSV, converting slip angles to radians. Throws InvalidInput with the line number.
[[nodiscard]] std::vector<SweepObservation> read_sweep_csv(std::istream& in);

void save_sweep_csv(const std::string& path, const std::vector<SweepObservation>& observations);
[[nodiscard]] std::vector<SweepObservation> load_sweep_csv(const std::string& path);

}  // namespace adaptire
