#pragma once

// Text formats for scenarios (one JSON object) and simulation logs (JSON
// Lines: a header line, then one line per detector event and per vehicle).
// Doubles are written with round-trip precision.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "fdgnn/corridor.hpp"

namespace fdgnn {

inline constexpr int kLogSchemaVersion = 1;

std::string scenario_to_json(const Scenario& s);
// Throws ConfigError on malformed input or unknown keys.
Scenario scenario_from_json(const std::string& text);

void save_scenario(const Scenario& s, const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

void write_simulation_log(std::ostream& out, const SimulationLog& log);
// Throws ParseError with the byte offset and line index of the first bad line.
SimulationLog read_simulation_log(std::istream& in);

void save_simulation_log(const SimulationLog& log, const std::filesystem::path& path);
SimulationLog load_simulation_log(const std::filesystem::path& path);

}  // namespace fdgnn
