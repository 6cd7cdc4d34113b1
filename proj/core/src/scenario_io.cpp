#include "fdgnn/scenario_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

#include "json_convert.hpp"

namespace fdgnn {

namespace jsonio {

void require_object(const json& j, const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected an object");
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& context) {
  require_object(j, context);
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(context + ": unknown key '" + key + "'");
  }
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const std::string& context) {
  if (!j.is_array()) throw DataError(context + ": expected an array of rows");
  if (j.empty()) return Matrix();
  const std::size_t cols = j.front().size();
  Matrix m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.size() != cols) throw DataError(context + ": ragged matrix at row " + std::to_string(r));
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) throw DataError(context + ": non-numeric entry at (" + std::to_string(r) + ", " +
                                               std::to_string(c) + ")");
      m(r, c) = row[c].get<double>();
    }
  }
  return m;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw DataError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace jsonio

using jsonio::check_keys;
using jsonio::read;

void to_json(json& j, const CorridorSpec& c) {
  j = json{{"intersections", c.intersections},   {"segment_east", c.segment_east},
           {"segment_west", c.segment_west},     {"detector_setback", c.detector_setback},
           {"speed_limit", c.speed_limit},       {"entry_length", c.entry_length}};
}

void from_json(const json& j, CorridorSpec& c) {
  const std::string ctx = "corridor";
  check_keys(j, {"intersections", "segment_east", "segment_west", "detector_setback", "speed_limit", "entry_length",
                 "segment_length"},
             ctx);
  read(j, "intersections", c.intersections, ctx);
  // Shorthand for a uniform corridor.
  if (j.contains("segment_length")) {
    double len = 0.0;
    read(j, "segment_length", len, ctx);
    c = CorridorSpec::uniform(c.intersections, len);
  }
  read(j, "segment_east", c.segment_east, ctx);
  read(j, "segment_west", c.segment_west, ctx);
  read(j, "detector_setback", c.detector_setback, ctx);
  read(j, "speed_limit", c.speed_limit, ctx);
  read(j, "entry_length", c.entry_length, ctx);
}

void to_json(json& j, const PhaseTiming& p) {
  j = json{{"green", p.green},         {"min_green", p.min_green}, {"max_green", p.max_green},
           {"yellow", p.yellow},       {"all_red", p.all_red}};
}

void from_json(const json& j, PhaseTiming& p) {
  const std::string ctx = "phase";
  check_keys(j, {"green", "min_green", "max_green", "yellow", "all_red"}, ctx);
  read(j, "green", p.green, ctx);
  read(j, "min_green", p.min_green, ctx);
  read(j, "max_green", p.max_green, ctx);
  read(j, "yellow", p.yellow, ctx);
  read(j, "all_red", p.all_red, ctx);
}

void to_json(json& j, const TimingPlan& p) {
  j = json{{"cycle", p.cycle}, {"offset", p.offset}, {"phases", p.phases}, {"ring_sequence", p.ring_sequence}};
}

void from_json(const json& j, TimingPlan& p) {
  const std::string ctx = "plan";
  check_keys(j, {"cycle", "offset", "phases", "ring_sequence"}, ctx);
  read(j, "cycle", p.cycle, ctx);
  read(j, "offset", p.offset, ctx);
  read(j, "phases", p.phases, ctx);
  read(j, "ring_sequence", p.ring_sequence, ctx);
}

void to_json(json& j, const DrivingBehavior& b) {
  j = json{{"accel", b.accel},
           {"decel", b.decel},
           {"emergency_decel", b.emergency_decel},
           {"min_gap", b.min_gap},
           {"sigma", b.sigma},
           {"tau", b.tau},
           {"lc_strategic", b.lc_strategic},
           {"lc_cooperative", b.lc_cooperative},
           {"lc_speed_gain", b.lc_speed_gain},
           {"speed_factor_mean", b.speed_factor_mean},
           {"speed_factor_stdev", b.speed_factor_stdev}};
}

void from_json(const json& j, DrivingBehavior& b) {
  const std::string ctx = "behavior";
  check_keys(j, {"accel", "decel", "emergency_decel", "min_gap", "sigma", "tau", "lc_strategic", "lc_cooperative",
                 "lc_speed_gain", "speed_factor_mean", "speed_factor_stdev"},
             ctx);
  read(j, "accel", b.accel, ctx);
  read(j, "decel", b.decel, ctx);
  read(j, "emergency_decel", b.emergency_decel, ctx);
  read(j, "min_gap", b.min_gap, ctx);
  read(j, "sigma", b.sigma, ctx);
  read(j, "tau", b.tau, ctx);
  read(j, "lc_strategic", b.lc_strategic, ctx);
  read(j, "lc_cooperative", b.lc_cooperative, ctx);
  read(j, "lc_speed_gain", b.lc_speed_gain, ctx);
  read(j, "speed_factor_mean", b.speed_factor_mean, ctx);
  read(j, "speed_factor_stdev", b.speed_factor_stdev, ctx);
}

void to_json(json& j, const Demand& d) {
  j = json{{"eastbound", d.eastbound},
           {"westbound", d.westbound},
           {"northbound", d.northbound},
           {"southbound", d.southbound}};
}

void from_json(const json& j, Demand& d) {
  const std::string ctx = "demand";
  check_keys(j, {"eastbound", "westbound", "northbound", "southbound"}, ctx);
  read(j, "eastbound", d.eastbound, ctx);
  read(j, "westbound", d.westbound, ctx);
  read(j, "northbound", d.northbound, ctx);
  read(j, "southbound", d.southbound, ctx);
}

void to_json(json& j, const ScheduledDeparture& s) {
  j = json{{"time", s.time}, {"direction", to_string(s.direction)}};
}

void from_json(const json& j, ScheduledDeparture& s) {
  const std::string ctx = "scheduled";
  check_keys(j, {"time", "direction"}, ctx);
  read(j, "time", s.time, ctx);
  std::string d = to_string(s.direction);
  read(j, "direction", d, ctx);
  s.direction = direction_from_string(d);
}

void to_json(json& j, const Scenario& s) {
  j = json{{"id", s.id},
           {"corridor", s.corridor},
           {"plans", s.plans},
           {"tmc", s.tmc},
           {"behavior", s.behavior},
           {"demand", s.demand},
           {"duration", s.duration},
           {"measurement_start", s.measurement_start},
           {"measurement_length", s.measurement_length},
           {"seed", s.seed},
           {"tmc_mode", to_string(s.tmc_mode)},
           {"hold_green", s.hold_green},
           {"scheduled", s.scheduled}};
}

void from_json(const json& j, Scenario& s) {
  const std::string ctx = "scenario";
  check_keys(j, {"id", "corridor", "plans", "tmc", "behavior", "demand", "duration", "measurement_start",
                 "measurement_length", "seed", "tmc_mode", "hold_green", "scheduled"},
             ctx);
  read(j, "id", s.id, ctx);
  read(j, "corridor", s.corridor, ctx);
  read(j, "plans", s.plans, ctx);
  read(j, "tmc", s.tmc, ctx);
  read(j, "behavior", s.behavior, ctx);
  read(j, "demand", s.demand, ctx);
  read(j, "duration", s.duration, ctx);
  read(j, "measurement_start", s.measurement_start, ctx);
  read(j, "measurement_length", s.measurement_length, ctx);
  read(j, "seed", s.seed, ctx);
  std::string mode = to_string(s.tmc_mode);
  read(j, "tmc_mode", mode, ctx);
  s.tmc_mode = tmc_mode_from_string(mode);
  read(j, "hold_green", s.hold_green, ctx);
  read(j, "scheduled", s.scheduled, ctx);
}

std::string scenario_to_json(const Scenario& s) { return json(s).dump(2) + "\n"; }

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  try {
    return j.get<Scenario>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  jsonio::write_file(path, scenario_to_json(s));
}

Scenario load_scenario(const std::filesystem::path& path) { return scenario_from_json(jsonio::read_file(path)); }

namespace {

const char* origin_name(Origin o) { return o == Origin::kArterialEntry ? "arterial" : "side"; }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_double(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(ctx + ": missing field '" + key + "'");
  if (it->is_null()) return std::nullopt;
  if (!it->is_number()) throw DataError(ctx + "." + key + ": expected a number or null");
  return it->get<double>();
}

}  // namespace

void write_simulation_log(std::ostream& out, const SimulationLog& log) {
  json header{{"type", "header"},
              {"schema_version", kLogSchemaVersion},
              {"scenario_id", log.scenario_id},
              {"duration", log.duration},
              {"timestep", log.timestep},
              {"spawned", log.spawned},
              {"exited", log.exited},
              {"on_network", log.on_network},
              {"detector_events", log.detector_events.size()},
              {"vehicles", log.vehicles.size()}};
  out << header.dump() << '\n';
  for (const auto& e : log.detector_events) {
    out << json{{"type", "detector"}, {"intersection", e.intersection}, {"phase", e.phase}, {"time", e.time}}.dump()
        << '\n';
  }
  for (const auto& v : log.vehicles) {
    json j{{"type", "vehicle"},
           {"id", v.id},
           {"origin", origin_name(v.origin)},
           {"direction", v.direction ? json(to_string(*v.direction)) : json(nullptr)},
           {"spawn_time", v.spawn_time},
           {"speed_factor", v.speed_factor},
           {"corridor_entry", optional_json(v.corridor_entry)},
           {"corridor_exit", optional_json(v.corridor_exit)},
           {"left_network", optional_json(v.left_network)}};
    out << j.dump() << '\n';
  }
}

SimulationLog read_simulation_log(std::istream& in) {
  SimulationLog log;
  std::string line;
  std::size_t offset = 0;
  std::ptrdiff_t index = -1;
  std::size_t expected_events = 0, expected_vehicles = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    const std::size_t line_offset = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const std::string type = jsonio::required<std::string>(j, "type", "log line");
      if (!have_header) {
        if (type != "header") throw DataError("first line must be the header");
        const int version = jsonio::required<int>(j, "schema_version", "header");
        if (version != kLogSchemaVersion) {
          throw DataError("unsupported log schema version " + std::to_string(version));
        }
        log.scenario_id = jsonio::required<std::string>(j, "scenario_id", "header");
        log.duration = jsonio::required<double>(j, "duration", "header");
        log.timestep = jsonio::required<double>(j, "timestep", "header");
        log.spawned = jsonio::required<std::int64_t>(j, "spawned", "header");
        log.exited = jsonio::required<std::int64_t>(j, "exited", "header");
        log.on_network = jsonio::required<std::int64_t>(j, "on_network", "header");
        expected_events = jsonio::required<std::size_t>(j, "detector_events", "header");
        expected_vehicles = jsonio::required<std::size_t>(j, "vehicles", "header");
        have_header = true;
        continue;
      }
      ++index;
      if (type == "detector") {
        log.detector_events.push_back({jsonio::required<int>(j, "intersection", "detector"),
                                       jsonio::required<int>(j, "phase", "detector"),
                                       jsonio::required<double>(j, "time", "detector")});
      } else if (type == "vehicle") {
        VehicleRecord v;
        v.id = jsonio::required<std::int64_t>(j, "id", "vehicle");
        const auto origin = jsonio::required<std::string>(j, "origin", "vehicle");
        if (origin != "arterial" && origin != "side") throw DataError("vehicle: unknown origin '" + origin + "'");
        v.origin = origin == "arterial" ? Origin::kArterialEntry : Origin::kSideStreet;
        const json& d = j.at("direction");
        if (!d.is_null()) v.direction = direction_from_string(d.get<std::string>());
        v.spawn_time = jsonio::required<double>(j, "spawn_time", "vehicle");
        v.speed_factor = jsonio::required<double>(j, "speed_factor", "vehicle");
        v.corridor_entry = optional_double(j, "corridor_entry", "vehicle");
        v.corridor_exit = optional_double(j, "corridor_exit", "vehicle");
        v.left_network = optional_double(j, "left_network", "vehicle");
        log.vehicles.push_back(v);
      } else {
        throw DataError("unknown record type '" + type + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(std::string("simulation log: ") + e.what(), line_offset, index);
    }
  }
  if (!have_header) throw ParseError("simulation log: missing header", 0, -1);
  if (log.detector_events.size() != expected_events || log.vehicles.size() != expected_vehicles) {
    throw ParseError("simulation log: truncated, header announces " + std::to_string(expected_events) +
                         " detector events and " + std::to_string(expected_vehicles) + " vehicles",
                     offset, index + 1);
  }
  return log;
}

void save_simulation_log(const SimulationLog& log, const std::filesystem::path& path) {
  std::ostringstream ss;
  write_simulation_log(ss, log);
  jsonio::write_file(path, ss.str());
}

SimulationLog load_simulation_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_simulation_log(in);
}

}  // namespace fdgnn
