#pragma once

// nlohmann::json conversions for the domain types. Readers start from the
// default-constructed value, override the keys that are present and reject
// unknown keys.

#include <filesystem>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "fdgnn/corridor.hpp"
#include "fdgnn/errors.hpp"
#include "fdgnn/matrix.hpp"
#include "fdgnn/trainer.hpp"

namespace fdgnn {

using json = nlohmann::json;

namespace jsonio {

void require_object(const json& j, const std::string& context);
void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& context);

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& context) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(context + "." + key + ": " + e.what());
  }
}

template <typename T>
T required(const json& j, const char* key, const std::string& context) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(context + ": missing field '" + key + "'");
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(context + "." + key + ": " + e.what());
  }
}

json matrix_to_json(const Matrix& m);
// Writes through a temporary file and renames it into place. Throws DataError.
void write_file(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);
Matrix matrix_from_json(const json& j, const std::string& context);

}  // namespace jsonio

void to_json(json& j, const CorridorSpec& c);
void from_json(const json& j, CorridorSpec& c);
void to_json(json& j, const PhaseTiming& p);
void from_json(const json& j, PhaseTiming& p);
void to_json(json& j, const TimingPlan& p);
void from_json(const json& j, TimingPlan& p);
void to_json(json& j, const DrivingBehavior& b);
void from_json(const json& j, DrivingBehavior& b);
void to_json(json& j, const Demand& d);
void from_json(const json& j, Demand& d);
void to_json(json& j, const ScheduledDeparture& s);
void from_json(const json& j, ScheduledDeparture& s);
void to_json(json& j, const Scenario& s);
void from_json(const json& j, Scenario& s);
void to_json(json& j, const ModelConfig& c);
void from_json(const json& j, ModelConfig& c);
void to_json(json& j, const TrainConfig& c);
void from_json(const json& j, TrainConfig& c);

}  // namespace fdgnn
