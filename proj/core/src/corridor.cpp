#include "fdgnn/corridor.hpp"

#include <cmath>
#include <numeric>

#include "fdgnn/errors.hpp"
#include "fdgnn/signal.hpp"

namespace fdgnn {

namespace {

void check_range(double v, double lo, double hi, const char* field) {
  if (!(v >= lo && v <= hi)) {
    throw ConfigError(std::string("driving behavior: ") + field + " = " + std::to_string(v) + " outside [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

}  // namespace

const char* to_string(Direction d) { return d == Direction::kEast ? "east" : "west"; }

Direction direction_from_string(const std::string& s) {
  if (s == "east") return Direction::kEast;
  if (s == "west") return Direction::kWest;
  throw ConfigError("unknown direction '" + s + "'");
}

const char* to_string(TmcMode m) { return m == TmcMode::kReal ? "real" : "random"; }

TmcMode tmc_mode_from_string(const std::string& s) {
  if (s == "real") return TmcMode::kReal;
  if (s == "random") return TmcMode::kRandom;
  throw ConfigError("unknown tmc mode '" + s + "'");
}

int phase_for(Approach approach, Movement movement) {
  const bool left = movement == Movement::kLeft;
  switch (approach) {
    case Approach::kEastbound:
      return left ? 5 : 2;
    case Approach::kWestbound:
      return left ? 1 : 6;
    case Approach::kNorthbound:
      return left ? 7 : 4;
    case Approach::kSouthbound:
      return left ? 3 : 8;
  }
  return 0;
}

CorridorSpec CorridorSpec::uniform(int intersections, double segment_length) {
  CorridorSpec c;
  c.intersections = intersections;
  const auto n = static_cast<std::size_t>(std::max(intersections - 1, 0));
  c.segment_east.assign(n, segment_length);
  c.segment_west.assign(n, segment_length);
  return c;
}

double CorridorSpec::corridor_length(Direction d) const {
  const auto& seg = d == Direction::kEast ? segment_east : segment_west;
  return std::accumulate(seg.begin(), seg.end(), 0.0);
}

void validate(const CorridorSpec& c) {
  if (c.intersections < 2) throw ConfigError("corridor: at least 2 intersections required");
  const auto n = static_cast<std::size_t>(c.intersections - 1);
  if (c.segment_east.size() != n || c.segment_west.size() != n) {
    throw ConfigError("corridor: expected " + std::to_string(n) + " segment lengths per direction");
  }
  for (const auto* seg : {&c.segment_east, &c.segment_west}) {
    for (double L : *seg) {
      // Short segments cannot hold a joining vehicle plus a detector.
      if (!(L >= 50.0 && L <= 5000.0)) {
        throw ConfigError("corridor: segment length " + std::to_string(L) + " m outside [50, 5000]");
      }
    }
  }
  if (!(c.speed_limit > 0.0)) throw ConfigError("corridor: speed limit must be positive");
  if (!(c.detector_setback > 0.0)) throw ConfigError("corridor: detector setback must be positive");
  if (!(c.entry_length > c.detector_setback)) {
    throw ConfigError("corridor: entry length must exceed the detector setback");
  }
}

void validate(const DrivingBehavior& b) {
  // Physical validity. The narrower sampling ranges live in the sampler.
  check_range(b.accel, 0.1, 20.0, "accel");
  check_range(b.decel, 0.1, 20.0, "decel");
  check_range(b.emergency_decel, b.decel, 50.0, "emergencyDecel");
  check_range(b.min_gap, 0.0, 20.0, "minGap");
  check_range(b.sigma, 0.0, 1.0, "sigma");
  check_range(b.tau, 0.0, 10.0, "tau");
  check_range(b.lc_strategic, 0.0, 100.0, "lcStrategic");
  check_range(b.lc_cooperative, 0.0, 1.0, "lcCooperative");
  check_range(b.lc_speed_gain, 0.0, 100.0, "lcSpeedGain");
  check_range(b.speed_factor_mean, 0.2, 2.0, "speedFactor mean");
  check_range(b.speed_factor_stdev, 0.0, 5.0, "speedFactor stdev");
}

void validate(const Scenario& s) {
  validate(s.corridor);
  const auto K = static_cast<std::size_t>(s.corridor.intersections);
  if (s.plans.size() != K) throw ConfigError("scenario: expected one timing plan per intersection");
  if (s.tmc.size() != K) throw ConfigError("scenario: expected one turning-ratio vector per intersection");
  double max_cycle = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    try {
      validate(s.plans[k]);
    } catch (const ConfigError& e) {
      throw ConfigError("intersection " + std::to_string(k) + ": " + e.what());
    }
    max_cycle = std::max(max_cycle, s.plans[k].cycle);
    for (std::size_t a = 0; a < 4; ++a) {
      double total = 0.0;
      for (std::size_t m = 0; m < 3; ++m) {
        const double r = s.tmc[k][a * 3 + m];
        if (!(r >= 0.0 && r <= 1.0)) {
          throw ConfigError("intersection " + std::to_string(k) + ": turning ratio outside [0, 1]");
        }
        total += r;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw ConfigError("intersection " + std::to_string(k) + ": turning ratios of approach " + std::to_string(a) +
                          " sum to " + std::to_string(total));
      }
    }
  }
  validate(s.behavior);
  const auto& d = s.demand;
  if (d.northbound.size() != K || d.southbound.size() != K) {
    throw ConfigError("scenario: side-street demand needs one entry per intersection");
  }
  auto nonneg = [](double v) { return v >= 0.0 && std::isfinite(v); };
  bool ok = nonneg(d.eastbound) && nonneg(d.westbound);
  for (std::size_t k = 0; k < K; ++k) ok = ok && nonneg(d.northbound[k]) && nonneg(d.southbound[k]);
  if (!ok) throw ConfigError("scenario: demand must be finite and >= 0");
  if (!(s.duration >= 2.0 * max_cycle)) throw ConfigError("scenario: duration shorter than two cycles");
  if (s.measurement_start < 0.0 || !(s.measurement_length > 0.0) ||
      s.measurement_start + s.measurement_length > s.duration) {
    throw ConfigError("scenario: measurement interval must lie inside the simulated duration");
  }
  for (const auto& sd : s.scheduled) {
    if (sd.time < 0.0 || sd.time >= s.duration) throw ConfigError("scenario: scheduled departure outside duration");
  }
}

}  // namespace fdgnn
