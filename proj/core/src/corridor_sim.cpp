#include "fdgnn/corridor_sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <random>

#include <spdlog/spdlog.h>

#include "fdgnn/errors.hpp"
#include "fdgnn/signal.hpp"

namespace fdgnn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Vehicle {
  std::size_t record = 0;
  double x = 0.0;
  double v = 0.0;
  double v_desired = 0.0;
  // Index into Lane::order of the next intersection ahead.
  std::size_t next_stop = 0;
  Movement movement = Movement::kThrough;
  bool detector_passed = false;
  // Decided to clear the stop line on yellow/red.
  bool committed = false;
};

struct PendingEntry {
  std::size_t record = 0;
  double arrival = 0.0;
};

struct Lane {
  Direction direction = Direction::kEast;
  Approach approach = Approach::kEastbound;
  std::vector<int> order;
  std::vector<double> stop_pos;
  std::vector<double> detector_pos;
  // Sorted front (largest x) first.
  std::vector<Vehicle> vehicles;
  std::deque<PendingEntry> pending;
};

struct SideVehicle {
  std::size_t record = 0;
  Movement movement = Movement::kThrough;
};

struct SideQueue {
  Approach approach = Approach::kNorthbound;
  std::deque<SideVehicle> queue;
  double last_departure = -kInf;
};

class Simulator {
 public:
  explicit Simulator(const Scenario& s) : s_(s), rng_(s.seed) {
    const auto K = static_cast<std::size_t>(s.corridor.intersections);
    for (Direction d : {Direction::kEast, Direction::kWest}) build_lane(d);
    side_.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
      side_[k][0].approach = Approach::kNorthbound;
      side_[k][1].approach = Approach::kSouthbound;
    }
    next_east_ = first_arrival(s.demand.eastbound);
    next_west_ = first_arrival(s.demand.westbound);
    for (std::size_t k = 0; k < K; ++k) {
      next_side_.push_back({first_arrival(s.demand.northbound[k]), first_arrival(s.demand.southbound[k])});
    }
    scheduled_ = s.scheduled;
    std::stable_sort(scheduled_.begin(), scheduled_.end(),
                     [](const auto& a, const auto& b) { return a.time < b.time; });
    max_cycle_ = 0.0;
    for (const auto& p : s.plans) max_cycle_ = std::max(max_cycle_, p.cycle);
    green_.resize(K);
    log_.scenario_id = s.id;
    log_.duration = s.duration;
    log_.timestep = kTimestep;
  }

  SimulationLog run() {
    const auto steps = static_cast<std::int64_t>(std::llround(s_.duration / kTimestep));
    double stalled = 0.0;
    for (std::int64_t n = 0; n < steps; ++n) {
      const double t = static_cast<double>(n) * kTimestep;
      moved_ = false;
      generate_arrivals(t, t + kTimestep);
      update_signals(t);
      for (auto& lane : lanes_) move_lane(lane, t);
      serve_side_streets(t);
      for (auto& lane : lanes_) insert_pending(lane, t + kTimestep);
      if (!moved_ && on_network() > 0) {
        stalled += kTimestep;
        if (stalled >= kGridlockCycles * max_cycle_) {
          throw SimulationError("scenario '" + s_.id + "': gridlock, no vehicle moved for " +
                                std::to_string(kGridlockCycles) + " cycles before t=" + std::to_string(t));
        }
      } else {
        stalled = 0.0;
      }
    }
    log_.on_network = on_network();
    std::stable_sort(log_.detector_events.begin(), log_.detector_events.end(),
                     [](const DetectorEvent& a, const DetectorEvent& b) {
                       if (a.time != b.time) return a.time < b.time;
                       if (a.intersection != b.intersection) return a.intersection < b.intersection;
                       return a.phase < b.phase;
                     });
    return std::move(log_);
  }

 private:
  void build_lane(Direction d) {
    const auto& c = s_.corridor;
    const int K = c.intersections;
    Lane lane;
    lane.direction = d;
    lane.approach = d == Direction::kEast ? Approach::kEastbound : Approach::kWestbound;
    for (int i = 0; i < K; ++i) lane.order.push_back(d == Direction::kEast ? i : K - 1 - i);
    lane.stop_pos.push_back(c.entry_length);
    for (std::size_t i = 1; i < lane.order.size(); ++i) {
      const int a = lane.order[i - 1], b = lane.order[i];
      const auto seg = static_cast<std::size_t>(std::min(a, b));
      const double L = d == Direction::kEast ? c.segment_east[seg] : c.segment_west[seg];
      lane.stop_pos.push_back(lane.stop_pos.back() + L);
    }
    lane.detector_pos.push_back(c.entry_length - c.detector_setback);
    for (std::size_t i = 1; i < lane.order.size(); ++i) {
      const double wanted = lane.stop_pos[i] - c.detector_setback;
      const double floor = lane.stop_pos[i - 1] + kJoinOffset + 1.0;
      if (wanted < floor) {
        spdlog::warn("scenario '{}': {} segment into intersection {} is shorter than the detector setback; "
                     "detector clamped to {:.1f} m upstream of the stop line",
                     s_.id, to_string(d), lane.order[i], lane.stop_pos[i] - floor);
      }
      lane.detector_pos.push_back(std::max(wanted, floor));
    }
    lanes_.push_back(std::move(lane));
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }

  double first_arrival(double rate_per_hour) {
    return rate_per_hour > 0.0 ? std::exponential_distribution<double>(rate_per_hour / 3600.0)(rng_) : kInf;
  }

  Movement sample_movement(int intersection, Approach a) {
    const auto& r = s_.tmc[static_cast<std::size_t>(intersection)];
    const double u = uniform();
    const double left = turning_ratio(r, a, Movement::kLeft);
    const double through = turning_ratio(r, a, Movement::kThrough);
    if (u < left) return Movement::kLeft;
    if (u < left + through) return Movement::kThrough;
    return Movement::kRight;
  }

  double sample_speed_factor() {
    const auto& b = s_.behavior;
    if (b.speed_factor_stdev <= 0.0) return std::clamp(b.speed_factor_mean, kMinSpeedFactor, kMaxSpeedFactor);
    const double f = std::normal_distribution<double>(b.speed_factor_mean, b.speed_factor_stdev)(rng_);
    return std::clamp(f, kMinSpeedFactor, kMaxSpeedFactor);
  }

  std::size_t new_record(Origin origin, std::optional<Direction> dir, double t) {
    VehicleRecord r;
    r.id = static_cast<std::int64_t>(log_.vehicles.size());
    r.origin = origin;
    r.direction = dir;
    r.spawn_time = t;
    log_.vehicles.push_back(r);
    ++log_.spawned;
    return log_.vehicles.size() - 1;
  }

  void leave(std::size_t record, double t) {
    log_.vehicles[record].left_network = t;
    ++log_.exited;
  }

  Lane& lane_for(Direction d) { return lanes_[static_cast<std::size_t>(d)]; }

  void enqueue_arterial(Direction d, double t) {
    const std::size_t rec = new_record(Origin::kArterialEntry, d, t);
    lane_for(d).pending.push_back({rec, t});
  }

  void generate_arrivals(double t0, double t1) {
    while (next_east_ < t1) {
      enqueue_arterial(Direction::kEast, next_east_);
      next_east_ += std::exponential_distribution<double>(s_.demand.eastbound / 3600.0)(rng_);
    }
    while (next_west_ < t1) {
      enqueue_arterial(Direction::kWest, next_west_);
      next_west_ += std::exponential_distribution<double>(s_.demand.westbound / 3600.0)(rng_);
    }
    while (scheduled_pos_ < scheduled_.size() && scheduled_[scheduled_pos_].time < t1) {
      const auto& sd = scheduled_[scheduled_pos_++];
      enqueue_arterial(sd.direction, std::max(sd.time, t0));
    }
    for (std::size_t k = 0; k < side_.size(); ++k) {
      for (std::size_t a = 0; a < 2; ++a) {
        const double rate = a == 0 ? s_.demand.northbound[k] : s_.demand.southbound[k];
        while (next_side_[k][a] < t1) {
          const double at = next_side_[k][a];
          const Approach approach = side_[k][a].approach;
          const Movement m = sample_movement(static_cast<int>(k), approach);
          const std::size_t rec = new_record(Origin::kSideStreet, std::nullopt, at);
          log_.detector_events.push_back({static_cast<int>(k), phase_for(approach, m), at});
          side_[k][a].queue.push_back({rec, m});
          next_side_[k][a] += std::exponential_distribution<double>(rate / 3600.0)(rng_);
        }
      }
    }
  }

  void update_signals(double t) {
    for (std::size_t k = 0; k < green_.size(); ++k) {
      green_[k] = s_.hold_green ? PhaseSet{1, 2, 3, 4, 5, 6, 7, 8} : signal_state_unchecked(s_.plans[k], t);
    }
  }

  bool is_green(int intersection, Approach a, Movement m) const {
    return green_[static_cast<std::size_t>(intersection)].contains(phase_for(a, m));
  }

  // Largest speed that keeps a stopping reserve behind an obstacle moving
  // at `v_lead`, given a gap that already excludes minGap.
  double safe_speed(double gap, double v_lead) const {
    const double b = s_.behavior.decel;
    const double bt = b * s_.behavior.tau;
    const double g = std::max(gap, 0.0);
    return std::min(-bt + std::sqrt(bt * bt + v_lead * v_lead + 2.0 * b * g), g / kTimestep);
  }

  void start_segment(Vehicle& veh, const Lane& lane, std::size_t stop) {
    veh.next_stop = stop;
    veh.detector_passed = false;
    veh.committed = false;
    veh.movement = sample_movement(lane.order[stop], lane.approach);
  }

  // Advances every vehicle in `lane` from t to t + dt, front to back, so each
  // follower reacts to its leader's updated state.
  void move_lane(Lane& lane, double t) {
    const auto& b = s_.behavior;
    std::vector<Vehicle> kept;
    kept.reserve(lane.vehicles.size());
    for (Vehicle veh : lane.vehicles) {
      double v_max = std::min(veh.v + b.accel * kTimestep, veh.v_desired);
      if (!kept.empty()) {
        const Vehicle& lead = kept.back();
        const double gap = lead.x - kVehicleLength - veh.x - b.min_gap;
        v_max = std::min(v_max, safe_speed(gap, lead.v));
      }
      const std::size_t s = veh.next_stop;
      const int k = lane.order[s];
      if (is_green(k, lane.approach, veh.movement)) {
        veh.committed = false;
      } else if (!veh.committed) {
        const double d = lane.stop_pos[s] - veh.x;
        if (veh.v * veh.v <= 2.0 * b.decel * std::max(d, 0.0) + 1e-9) {
          v_max = std::min(v_max, safe_speed(d, 0.0));
        } else {
          veh.committed = true;
        }
      }
      v_max = std::max(v_max, 0.0);
      const double dawdle = b.sigma * b.accel * kTimestep * uniform();
      const double v_new = std::max(0.0, v_max - dawdle);
      const double x_old = veh.x;
      const double x_new = x_old + v_new * kTimestep;
      if (x_new > x_old + 1e-9) moved_ = true;
      veh.v = v_new;
      veh.x = x_new;
      if (process_crossings(lane, veh, x_old, x_new, t)) kept.push_back(veh);
    }
    lane.vehicles = std::move(kept);
  }

  // Handles detector and stop-line crossings in (x_old, x_new]. Returns false
  // when the vehicle leaves the lane.
  bool process_crossings(Lane& lane, Vehicle& veh, double x_old, double x_new, double t) {
    auto crossing_time = [&](double pos) { return t + kTimestep * (pos - x_old) / (x_new - x_old); };
    VehicleRecord& rec = log_.vehicles[veh.record];
    while (true) {
      const std::size_t s = veh.next_stop;
      const int k = lane.order[s];
      if (!veh.detector_passed) {
        const double det = lane.detector_pos[s];
        if (!(det > x_old && det <= x_new)) return true;
        veh.detector_passed = true;
        const double tc = crossing_time(det);
        log_.detector_events.push_back({k, phase_for(lane.approach, veh.movement), tc});
        if (veh.movement == Movement::kLeft) {
          leave(veh.record, tc);
          return false;
        }
      }
      const double stop = lane.stop_pos[s];
      if (!(stop > x_old && stop <= x_new)) return true;
      const double tc = crossing_time(stop);
      if (s == 0 && rec.origin == Origin::kArterialEntry) rec.corridor_entry = tc;
      if (s + 1 == lane.order.size()) {
        rec.corridor_exit = tc;
        leave(veh.record, tc);
        return false;
      }
      if (veh.movement == Movement::kRight) {
        leave(veh.record, tc);
        return false;
      }
      start_segment(veh, lane, s + 1);
    }
  }

  void insert_pending(Lane& lane, double t) {
    const auto& b = s_.behavior;
    while (!lane.pending.empty()) {
      double gap = kInf;
      double v_lead = 0.0;
      if (!lane.vehicles.empty()) {
        const Vehicle& rear = lane.vehicles.back();
        gap = rear.x - kVehicleLength - b.min_gap;
        v_lead = rear.v;
      }
      if (gap < 0.0) return;
      const PendingEntry entry = lane.pending.front();
      lane.pending.pop_front();
      Vehicle veh;
      veh.record = entry.record;
      const double factor = sample_speed_factor();
      log_.vehicles[entry.record].speed_factor = factor;
      veh.v_desired = s_.corridor.speed_limit * factor;
      veh.x = 0.0;
      veh.v = std::isinf(gap) ? veh.v_desired : std::min(veh.v_desired, safe_speed(gap, v_lead));
      start_segment(veh, lane, 0);
      lane.vehicles.push_back(veh);
      moved_ = true;
      (void)t;
    }
  }

  // Tries to place a stopped vehicle just downstream of stop `s` of `lane`.
  bool try_join(Lane& lane, std::size_t s, std::size_t record) {
    const auto& b = s_.behavior;
    const double x_ins = lane.stop_pos[s] + kJoinOffset;
    auto it = std::find_if(lane.vehicles.begin(), lane.vehicles.end(), [&](const Vehicle& v) { return v.x <= x_ins; });
    if (it != lane.vehicles.begin()) {
      const Vehicle& ahead = *std::prev(it);
      if (ahead.x - kVehicleLength - x_ins - b.min_gap < 0.0) return false;
    }
    if (it != lane.vehicles.end()) {
      const double g = x_ins - kVehicleLength - it->x - b.min_gap;
      if (g < it->v * it->v / (2.0 * b.decel) + it->v * kTimestep) return false;
    }
    Vehicle veh;
    veh.record = record;
    const double factor = sample_speed_factor();
    log_.vehicles[record].speed_factor = factor;
    veh.v_desired = s_.corridor.speed_limit * factor;
    veh.x = x_ins;
    veh.v = 0.0;
    start_segment(veh, lane, s + 1);
    lane.vehicles.insert(it, veh);
    return true;
  }

  void serve_side_streets(double t) {
    for (std::size_t k = 0; k < side_.size(); ++k) {
      for (auto& q : side_[k]) {
        if (q.queue.empty() || t - q.last_departure < kSaturationHeadway - 1e-9) continue;
        const SideVehicle head = q.queue.front();
        if (!is_green(static_cast<int>(k), q.approach, head.movement)) continue;
        if (head.movement == Movement::kThrough) {
          leave(head.record, t);
        } else {
          // Right from northbound and left from southbound head east.
          const bool east = (q.approach == Approach::kNorthbound) == (head.movement == Movement::kRight);
          const Direction d = east ? Direction::kEast : Direction::kWest;
          Lane& lane = lane_for(d);
          const auto pos = static_cast<std::size_t>(
              std::find(lane.order.begin(), lane.order.end(), static_cast<int>(k)) - lane.order.begin());
          log_.vehicles[head.record].direction = d;
          if (pos + 1 == lane.order.size()) {
            leave(head.record, t);
          } else if (!try_join(lane, pos, head.record)) {
            log_.vehicles[head.record].direction = std::nullopt;
            continue;
          }
        }
        q.queue.pop_front();
        q.last_departure = t;
        moved_ = true;
      }
    }
  }

  std::int64_t on_network() const {
    std::int64_t n = 0;
    for (const auto& lane : lanes_) n += static_cast<std::int64_t>(lane.vehicles.size() + lane.pending.size());
    for (const auto& qs : side_)
      for (const auto& q : qs) n += static_cast<std::int64_t>(q.queue.size());
    return n;
  }

  const Scenario& s_;
  std::mt19937_64 rng_;
  std::vector<Lane> lanes_;
  std::vector<std::array<SideQueue, 2>> side_;
  std::vector<PhaseSet> green_;
  double next_east_ = kInf;
  double next_west_ = kInf;
  std::vector<std::array<double, 2>> next_side_;
  std::vector<ScheduledDeparture> scheduled_;
  std::size_t scheduled_pos_ = 0;
  double max_cycle_ = 0.0;
  bool moved_ = false;
  SimulationLog log_;
};

}  // namespace

SimulationLog run_scenario(const Scenario& scenario) {
  validate(scenario);
  return Simulator(scenario).run();
}

std::vector<double> extract_travel_times(const SimulationLog& log, Direction direction) {
  return extract_travel_times(log, direction, -kInf, kInf);
}

std::vector<double> extract_travel_times(const SimulationLog& log, Direction direction, double entry_begin,
                                         double entry_end) {
  std::vector<double> out;
  for (const auto& v : log.vehicles) {
    if (v.origin != Origin::kArterialEntry || v.direction != direction) continue;
    if (!v.corridor_entry || !v.corridor_exit) continue;
    if (*v.corridor_entry < entry_begin || *v.corridor_entry >= entry_end) continue;
    out.push_back(*v.corridor_exit - *v.corridor_entry);
  }
  return out;
}

std::int64_t aggregate_detector_counts(const SimulationLog& log, int intersection, int phase, double t0, double t1) {
  if (!(t0 < t1)) throw ConfigError("aggregate_detector_counts: window start must precede its end");
  std::int64_t n = 0;
  for (const auto& e : log.detector_events) {
    if (e.intersection == intersection && e.phase == phase && e.time >= t0 && e.time < t1) ++n;
  }
  return n;
}

Matrix detector_count_matrix(const SimulationLog& log, int intersections, double t0, double t1) {
  if (!(t0 < t1)) throw ConfigError("detector_count_matrix: window start must precede its end");
  Matrix m(static_cast<std::size_t>(intersections), kPhaseCount);
  for (const auto& e : log.detector_events) {
    if (e.time < t0 || e.time >= t1) continue;
    if (e.intersection < 0 || e.intersection >= intersections || e.phase < 1 || e.phase > kPhaseCount) {
      throw DataError("detector event references intersection " + std::to_string(e.intersection) + ", phase " +
                      std::to_string(e.phase));
    }
    m(static_cast<std::size_t>(e.intersection), static_cast<std::size_t>(e.phase - 1)) += 1.0;
  }
  return m;
}

double free_flow_time(const CorridorSpec& corridor, Direction direction, double speed_factor) {
  return corridor.corridor_length(direction) / (corridor.speed_limit * speed_factor);
}

}  // namespace fdgnn
