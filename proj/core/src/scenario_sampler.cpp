#include "fdgnn/scenario_sampler.hpp"

#include <algorithm>
#include <cmath>

#include "fdgnn/errors.hpp"

namespace fdgnn {

namespace {

constexpr int kMaxAttempts = 100;

double draw(std::mt19937_64& rng, const Range& r) {
  if (r.lo == r.hi) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

void check(const Range& r, const char* name) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
    throw ConfigError(std::string("sampling range ") + name + " is empty or not finite");
  }
}

std::array<double, 3> dirichlet(std::mt19937_64& rng, const std::array<double, 3>& alpha) {
  std::array<double, 3> g{};
  double total = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    g[i] = std::gamma_distribution<double>(alpha[i], 1.0)(rng);
    total += g[i];
  }
  for (auto& v : g) v /= total;
  // Absorb rounding into the largest share so the row sums to 1 exactly.
  auto big = std::max_element(g.begin(), g.end());
  *big = 1.0 - (g[0] + g[1] + g[2] - *big);
  return g;
}

// Splits `group` seconds of a barrier group between a left and a through
// phase; returns {left green, through green} or nothing when infeasible.
std::optional<std::pair<double, double>> split_group(std::mt19937_64& rng, const SamplingRanges& r, double group) {
  const double lost = 2.0 * (r.yellow + r.all_red);
  const double slack = group - lost - r.min_green_left - r.min_green_through;
  if (slack < 0.0) return std::nullopt;
  const double left = r.min_green_left + draw(rng, r.left_share) * slack;
  const double through = group - lost - left;
  return std::make_pair(left, through);
}

void set_phase(TimingPlan& plan, int p, double green, double min_green, const SamplingRanges& r) {
  PhaseTiming& ph = plan.phase(p);
  ph.green = green;
  ph.min_green = min_green;
  ph.max_green = green;
  ph.yellow = r.yellow;
  ph.all_red = r.all_red;
}

std::optional<TimingPlan> sample_plan(std::mt19937_64& rng, const SamplingRanges& r, double cycle) {
  const double group_min = 2.0 * (r.yellow + r.all_red) + r.min_green_left + r.min_green_through;
  if (cycle < 2.0 * group_min) return std::nullopt;
  TimingPlan plan;
  plan.cycle = cycle;
  plan.offset = std::uniform_real_distribution<double>(0.0, cycle)(rng);
  const double barrier = std::uniform_real_distribution<double>(group_min, cycle - group_min)(rng);
  // Ring 1 then ring 2, arterial group then cross-street group.
  const std::array<std::array<int, 4>, 2> order{{{1, 2, 3, 4}, {5, 6, 7, 8}}};
  for (const auto& ring : order) {
    const auto art = split_group(rng, r, barrier);
    const auto cross = split_group(rng, r, cycle - barrier);
    if (!art || !cross) return std::nullopt;
    set_phase(plan, ring[0], art->first, r.min_green_left, r);
    set_phase(plan, ring[1], art->second, r.min_green_through, r);
    // Ring 1 crosses with 3 (SB left) and 4 (NB through); ring 2 with 7 (NB left) and 8 (SB through).
    set_phase(plan, ring[2], cross->first, r.min_green_left, r);
    set_phase(plan, ring[3], cross->second, r.min_green_through, r);
  }
  return plan;
}

}  // namespace

void validate(const SamplingRanges& r) {
  check(r.cycle, "cycle");
  check(r.left_share, "left_share");
  check(r.accel, "accel");
  check(r.decel, "decel");
  check(r.emergency_decel, "emergency_decel");
  check(r.min_gap, "min_gap");
  check(r.sigma, "sigma");
  check(r.tau, "tau");
  check(r.lc_strategic, "lc_strategic");
  check(r.lc_cooperative, "lc_cooperative");
  check(r.lc_speed_gain, "lc_speed_gain");
  check(r.speed_factor_mean, "speed_factor_mean");
  check(r.speed_factor_stdev, "speed_factor_stdev");
  check(r.arterial_demand, "arterial_demand");
  check(r.side_demand, "side_demand");
  if (r.cycle.lo <= 0.0) throw ConfigError("sampling range cycle must be positive");
  if (r.left_share.lo < 0.0 || r.left_share.hi > 1.0) throw ConfigError("sampling range left_share must lie in [0, 1]");
  if (r.arterial_demand.lo < 0.0 || r.side_demand.lo < 0.0) throw ConfigError("demand ranges must be nonnegative");
  if (r.yellow < 0.0 || r.all_red < 0.0 || r.min_green_left < 0.0 || r.min_green_through <= 0.0) {
    throw ConfigError("sampling ranges: phase durations must be nonnegative and through min green positive");
  }
  if (r.measurement_start < 0.0 || r.measurement_length <= 0.0 ||
      r.measurement_start + r.measurement_length > r.duration) {
    throw ConfigError("sampling ranges: measurement interval must lie inside the duration");
  }
}

TurningRatios real_tmc_template() {
  return {0.04, 0.92, 0.04, 0.04, 0.92, 0.04, 0.25, 0.50, 0.25, 0.25, 0.50, 0.25};
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over a combination of both inputs.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Scenario sample_scenario(std::mt19937_64& rng, const SamplingRanges& r, const CorridorSpec& corridor, TmcMode mode,
                         const std::string& id) {
  validate(r);
  validate(corridor);
  const auto K = static_cast<std::size_t>(corridor.intersections);
  Scenario s;
  s.id = id;
  s.corridor = corridor;
  s.tmc_mode = mode;
  s.duration = r.duration;
  s.measurement_start = r.measurement_start;
  s.measurement_length = r.measurement_length;

  bool ok = false;
  for (int attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
    const auto lo = static_cast<long long>(std::ceil(r.cycle.lo));
    const auto hi = static_cast<long long>(std::floor(r.cycle.hi));
    if (lo > hi) throw ConfigError("sampling range cycle contains no whole second");
    const auto cycle = static_cast<double>(std::uniform_int_distribution<long long>(lo, hi)(rng));
    s.plans.clear();
    ok = true;
    for (std::size_t k = 0; k < K && ok; ++k) {
      auto plan = sample_plan(rng, r, cycle);
      if (plan) {
        s.plans.push_back(*plan);
      } else {
        ok = false;
      }
    }
  }
  if (!ok) {
    throw ConfigError("sample_scenario: no feasible phase split after " + std::to_string(kMaxAttempts) +
                      " attempts; minimum greens exceed the cycle range");
  }

  s.tmc.resize(K);
  for (auto& row : s.tmc) {
    if (mode == TmcMode::kReal) {
      row = real_tmc_template();
    } else {
      for (std::size_t a = 0; a < 4; ++a) {
        const auto alpha = a < 2 ? std::array<double, 3>{1.0, 22.0, 1.0} : std::array<double, 3>{1.0, 2.0, 1.0};
        const auto share = dirichlet(rng, alpha);
        std::copy(share.begin(), share.end(), row.begin() + static_cast<std::ptrdiff_t>(3 * a));
      }
    }
  }

  DrivingBehavior& b = s.behavior;
  b.accel = draw(rng, r.accel);
  b.decel = draw(rng, r.decel);
  b.emergency_decel = draw(rng, r.emergency_decel);
  b.min_gap = draw(rng, r.min_gap);
  b.sigma = draw(rng, r.sigma);
  b.tau = draw(rng, r.tau);
  b.lc_strategic = draw(rng, r.lc_strategic);
  b.lc_cooperative = draw(rng, r.lc_cooperative);
  b.lc_speed_gain = draw(rng, r.lc_speed_gain);
  b.speed_factor_mean = draw(rng, r.speed_factor_mean);
  b.speed_factor_stdev = draw(rng, r.speed_factor_stdev);

  s.demand.eastbound = draw(rng, r.arterial_demand);
  s.demand.westbound = draw(rng, r.arterial_demand);
  s.demand.northbound.resize(K);
  s.demand.southbound.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    s.demand.northbound[k] = draw(rng, r.side_demand);
    s.demand.southbound[k] = draw(rng, r.side_demand);
  }
  s.seed = rng();
  validate(s);
  return s;
}

bool within_ranges(const Scenario& s, const SamplingRanges& r) {
  for (const auto& p : s.plans) {
    if (!r.cycle.contains(p.cycle) || p.offset < 0.0 || p.offset >= p.cycle) return false;
    for (int ph : {1, 5, 3, 7}) {
      if (p.phase(ph).green < r.min_green_left - 1e-9) return false;
    }
    for (int ph : {2, 6, 4, 8}) {
      if (p.phase(ph).green < r.min_green_through - 1e-9) return false;
    }
  }
  const auto& b = s.behavior;
  return r.accel.contains(b.accel) && r.decel.contains(b.decel) && r.emergency_decel.contains(b.emergency_decel) &&
         r.min_gap.contains(b.min_gap) && r.sigma.contains(b.sigma) && r.tau.contains(b.tau) &&
         r.lc_strategic.contains(b.lc_strategic) && r.lc_cooperative.contains(b.lc_cooperative) &&
         r.lc_speed_gain.contains(b.lc_speed_gain) && r.speed_factor_mean.contains(b.speed_factor_mean) &&
         r.speed_factor_stdev.contains(b.speed_factor_stdev) && r.arterial_demand.contains(s.demand.eastbound) &&
         r.arterial_demand.contains(s.demand.westbound);
}

}  // namespace fdgnn
