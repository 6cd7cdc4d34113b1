#include "fdgnn/signal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fdgnn/errors.hpp"

namespace fdgnn {

namespace {
constexpr double kTolerance = 1e-9;

bool is_arterial(int p) { return std::find(kArterialPhases.begin(), kArterialPhases.end(), p) != kArterialPhases.end(); }
}  // namespace

double TimingPlan::barrier_time() const {
  double t = 0.0;
  for (std::size_t i = 0; i < 2; ++i) t += phase(ring_sequence[0][i]).interval();
  return t;
}

void validate(const TimingPlan& plan) {
  if (!(plan.cycle > 0.0)) throw ConfigError("timing plan: cycle must be positive");
  if (plan.offset < 0.0 || plan.offset >= plan.cycle) {
    throw ConfigError("timing plan: offset " + std::to_string(plan.offset) + " outside [0, cycle)");
  }
  for (int p = 1; p <= kPhaseCount; ++p) {
    const PhaseTiming& ph = plan.phase(p);
    const std::string name = "timing plan: phase " + std::to_string(p);
    if (ph.green < 0.0 || ph.yellow < 0.0 || ph.all_red < 0.0 || ph.min_green < 0.0) {
      throw ConfigError(name + " has a negative duration");
    }
    if (ph.min_green > ph.max_green + kTolerance) throw ConfigError(name + ": min green exceeds max green");
    if (ph.green < ph.min_green - kTolerance || ph.green > ph.max_green + kTolerance) {
      throw ConfigError(name + ": green outside [min green, max green]");
    }
  }
  if (!(plan.phase(2).green > 0.0) || !(plan.phase(6).green > 0.0)) {
    throw ConfigError("timing plan: coordinated phases 2 and 6 must have green time");
  }
  for (std::size_t ring = 0; ring < 2; ++ring) {
    const int first = ring == 0 ? 1 : 5;
    std::array<bool, 4> seen{};
    double total = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const int p = plan.ring_sequence[ring][i];
      if (p < first || p > first + 3 || seen[static_cast<std::size_t>(p - first)]) {
        throw ConfigError("timing plan: ring " + std::to_string(ring + 1) + " sequence must be a permutation of " +
                          std::to_string(first) + ".." + std::to_string(first + 3));
      }
      seen[static_cast<std::size_t>(p - first)] = true;
      if ((i < 2) != is_arterial(p)) {
        throw ConfigError("timing plan: arterial phases must precede the barrier in ring " + std::to_string(ring + 1));
      }
      total += plan.phase(p).interval();
    }
    if (std::abs(total - plan.cycle) > kTolerance * std::max(1.0, plan.cycle)) {
      throw ConfigError("timing plan: ring " + std::to_string(ring + 1) + " intervals sum to " + std::to_string(total) +
                        ", cycle is " + std::to_string(plan.cycle));
    }
  }
  double barrier2 = 0.0;
  for (std::size_t i = 0; i < 2; ++i) barrier2 += plan.phase(plan.ring_sequence[1][i]).interval();
  if (std::abs(barrier2 - plan.barrier_time()) > kTolerance * std::max(1.0, plan.cycle)) {
    throw ConfigError("timing plan: rings reach the barrier at different times");
  }
}

PhaseSet signal_state_unchecked(const TimingPlan& plan, double t) {
  double local = std::fmod(t - plan.offset, plan.cycle);
  if (local < 0.0) local += plan.cycle;
  PhaseSet green;
  for (const auto& ring : plan.ring_sequence) {
    double start = 0.0;
    for (int p : ring) {
      const PhaseTiming& ph = plan.phase(p);
      if (local >= start && local < start + ph.green) {
        green.insert(p);
        break;
      }
      start += ph.interval();
    }
  }
  return green;
}

PhaseSet signal_state(const TimingPlan& plan, double t) {
  if (t < 0.0) throw ConfigError("signal_state: negative time");
  validate(plan);
  return signal_state_unchecked(plan, t);
}

}  // namespace fdgnn
