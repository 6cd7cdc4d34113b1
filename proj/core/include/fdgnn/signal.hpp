#pragma once

#include <bitset>
#include <initializer_list>

#include "fdgnn/corridor.hpp"

namespace fdgnn {

// Set of NEMA phases (1..8) currently showing green.
class PhaseSet {
 public:
  PhaseSet() = default;
  PhaseSet(std::initializer_list<int> phases) {
    for (int p : phases) insert(p);
  }

  void insert(int phase) { bits_.set(static_cast<std::size_t>(phase)); }
  bool contains(int phase) const { return bits_.test(static_cast<std::size_t>(phase)); }
  std::size_t size() const { return bits_.count(); }

  bool operator==(const PhaseSet&) const = default;

 private:
  std::bitset<kPhaseCount + 1> bits_;
};

// Active green phases of both rings at absolute time t >= 0. Throws
// ConfigError for a malformed plan and for negative t.
PhaseSet signal_state(const TimingPlan& plan, double t);

// Same as signal_state() but skips plan validation; for hot loops over a
// plan that was validated once.
PhaseSet signal_state_unchecked(const TimingPlan& plan, double t);

}  // namespace fdgnn
