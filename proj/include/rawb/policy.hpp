#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "rawb/augment.hpp"
#include "rawb/models.hpp"
#include "rawb/rng.hpp"
#include "rawb/types.hpp"
#include "rawb/whittle.hpp"

namespace rawb {

// Joint state at a decision epoch: per-arm chain state plus per-arm
// cumulative-reward lattice code.
struct SystemState {
  int t = 0;
  std::vector<int> states;
  std::vector<std::int64_t> cum_codes;
};

struct ActivationDecision {
  std::vector<int> active;  // sorted arm ids
  Vector scores;            // per-arm ranking value

  bool is_active(int arm) const {
    for (const int a : active) {
      if (a == arm) return true;
    }
    return false;
  }
};

// Activates the budget highest scores, ties resolved toward the lower arm id.
// With allow_idle set, arms scoring below zero are left passive even when
// budget remains.
ActivationDecision pick_top(const Vector& scores, int budget, bool allow_idle);

// Risk-aware index rule: rank arms by their index at the current
// (state, cumulative level, t) and activate the top budget.
ActivationDecision rawip_decide(const std::vector<WhittleTable>& tables,
                                const SystemState& state, int budget,
                                bool allow_idle = false);

// Stage-wise-utility baseline rule: same ranking over (state, t) indices.
ActivationDecision ssup_decide(const std::vector<StageIndexTable>& tables,
                               const SystemState& state, int budget,
                               bool allow_idle = false);

// Anything the simulator can roll out.
class SystemPolicy {
 public:
  virtual ~SystemPolicy() = default;
  virtual ActivationDecision decide(const SystemState& state, Rng& rng) const = 0;
};

class IndexPolicy final : public SystemPolicy {
 public:
  IndexPolicy(std::vector<WhittleTable> tables, int budget, bool allow_idle = false)
      : tables_(std::move(tables)), budget_(budget), allow_idle_(allow_idle) {}

  ActivationDecision decide(const SystemState& state, Rng&) const override {
    return rawip_decide(tables_, state, budget_, allow_idle_);
  }
  const std::vector<WhittleTable>& tables() const { return tables_; }

 private:
  std::vector<WhittleTable> tables_;
  int budget_;
  bool allow_idle_;
};

class StageIndexPolicy final : public SystemPolicy {
 public:
  StageIndexPolicy(std::vector<StageIndexTable> tables, int budget, bool allow_idle = false)
      : tables_(std::move(tables)), budget_(budget), allow_idle_(allow_idle) {}

  ActivationDecision decide(const SystemState& state, Rng&) const override {
    return ssup_decide(tables_, state, budget_, allow_idle_);
  }

 private:
  std::vector<StageIndexTable> tables_;
  int budget_;
  bool allow_idle_;
};

// Uniformly random budget-sized subset each step.
class RandomPolicy final : public SystemPolicy {
 public:
  explicit RandomPolicy(int n_arms, int budget) : n_arms_(n_arms), budget_(budget) {}
  ActivationDecision decide(const SystemState& state, Rng& rng) const override;

 private:
  int n_arms_;
  int budget_;
};

// Exact joint dynamic program over the full product state space, subject to
// the hard per-step budget.  Feasible only for tiny instances; construction
// refuses instances whose table exceeds max_table_entries.
struct OracleSolution {
  double value = 0.0;  // optimal expected sum of per-arm utilities
  int horizon = 0;
  int n_arms = 0;
  int budget = 0;
  std::vector<RewardLattice> lattices;
  // Per t: per-arm level counts, mixed-radix strides, and the best action
  // mask per joint (state, level) cell.
  struct Stage {
    std::vector<int> level_counts;
    std::vector<std::size_t> strides;  // row-major over arms
    std::vector<std::uint32_t> best_mask;
    std::size_t n_cells = 0;
  };
  std::vector<Stage> stages;

  std::uint32_t mask_at(const SystemState& state) const;
};

OracleSolution exact_oracle(const BanditInstance& instance,
                            std::size_t max_table_entries = 5'000'000);

class OraclePolicy final : public SystemPolicy {
 public:
  explicit OraclePolicy(std::shared_ptr<const OracleSolution> solution)
      : solution_(std::move(solution)) {}
  ActivationDecision decide(const SystemState& state, Rng&) const override;

 private:
  std::shared_ptr<const OracleSolution> solution_;
};

}  // namespace rawb
