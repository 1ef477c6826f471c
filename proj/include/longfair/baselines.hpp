#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "longfair/scm.hpp"
#include "longfair/trainer.hpp"

namespace longfair {

enum class BaselineKind { LR, FMDP, FMEO };

// Static baselines trained on the pooled temporal dataset. FMDP/FMEO add a
// penalized surrogate fairness term; the penalty weight is escalated on a
// ladder until the measured gap falls under the budget.
struct BaselineSpec {
  BaselineKind kind = BaselineKind::LR;
  double fairness_budget = 0.02;  // target bound on the surrogate gap
  double penalty_weight = 1.0;    // first rung of the ladder
  double l2_reg = 1e-3;
  InnerOptSpec inner;
  int ladder_rungs = 6;       // penalty multiplies by ladder_step per rung
  double ladder_step = 4.0;
};

std::vector<std::string> validate_baseline_spec(const BaselineSpec& spec);

struct PooledData {
  Mat x;  // every (x^t) row across individuals and steps
  Vec s;
  Vec y;
};

PooledData pool_panel(const PanelDataset& dataset);

// Surrogate demographic-parity gap |E_{s+}[phi(-h)] + E_{s-}[phi(h)] - 1| on
// the pooled rows; FMEO restricts both expectations to y = +1 rows.
double surrogate_gap(const DecisionModel& model, const PooledData& data,
                     BaselineKind kind);

DecisionModel fit_baseline(const PanelDataset& dataset, const BaselineSpec& spec,
                           std::uint64_t seed);

std::string baseline_name(BaselineKind kind);

}  // namespace longfair
