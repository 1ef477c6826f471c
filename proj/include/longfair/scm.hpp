#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "longfair/common.hpp"
#include "longfair/model.hpp"
#include "longfair/rng.hpp"

namespace longfair {

// Assigns every feature index a role in the causal graph. Relevant and
// irrelevant must together cover each index exactly once; redlining is the
// subset of relevant features that must not influence decisions directly or
// indirectly.
struct FeaturePartition {
  std::vector<Eigen::Index> relevant;
  std::vector<Eigen::Index> irrelevant;
  std::vector<Eigen::Index> redlining;

  static FeaturePartition all_relevant(Eigen::Index dim) {
    FeaturePartition p;
    for (Eigen::Index j = 0; j < dim; ++j) p.relevant.push_back(j);
    return p;
  }
  bool is_redlining(Eigen::Index j) const {
    for (auto r : redlining)
      if (r == j) return true;
    return false;
  }
  bool has_redlining() const { return !redlining.empty(); }
};

// Tabulated scalar distribution, the discrete backing that makes exact
// enumeration possible.
struct InitTable {
  std::vector<double> support;           // scalar feature values
  std::vector<std::vector<double>> prob;  // prob[s][k], s in {0,1}
};

struct TransTable {
  std::vector<double> support;
  // prob[k][y01][k2] = P(X' = support[k2] | X = support[k], Y = 2*y01 - 1)
  std::vector<std::vector<std::vector<double>>> prob;
};

// Conditional distribution of X^1 given S, plus joint draws of (S, X^1) for
// fresh evaluation populations.
class InitSampler {
 public:
  virtual ~InitSampler() = default;
  virtual Vec sample_given(int s, Rng& rng) const = 0;
  virtual std::pair<int, Vec> sample_joint(Rng& rng) const = 0;
  virtual Eigen::Index dim() const = 0;
  // Non-null when backed by a table; enables exact enumeration.
  virtual const InitTable* table() const { return nullptr; }
};

// Attribute values visible to the environment while stepping the dynamics.
// Path-specific rollouts pin these to the intervention's reference value;
// short-term interventions with redlining features route the hard value
// through s_redlining only.
struct TransitionContext {
  int s_backdrop = 0;
  int s_redlining = 0;
  // Feature-weight block of the currently deployed decision model.
  const Vec* deployed_feature_weights = nullptr;
};

// Markov kernel P(X^{t+1} | X^t, Y^t). Time-homogeneous: the same rule is
// applied at every step.
class TransitionKernel {
 public:
  virtual ~TransitionKernel() = default;
  virtual Vec sample(const Vec& x, int y, const TransitionContext& ctx,
                     Rng& rng) const = 0;
  virtual const TransTable* table() const { return nullptr; }
};

class TimeLaggedScm;

// Lending feedback dynamics: repaid approvals push features along the
// deployed model's weights, defaulted approvals push the other way, and every
// step adds the group base increment b = s*b1 + (1-s)*b0.
class LendingDynamics : public TransitionKernel {
 public:
  LendingDynamics(double eps_update, double b0, double b1,
                  DecisionModel truth_model, FeaturePartition partition);

  // Deterministic branch of the update rule, used with externally drawn
  // decisions and repayments.
  Vec update(const Vec& x, int y_hat, int y_repay, int s_base) const;

  // Per-component base increment when redlining features see a different
  // attribute value than the rest.
  Vec update(const Vec& x, int y_hat, int y_repay,
             const TransitionContext& ctx) const;

  // Kernel view: y is the decision; the repayment is drawn internally from
  // the ground-truth model.
  Vec sample(const Vec& x, int y, const TransitionContext& ctx,
             Rng& rng) const override;

  double eps_update() const { return eps_update_; }
  double b0() const { return b0_; }
  double b1() const { return b1_; }
  const DecisionModel& truth_model() const { return truth_model_; }

 private:
  double base_increment(int s) const { return s != 0 ? b1_ : b0_; }

  double eps_update_;
  double b0_;
  double b1_;
  DecisionModel truth_model_;
  FeaturePartition partition_;
};

// Tabulated kernel over a scalar feature; ignores the attribute context.
class TabularTransition : public TransitionKernel {
 public:
  explicit TabularTransition(TransTable table) : table_(std::move(table)) {}
  Vec sample(const Vec& x, int y, const TransitionContext& ctx,
             Rng& rng) const override;
  const TransTable* table() const override { return &table_; }

 private:
  TransTable table_;
};

class TabularInit : public InitSampler {
 public:
  // s_plus_prob is the marginal P(S = 1) used for joint draws.
  TabularInit(InitTable table, double s_plus_prob = 0.5)
      : table_(std::move(table)), s_plus_prob_(s_plus_prob) {}
  Vec sample_given(int s, Rng& rng) const override;
  std::pair<int, Vec> sample_joint(Rng& rng) const override;
  Eigen::Index dim() const override { return 1; }
  const InitTable* table() const override { return &table_; }

 private:
  InitTable table_;
  double s_plus_prob_;
};

// Group-conditional Gaussian init for the synthetic population.
class GaussianInit : public InitSampler {
 public:
  GaussianInit(Vec mean_minus, Vec mean_plus, Mat cov_minus, Mat cov_plus);
  Vec sample_given(int s, Rng& rng) const override;
  std::pair<int, Vec> sample_joint(Rng& rng) const override;
  Eigen::Index dim() const override { return mean_[0].size(); }

 private:
  Vec mean_[2];
  Mat chol_[2];  // lower Cholesky factors
};

// Fixed (S, X^1) rows ingested from a file; joint draws bootstrap rows,
// conditional draws bootstrap within the group.
class SeedPopulationInit : public InitSampler {
 public:
  SeedPopulationInit(std::vector<int> s, std::vector<Vec> x);
  Vec sample_given(int s, Rng& rng) const override;
  std::pair<int, Vec> sample_joint(Rng& rng) const override;
  Eigen::Index dim() const override;

  std::size_t size() const { return s_.size(); }
  int s_at(std::size_t i) const { return s_[i]; }
  const Vec& x_at(std::size_t i) const { return x_[i]; }

 private:
  std::vector<int> s_;
  std::vector<Vec> x_;
  std::vector<std::size_t> group_rows_[2];
};

// The time-lagged structural causal model every other module consumes.
struct TimeLaggedScm {
  Eigen::Index feature_dim = 0;
  int horizon = 0;  // t*
  std::shared_ptr<const InitSampler> init_sampler;
  std::shared_ptr<const TransitionKernel> transition;
  DecisionModel truth_model;
  FeaturePartition partition;

  // Same model with the horizon truncated to t; used for per-time-step
  // long-term effects.
  TimeLaggedScm with_horizon(int t) const {
    TimeLaggedScm copy = *this;
    copy.horizon = t;
    return copy;
  }
};

// Every invariant violation found; empty means the model is well formed.
std::vector<std::string> validate_scm(const TimeLaggedScm& scm);

// Throws ConfigError listing all violations if the model is malformed.
void require_valid(const TimeLaggedScm& scm);

// Per-individual trajectories (S, X^t, Y^t) for t = 1..l. Predicted
// decisions made during generation are recorded alongside the repayments.
struct PanelDataset {
  std::vector<int> s;                 // 0 or 1 per individual
  std::vector<std::vector<Vec>> x;    // x[i][t-1]
  std::vector<std::vector<int>> y;    // repayment labels in {-1,+1}
  std::vector<std::vector<int>> y_hat;
  int steps = 0;  // l

  std::size_t size() const { return s.size(); }
};

std::vector<std::string> validate_panel(const PanelDataset& panel);

}  // namespace longfair
