#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "longfair/intervene.hpp"
#include "longfair/objective.hpp"
#include "longfair/scm.hpp"

namespace longfair {

// Deterministic full-batch gradient descent with Armijo backtracking.
struct InnerOptSpec {
  double step_size = 1.0;  // initial trial step
  int max_steps = 2000;
  double grad_tol = 1e-7;
  double backtrack = 0.5;
  double armijo_c = 1e-4;
  double min_step = 1e-14;
};

struct RrmConfig {
  double delta = 1e-4;      // convergence threshold on the parameter move
  int max_outer_iters = 50;
  InnerOptSpec inner;
  int mc_samples = 10000;   // per post-intervention distribution
  std::uint64_t seed = 0;
  // Common random numbers: every outer iteration reuses the same sampling
  // substreams, making the iteration map deterministic in theta. Fresh draws
  // per iteration are available for comparison but leave a Monte Carlo noise
  // floor under the parameter moves.
  enum class Resample { CommonRandomNumbers, FreshPerIteration };
  Resample resample = Resample::CommonRandomNumbers;
};

struct RrmIteration {
  int iter = 0;       // 1-based
  Vec theta;          // parameters after this iteration's minimization
  LossBreakdown loss; // evaluated at theta on this iteration's frozen batch
  double delta = 0.0; // parameter move from the previous iterate
  double wall_ms = 0.0;
};

struct RrmTrace {
  Vec theta0;
  std::vector<RrmIteration> iterations;
  bool converged = false;
  int converged_iter = -1;  // -1 when the iteration cap was hit
};

// Thrown when the inner minimization produces non-finite values; carries the
// iterations completed so far.
class TrainerDivergence : public NumericsError {
 public:
  TrainerDivergence(const std::string& msg, RrmTrace partial)
      : NumericsError(msg), trace(std::move(partial)) {}
  RrmTrace trace;
};

// theta_{i+1} = argmin of the frozen-batch objective, warm started.
DecisionModel inner_minimize(const ObjectiveFn& objective, const Vec& theta_init,
                             const InnerOptSpec& spec);

// Samples every post-intervention distribution the losses need under a fixed
// deployed model theta.
FrozenBatch freeze_batch(const TimeLaggedScm& scm, const PanelDataset& dataset,
                         const DecisionModel& deployed, int mc_samples,
                         std::uint64_t seed);

// Observational analog of freeze_batch: fairness sample sets are taken from
// the dataset itself, no rollout. This realizes training "without the soft
// intervention" for the initial model.
FrozenBatch observational_batch(const PanelDataset& dataset, int horizon);

// Initial model: minimizes the combined loss with every expectation taken on
// the recorded data.
DecisionModel init_model(const PanelDataset& dataset, const LossWeights& weights,
                         int horizon, const InnerOptSpec& inner,
                         std::vector<std::string>* warnings = nullptr);

// Repeated risk minimization: resample under the current model, minimize on
// the frozen batch, stop when the parameter move drops below delta.
std::pair<DecisionModel, RrmTrace> rrm_fit(const TimeLaggedScm& scm,
                                           const PanelDataset& dataset,
                                           const LossWeights& weights,
                                           const RrmConfig& cfg);

// Operational stability certificate: resamples under `model` and re-minimizes
// once; returns the resulting parameter move.
double stability_gap(const TimeLaggedScm& scm, const PanelDataset& dataset,
                     const LossWeights& weights, const RrmConfig& cfg,
                     const DecisionModel& model);

}  // namespace longfair
