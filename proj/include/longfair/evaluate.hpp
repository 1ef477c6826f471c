#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "longfair/intervene.hpp"
#include "longfair/scm.hpp"

namespace longfair {

// Per-time-step deployment metrics for one model. Long-term effects are
// reported at every t by truncating the horizon of the effect query to t, so
// the trend over time is visible.
struct EvalReport {
  std::string algorithm;
  std::vector<double> accuracy;
  std::vector<double> short_effect;
  std::vector<double> long_effect;
  int horizon = 0;
  int n = 0;
  std::uint64_t seed = 0;
  std::uint64_t model_hash = 0;
};

// Rolls a fresh population forward under the evaluated model's hard
// decisions with ground-truth repayments, measuring per-step accuracy; the
// fairness effects are measured with the path-specific machinery using the
// evaluated model as the soft intervention. Pure: neither the model nor the
// SCM is mutated.
EvalReport deploy_and_measure(const TimeLaggedScm& scm,
                              const DecisionModel& model, int n,
                              std::uint64_t seed,
                              const std::string& algorithm_name = "model");

// CSV table: one row per (algorithm, metric), one column per time step,
// fixed-point with three decimals.
std::string emit_table(const std::vector<EvalReport>& reports);

// Variant with replicate spread: appends one std column per time step.
std::string emit_table(const std::vector<EvalReport>& means,
                       const std::vector<EvalReport>& stds);

// Least-squares line fit; the slope sign is the monotone trend detector.
struct LinFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LinFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys);

// Fit of values against t = 1..n.
LinFit trend(const std::vector<double>& values);

}  // namespace longfair
