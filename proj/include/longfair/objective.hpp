#pragma once

#include <functional>
#include <vector>

#include "longfair/model.hpp"

namespace longfair {

// Convex combination weights, thresholds and ridge strength of the combined
// performative objective.
struct LossWeights {
  double lambda_u = 0.6;
  double lambda_l = 0.2;
  double lambda_s = 0.2;
  double tau_l = 0.0;
  double tau_t = 0.0;
  double l2_reg = 1e-3;
  // The printed short-term loss takes both expectations over the
  // s-minus-intervened distribution. This switch moves the first expectation
  // onto the s-plus-intervened samples for sensitivity analysis.
  bool shortterm_plus_variant = false;
};

std::vector<std::string> validate_weights(const LossWeights& w);

// Samples frozen under the previous iterate; the inner problem of repeated
// risk minimization is an ordinary minimization over these.
struct UtilitySlice {
  Mat x;   // rows of X^t
  Vec s;   // 0/1 per row
  Vec y;   // -1/+1 per row
};

struct FrozenBatch {
  std::vector<UtilitySlice> utility;  // index t-1, t = 1..t*
  Mat longterm_plus;                  // draws of X^{t*}(s+_pi, theta_i)
  Mat longterm_minus;                 // draws of X^{t*}(s-_pi, theta_i)
  std::vector<Mat> shortterm_minus;   // draws of X^t(s-_pi_t, theta_i) per t
  std::vector<Mat> shortterm_plus;    // companion s+ draws

  int horizon() const { return static_cast<int>(utility.size()); }
};

// Logistic surrogate phi(z) = log(1 + exp(-z)), overflow safe.
double surrogate(double z);
// d/dz surrogate = -sigmoid(-z).
double surrogate_grad(double z);

// Utility loss: sum over t of the per-step mean of phi(y * h), plus the
// ridge term (the regularizer lives here, once).
double loss_utility(const DecisionModel& model, const FrozenBatch& batch,
                    double l2_reg);

struct HingedTerm {
  double raw = 0.0;    // bracketed term before the hinge
  double value = 0.0;  // max(0, raw)
};

HingedTerm loss_longterm(const DecisionModel& model, const FrozenBatch& batch,
                         double tau_l);

struct ShortTermLoss {
  double value = 0.0;           // mean over t of the hinged per-step terms
  std::vector<double> raw;      // per-step raw terms
};

ShortTermLoss loss_shortterm(const DecisionModel& model,
                             const FrozenBatch& batch, double tau_t,
                             bool plus_variant = false);

struct LossBreakdown {
  double utility = 0.0;
  double longterm = 0.0;
  double shortterm = 0.0;
  double total = 0.0;
  double longterm_raw = 0.0;
  std::vector<double> shortterm_raw;
};

LossBreakdown total_loss(const DecisionModel& model, const FrozenBatch& batch,
                         const LossWeights& weights);

// Analytic gradient of the combined loss; at hinge kinks the zero
// subgradient of the inactive side is used.
Vec total_grad(const DecisionModel& model, const FrozenBatch& batch,
               const LossWeights& weights);

// Value/gradient closure pair; the inner optimizer consumes these so tests
// can swap in synthetic objectives.
struct ObjectiveFn {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
};

// Borrows batch and weights; both must outlive the returned closures.
ObjectiveFn make_objective(const FrozenBatch& batch, const LossWeights& weights);

}  // namespace longfair
