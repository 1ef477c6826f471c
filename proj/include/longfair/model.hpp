#pragma once

#include <cmath>
#include <limits>

#include "longfair/common.hpp"

namespace longfair {

// Numerically stable sigmoid, result strictly inside (0, 1) for any finite z.
inline double sigmoid(double z) {
  double p;
  if (z >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    p = e / (1.0 + e);
  }
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  if (p < lo) return lo;
  if (p > hi) return hi;
  return p;
}

// Linear scorer over (features, protected attribute, bias). The weight
// vector has length feature_dim + 2: feature weights first, then the weight
// on the protected attribute, then the bias.
struct DecisionModel {
  Vec weights;

  DecisionModel() = default;
  explicit DecisionModel(Vec w) : weights(std::move(w)) {}

  static DecisionModel zeros(Eigen::Index feature_dim) {
    return DecisionModel(Vec::Zero(feature_dim + 2));
  }

  Eigen::Index feature_dim() const { return weights.size() - 2; }

  // View of the feature-weight block; this is the theta that enters the
  // feedback update rule.
  auto feature_weights() const { return weights.head(feature_dim()); }
  double s_weight() const { return weights[weights.size() - 2]; }
  double bias() const { return weights[weights.size() - 1]; }
};

// h_theta(x, s) = w_x . x + w_s * s + b
double score(const DecisionModel& model, const Vec& x, int s);

// sigmoid(h_theta(x, s)), strictly inside (0, 1).
double decision_prob(const DecisionModel& model, const Vec& x, int s);

// Hard decision in {-1, +1}: +1 iff h >= 0.
inline int hard_decision(double score_value) { return score_value >= 0.0 ? 1 : -1; }

// Gradient of the score w.r.t. the weights: (x, s, 1).
Vec score_gradient(const Vec& x, int s);

}  // namespace longfair
