#include "longfair/model.hpp"

#include <string>

namespace longfair {

double score(const DecisionModel& model, const Vec& x, int s) {
  if (x.size() != model.feature_dim()) {
    throw DimensionError("score: feature vector has length " +
                         std::to_string(x.size()) + " but model expects " +
                         std::to_string(model.feature_dim()));
  }
  return model.feature_weights().dot(x) + model.s_weight() * s + model.bias();
}

double decision_prob(const DecisionModel& model, const Vec& x, int s) {
  return sigmoid(score(model, x, s));
}

Vec score_gradient(const Vec& x, int s) {
  Vec g(x.size() + 2);
  g.head(x.size()) = x;
  g[x.size()] = static_cast<double>(s);
  g[x.size() + 1] = 1.0;
  return g;
}

}  // namespace longfair
