#include "longfair/objective.hpp"

#include <cmath>
#include <string>

namespace longfair {

std::vector<std::string> validate_weights(const LossWeights& w) {
  std::vector<std::string> out;
  if (w.lambda_u < 0 || w.lambda_l < 0 || w.lambda_s < 0) {
    out.push_back("lambda weights must be nonnegative");
  }
  if (std::abs(w.lambda_u + w.lambda_l + w.lambda_s - 1.0) > 1e-9) {
    out.push_back("lambda weights must sum to 1");
  }
  if (w.tau_l < 0 || w.tau_t < 0) out.push_back("thresholds must be nonnegative");
  if (w.l2_reg < 0) out.push_back("l2_reg must be nonnegative");
  return out;
}

double surrogate(double z) {
  if (z >= 0.0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

double surrogate_grad(double z) {
  // -sigmoid(-z), computed without the clamp used for decision probabilities.
  if (z >= 0.0) return -std::exp(-z) / (1.0 + std::exp(-z));
  return -1.0 / (1.0 + std::exp(z));
}

namespace {

void check_dim(const DecisionModel& model, Eigen::Index d, const char* what) {
  if (model.feature_dim() != d) {
    throw DimensionError(std::string(what) + ": model feature dim " +
                         std::to_string(model.feature_dim()) +
                         " does not match sample dim " + std::to_string(d));
  }
}

// Mean of phi(sign * h(x, s_const)) over the rows of xs, with its gradient
// w.r.t. the weights accumulated into grad (may be null). Fixed summation
// order with compensation, so the result does not depend on batching.
double mean_surrogate(const Mat& xs, double s_const, int sign,
                      const DecisionModel& model, Vec* grad) {
  const Eigen::Index n = xs.rows();
  const Eigen::Index d = xs.cols();
  const Vec w_x = model.feature_weights();
  const double offset = model.s_weight() * s_const + model.bias();
  KahanSum value;
  Vec gx = Vec::Zero(d);
  KahanSum gs, gb;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = xs.row(i).dot(w_x) + offset;
    const double z = sign * h;
    value.add(surrogate(z));
    if (grad != nullptr) {
      const double coef = surrogate_grad(z) * sign;
      gx.noalias() += coef * xs.row(i).transpose();
      gs.add(coef * s_const);
      gb.add(coef);
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  if (grad != nullptr) {
    grad->head(d) += inv_n * gx;
    (*grad)[d] += inv_n * gs.value();
    (*grad)[d + 1] += inv_n * gb.value();
  }
  return value.value() * inv_n;
}

double utility_core(const DecisionModel& model, const FrozenBatch& batch,
                    double l2_reg, Vec* grad) {
  if (batch.utility.empty()) {
    throw DataError("loss_utility: batch has no utility samples");
  }
  KahanSum total;
  for (std::size_t t = 0; t < batch.utility.size(); ++t) {
    const auto& slice = batch.utility[t];
    const Eigen::Index n = slice.x.rows();
    if (n == 0) {
      throw DataError("loss_utility: empty utility slice at t=" +
                      std::to_string(t + 1));
    }
    check_dim(model, slice.x.cols(), "loss_utility");
    const Vec w_x = model.feature_weights();
    KahanSum step;
    Vec gx = Vec::Zero(slice.x.cols());
    KahanSum gs, gb;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = slice.x.row(i).dot(w_x) + model.s_weight() * slice.s[i] +
                       model.bias();
      const double z = slice.y[i] * h;
      step.add(surrogate(z));
      if (grad != nullptr) {
        const double coef = surrogate_grad(z) * slice.y[i];
        gx.noalias() += coef * slice.x.row(i).transpose();
        gs.add(coef * slice.s[i]);
        gb.add(coef);
      }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    total.add(step.value() * inv_n);
    if (grad != nullptr) {
      grad->head(slice.x.cols()) += inv_n * gx;
      (*grad)[slice.x.cols()] += inv_n * gs.value();
      (*grad)[slice.x.cols() + 1] += inv_n * gb.value();
    }
  }
  if (grad != nullptr) *grad += 2.0 * l2_reg * model.weights;
  return total.value() + l2_reg * model.weights.squaredNorm();
}

HingedTerm longterm_core(const DecisionModel& model, const FrozenBatch& batch,
                         double tau_l, Vec* grad) {
  if (batch.longterm_plus.rows() == 0 || batch.longterm_minus.rows() == 0) {
    throw DataError("loss_longterm: empty long-term sample set");
  }
  check_dim(model, batch.longterm_plus.cols(), "loss_longterm");
  Vec g = Vec::Zero(model.weights.size());
  Vec* gp = grad != nullptr ? &g : nullptr;
  // Both expectations score at the reference attribute value s- = 0.
  const double a = mean_surrogate(batch.longterm_plus, 0.0, -1, model, gp);
  const double b = mean_surrogate(batch.longterm_minus, 0.0, +1, model, gp);
  HingedTerm term;
  term.raw = 0.5 * (a + b - 1.0 - tau_l);
  term.value = term.raw > 0.0 ? term.raw : 0.0;
  if (grad != nullptr && term.raw > 0.0) *grad += 0.5 * g;
  return term;
}

ShortTermLoss shortterm_core(const DecisionModel& model,
                             const FrozenBatch& batch, double tau_t,
                             bool plus_variant, Vec* grad) {
  const std::size_t steps = batch.shortterm_minus.size();
  if (steps == 0) throw DataError("loss_shortterm: no time slices");
  ShortTermLoss out;
  out.raw.reserve(steps);
  KahanSum value;
  const double inv_steps = 1.0 / static_cast<double>(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const Mat& minus = batch.shortterm_minus[t];
    if (minus.rows() == 0) {
      throw DataError("loss_shortterm: missing time slice t=" +
                      std::to_string(t + 1));
    }
    const Mat* first = &minus;
    if (plus_variant) {
      if (t >= batch.shortterm_plus.size() ||
          batch.shortterm_plus[t].rows() == 0) {
        throw DataError("loss_shortterm: plus-variant requested but s+ slice "
                        "t=" + std::to_string(t + 1) + " is missing");
      }
      first = &batch.shortterm_plus[t];
    }
    check_dim(model, minus.cols(), "loss_shortterm");
    Vec g = Vec::Zero(model.weights.size());
    Vec* gp = grad != nullptr ? &g : nullptr;
    const double a = mean_surrogate(*first, 1.0, -1, model, gp);
    const double b = mean_surrogate(minus, 0.0, +1, model, gp);
    const double raw = a + b - 1.0 - tau_t;
    out.raw.push_back(raw);
    if (raw > 0.0) {
      value.add(raw * inv_steps);
      if (grad != nullptr) *grad += inv_steps * g;
    }
  }
  out.value = value.value();
  return out;
}

}  // namespace

double loss_utility(const DecisionModel& model, const FrozenBatch& batch,
                    double l2_reg) {
  return utility_core(model, batch, l2_reg, nullptr);
}

HingedTerm loss_longterm(const DecisionModel& model, const FrozenBatch& batch,
                         double tau_l) {
  return longterm_core(model, batch, tau_l, nullptr);
}

ShortTermLoss loss_shortterm(const DecisionModel& model,
                             const FrozenBatch& batch, double tau_t,
                             bool plus_variant) {
  return shortterm_core(model, batch, tau_t, plus_variant, nullptr);
}

LossBreakdown total_loss(const DecisionModel& model, const FrozenBatch& batch,
                         const LossWeights& weights) {
  const auto violations = validate_weights(weights);
  if (!violations.empty()) {
    std::string msg = "invalid LossWeights:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw ConfigError(msg);
  }
  LossBreakdown out;
  out.utility = utility_core(model, batch, weights.l2_reg, nullptr);
  const HingedTerm lt = longterm_core(model, batch, weights.tau_l, nullptr);
  out.longterm = lt.value;
  out.longterm_raw = lt.raw;
  const ShortTermLoss st = shortterm_core(model, batch, weights.tau_t,
                                          weights.shortterm_plus_variant,
                                          nullptr);
  out.shortterm = st.value;
  out.shortterm_raw = st.raw;
  out.total = weights.lambda_u * out.utility + weights.lambda_l * out.longterm +
              weights.lambda_s * out.shortterm;
  return out;
}

Vec total_grad(const DecisionModel& model, const FrozenBatch& batch,
               const LossWeights& weights) {
  Vec gu = Vec::Zero(model.weights.size());
  Vec gl = Vec::Zero(model.weights.size());
  Vec gs = Vec::Zero(model.weights.size());
  utility_core(model, batch, weights.l2_reg, &gu);
  longterm_core(model, batch, weights.tau_l, &gl);
  shortterm_core(model, batch, weights.tau_t, weights.shortterm_plus_variant,
                 &gs);
  return weights.lambda_u * gu + weights.lambda_l * gl + weights.lambda_s * gs;
}

ObjectiveFn make_objective(const FrozenBatch& batch,
                           const LossWeights& weights) {
  ObjectiveFn fn;
  fn.value = [&batch, weights](const Vec& theta) {
    return total_loss(DecisionModel(theta), batch, weights).total;
  };
  fn.grad = [&batch, weights](const Vec& theta) {
    return total_grad(DecisionModel(theta), batch, weights);
  };
  return fn;
}

}  // namespace longfair
