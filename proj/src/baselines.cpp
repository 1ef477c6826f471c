#include "longfair/baselines.hpp"

#include <cmath>

#include "longfair/objective.hpp"

namespace longfair {

std::vector<std::string> validate_baseline_spec(const BaselineSpec& spec) {
  std::vector<std::string> out;
  if (spec.fairness_budget < 0) out.push_back("fairness_budget must be >= 0");
  if (spec.penalty_weight < 0) out.push_back("penalty_weight must be >= 0");
  if (spec.l2_reg < 0) out.push_back("l2_reg must be >= 0");
  if (spec.ladder_rungs < 1) out.push_back("ladder_rungs must be >= 1");
  if (spec.ladder_step < 1.0) out.push_back("ladder_step must be >= 1");
  return out;
}

PooledData pool_panel(const PanelDataset& dataset) {
  if (dataset.size() == 0 || dataset.steps == 0) {
    throw DataError("pool_panel: empty dataset");
  }
  const Eigen::Index d = dataset.x[0][0].size();
  const Eigen::Index rows =
      static_cast<Eigen::Index>(dataset.size()) * dataset.steps;
  PooledData out;
  out.x.resize(rows, d);
  out.s.resize(rows);
  out.y.resize(rows);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (int t = 0; t < dataset.steps; ++t) {
      out.x.row(r) = dataset.x[i][static_cast<std::size_t>(t)].transpose();
      out.s[r] = dataset.s[i];
      out.y[r] = dataset.y[i][static_cast<std::size_t>(t)];
      ++r;
    }
  }
  return out;
}

namespace {

struct GapParts {
  double signed_gap = 0.0;  // E_{s+}[phi(-h)] + E_{s-}[phi(h)] - 1
  Vec grad;                 // gradient of signed_gap
  bool usable = false;
};

// kind selects the row filter: FMDP uses all rows, FMEO only y = +1 rows.
GapParts gap_parts(const DecisionModel& model, const PooledData& data,
                   BaselineKind kind, bool want_grad) {
  const Eigen::Index n = data.x.rows();
  const Eigen::Index d = data.x.cols();
  const Vec w_x = model.feature_weights();
  KahanSum plus_sum, minus_sum;
  Eigen::Index n_plus = 0, n_minus = 0;
  Vec g_plus = Vec::Zero(d + 2);
  Vec g_minus = Vec::Zero(d + 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (kind == BaselineKind::FMEO && data.y[i] != 1.0) continue;
    const double h = data.x.row(i).dot(w_x) + model.s_weight() * data.s[i] +
                     model.bias();
    if (data.s[i] != 0.0) {
      plus_sum.add(surrogate(-h));
      ++n_plus;
      if (want_grad) {
        const double coef = -surrogate_grad(-h);
        g_plus.head(d) += coef * data.x.row(i).transpose();
        g_plus[d] += coef * data.s[i];
        g_plus[d + 1] += coef;
      }
    } else {
      minus_sum.add(surrogate(h));
      ++n_minus;
      if (want_grad) {
        const double coef = surrogate_grad(h);
        g_minus.head(d) += coef * data.x.row(i).transpose();
        g_minus[d] += coef * data.s[i];
        g_minus[d + 1] += coef;
      }
    }
  }
  GapParts parts;
  if (n_plus == 0 || n_minus == 0) return parts;
  parts.usable = true;
  parts.signed_gap = plus_sum.value() / static_cast<double>(n_plus) +
                     minus_sum.value() / static_cast<double>(n_minus) - 1.0;
  if (want_grad) {
    parts.grad = g_plus / static_cast<double>(n_plus) +
                 g_minus / static_cast<double>(n_minus);
  }
  return parts;
}

// Ridge-logistic fit of the pooled rows with an optional fairness penalty
// weight * max(0, |gap| - budget).
DecisionModel penalized_fit(const PooledData& data, const BaselineSpec& spec,
                            double penalty, const Vec& warm_start) {
  const Eigen::Index d = data.x.cols();
  const Eigen::Index n = data.x.rows();
  const bool fair = spec.kind != BaselineKind::LR && penalty > 0.0;

  ObjectiveFn objective;
  objective.value = [&, penalty, fair](const Vec& theta) {
    const DecisionModel m(theta);
    const Vec w_x = m.feature_weights();
    KahanSum sum;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = data.x.row(i).dot(w_x) + m.s_weight() * data.s[i] +
                       m.bias();
      sum.add(surrogate(data.y[i] * h));
    }
    double value = sum.value() / static_cast<double>(n) +
                   spec.l2_reg * theta.squaredNorm();
    if (fair) {
      const GapParts parts = gap_parts(m, data, spec.kind, false);
      if (parts.usable) {
        const double excess = std::abs(parts.signed_gap) - spec.fairness_budget;
        if (excess > 0.0) value += penalty * excess;
      }
    }
    return value;
  };
  objective.grad = [&, penalty, fair](const Vec& theta) {
    const DecisionModel m(theta);
    const Vec w_x = m.feature_weights();
    Vec g = Vec::Zero(d + 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = data.x.row(i).dot(w_x) + m.s_weight() * data.s[i] +
                       m.bias();
      const double coef = surrogate_grad(data.y[i] * h) * data.y[i];
      g.head(d) += coef * data.x.row(i).transpose();
      g[d] += coef * data.s[i];
      g[d + 1] += coef;
    }
    g /= static_cast<double>(n);
    g += 2.0 * spec.l2_reg * theta;
    if (fair) {
      const GapParts parts = gap_parts(m, data, spec.kind, true);
      if (parts.usable &&
          std::abs(parts.signed_gap) > spec.fairness_budget) {
        g += penalty * (parts.signed_gap > 0.0 ? 1.0 : -1.0) * parts.grad;
      }
    }
    return g;
  };

  return inner_minimize(objective, warm_start, spec.inner);
}

}  // namespace

double surrogate_gap(const DecisionModel& model, const PooledData& data,
                     BaselineKind kind) {
  const GapParts parts = gap_parts(model, data, kind, false);
  if (!parts.usable) {
    throw DataError("surrogate_gap: a protected group has no rows for this "
                    "criterion");
  }
  return std::abs(parts.signed_gap);
}

DecisionModel fit_baseline(const PanelDataset& dataset, const BaselineSpec& spec,
                           std::uint64_t seed) {
  (void)seed;  // the fit is deterministic; kept for interface symmetry
  const auto violations = validate_baseline_spec(spec);
  if (!violations.empty()) {
    std::string msg = "invalid BaselineSpec:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw ConfigError(msg);
  }
  const PooledData data = pool_panel(dataset);
  const Eigen::Index d = data.x.cols();

  if (spec.kind == BaselineKind::FMEO) {
    bool plus_pos = false, minus_pos = false;
    for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
      if (data.y[i] == 1.0) (data.s[i] != 0.0 ? plus_pos : minus_pos) = true;
    }
    if (!plus_pos || !minus_pos) {
      throw DataError("fit_baseline: equal-opportunity criterion needs "
                      "positive labels in both groups");
    }
  }

  DecisionModel model = penalized_fit(data, spec,
                                      spec.kind == BaselineKind::LR
                                          ? 0.0
                                          : spec.penalty_weight,
                                      Vec::Zero(d + 2));
  if (spec.kind == BaselineKind::LR || spec.penalty_weight == 0.0) {
    return model;
  }
  double penalty = spec.penalty_weight;
  for (int rung = 1; rung < spec.ladder_rungs; ++rung) {
    if (surrogate_gap(model, data, spec.kind) <= spec.fairness_budget) break;
    penalty *= spec.ladder_step;
    model = penalized_fit(data, spec, penalty, model.weights);
  }
  return model;
}

std::string baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::LR: return "LR";
    case BaselineKind::FMDP: return "FMDP";
    case BaselineKind::FMEO: return "FMEO";
  }
  return "unknown";
}

}  // namespace longfair
