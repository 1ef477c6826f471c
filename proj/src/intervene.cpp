#include "longfair/intervene.hpp"

#include <cmath>
#include <string>

#include "longfair/parallel.hpp"

namespace longfair {

std::vector<std::string> validate_spec(const TimeLaggedScm& scm,
                                       const InterventionSpec& spec) {
  std::vector<std::string> out = validate_scm(scm);
  if (spec.target_time < 1 || spec.target_time > scm.horizon) {
    out.push_back("target_time " + std::to_string(spec.target_time) +
                  " outside [1, horizon=" + std::to_string(scm.horizon) + "]");
  }
  if (spec.mode == EffectKind::LongTerm && spec.target_time != scm.horizon) {
    out.push_back("long-term intervention must target the horizon");
  }
  if ((spec.hard_value != 0 && spec.hard_value != 1) ||
      (spec.reference_value != 0 && spec.reference_value != 1)) {
    out.push_back("attribute values must be 0 or 1");
  }
  if (spec.soft_model.weights.size() != scm.feature_dim + 2) {
    out.push_back("soft model weight length does not match feature_dim + 2");
  }
  return out;
}

namespace {

void require_valid_spec(const TimeLaggedScm& scm, const InterventionSpec& spec) {
  const auto violations = validate_spec(scm, spec);
  if (violations.empty()) return;
  std::string msg = "invalid intervention:";
  for (const auto& v : violations) msg += "\n  - " + v;
  throw ConfigError(msg);
}

// One ancestral draw of X^{target_time}.
//
// Long-term mode: every S channel feeding the relevant-attribute chain (the
// initial state and any attribute-side input of the transition) carries the
// hard value, while the decision equations score at the reference value (the
// direct S edges into decisions sit outside the long-term path set).
// Short-term mode: the chain is rolled entirely under the reference; the
// hard value enters only the redlining channel of the final transition (and
// the caller's scorer toggle).
Vec roll_one(const TimeLaggedScm& scm, const InterventionSpec& spec,
             const Vec& soft_fw, Rng& rng) {
  const bool long_term = spec.mode == EffectKind::LongTerm;
  const int chain_s = long_term ? spec.hard_value : spec.reference_value;
  Vec x = scm.init_sampler->sample_given(chain_s, rng);
  for (int t = 1; t < spec.target_time; ++t) {
    const double p = decision_prob(spec.soft_model, x, spec.reference_value);
    const int y = rng.bernoulli(p) ? 1 : -1;
    TransitionContext ctx;
    ctx.s_backdrop = chain_s;
    const bool final_step = (t + 1 == spec.target_time);
    ctx.s_redlining = (!long_term && final_step) ? spec.hard_value : chain_s;
    ctx.deployed_feature_weights = &soft_fw;
    x = scm.transition->sample(x, y, ctx, rng);
  }
  return x;
}

}  // namespace

Mat sample_post_intervention(const TimeLaggedScm& scm,
                             const InterventionSpec& spec, int n,
                             std::uint64_t seed) {
  require_valid_spec(scm, spec);
  if (n < 1) throw ConfigError("sample_post_intervention: n must be >= 1");
  Mat out(n, scm.feature_dim);
  const Vec soft_fw = spec.soft_model.feature_weights();
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    Rng rng(derive_seed(seed, "intervene/draw", i));
    out.row(static_cast<Eigen::Index>(i)) =
        roll_one(scm, spec, soft_fw, rng).transpose();
  });
  return out;
}

DiscreteDist exact_post_intervention(const TimeLaggedScm& scm,
                                     const InterventionSpec& spec,
                                     double enumeration_cap) {
  require_valid_spec(scm, spec);
  const InitTable* init = scm.init_sampler->table();
  const TransTable* trans = scm.transition->table();
  if (init == nullptr || trans == nullptr) {
    throw EnumerationCapError(
        "exact_post_intervention requires tabulated init and transition");
  }
  if (init->support != trans->support) {
    throw DataError("init and transition supports differ");
  }
  const std::size_t k = init->support.size();
  // Trajectory count of the expanded sum: states at each step, two decision
  // values between consecutive steps.
  double trajectories = static_cast<double>(k);
  for (int t = 1; t < spec.target_time; ++t) {
    trajectories *= 2.0 * static_cast<double>(k);
    if (trajectories > enumeration_cap) {
      throw EnumerationCapError(
          "exact enumeration would expand " + std::to_string(trajectories) +
          " trajectories, above the cap of " + std::to_string(enumeration_cap));
    }
  }

  const bool long_term = spec.mode == EffectKind::LongTerm;
  const int init_s = long_term ? spec.hard_value : spec.reference_value;
  std::vector<double> p = init->prob[init_s != 0 ? 1 : 0];
  Vec xk(1);
  for (int t = 1; t < spec.target_time; ++t) {
    std::vector<double> next(k, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
      if (p[a] == 0.0) continue;
      xk[0] = init->support[a];
      const double pd =
          decision_prob(spec.soft_model, xk, spec.reference_value);
      for (std::size_t b = 0; b < k; ++b) {
        next[b] += p[a] * (pd * trans->prob[a][1][b] +
                           (1.0 - pd) * trans->prob[a][0][b]);
      }
    }
    p = std::move(next);
  }
  return DiscreteDist{init->support, std::move(p)};
}

double effect(const TimeLaggedScm& scm, const DecisionModel& model,
              const EffectQuery& query, int n, std::uint64_t seed) {
  InterventionSpec spec;
  spec.mode = query.kind;
  spec.reference_value = query.reference;
  spec.soft_model = model;
  spec.target_time = query.target_time;

  if (query.kind == EffectKind::LongTerm) {
    spec.hard_value = query.s_plus;
    const Mat plus = sample_post_intervention(
        scm, spec, n, derive_seed(seed, "effect/plus"));
    spec.hard_value = query.s_minus;
    const Mat minus = sample_post_intervention(
        scm, spec, n, derive_seed(seed, "effect/minus"));
    KahanSum acc_plus, acc_minus;
    for (Eigen::Index i = 0; i < plus.rows(); ++i) {
      acc_plus.add(decision_prob(model, plus.row(i).transpose(), query.reference));
      acc_minus.add(decision_prob(model, minus.row(i).transpose(), query.reference));
    }
    return (acc_plus.value() - acc_minus.value()) / static_cast<double>(n);
  }

  // Short-term: single rollout under the s_minus-side intervention, the
  // attribute toggled only at the scorer.
  spec.hard_value = query.s_minus;
  const Mat xs = sample_post_intervention(scm, spec, n,
                                          derive_seed(seed, "effect/short"));
  KahanSum acc;
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    acc.add(decision_prob(model, xs.row(i).transpose(), query.s_plus) -
            decision_prob(model, xs.row(i).transpose(), query.s_minus));
  }
  return acc.value() / static_cast<double>(n);
}

double exact_effect(const TimeLaggedScm& scm, const DecisionModel& model,
                    const EffectQuery& query, double enumeration_cap) {
  InterventionSpec spec;
  spec.mode = query.kind;
  spec.reference_value = query.reference;
  spec.soft_model = model;
  spec.target_time = query.target_time;

  Vec xk(1);
  auto mean_prob = [&](const DiscreteDist& dist, int s) {
    KahanSum acc;
    for (std::size_t a = 0; a < dist.support.size(); ++a) {
      xk[0] = dist.support[a];
      acc.add(dist.prob[a] * decision_prob(model, xk, s));
    }
    return acc.value();
  };

  if (query.kind == EffectKind::LongTerm) {
    spec.hard_value = query.s_plus;
    const DiscreteDist plus = exact_post_intervention(scm, spec, enumeration_cap);
    spec.hard_value = query.s_minus;
    const DiscreteDist minus = exact_post_intervention(scm, spec, enumeration_cap);
    return mean_prob(plus, query.reference) - mean_prob(minus, query.reference);
  }

  spec.hard_value = query.s_minus;
  const DiscreteDist dist = exact_post_intervention(scm, spec, enumeration_cap);
  return mean_prob(dist, query.s_plus) - mean_prob(dist, query.s_minus);
}

}  // namespace longfair
