#pragma once

// Test-only oracles. Everything here recomputes expected values through an
// independent route from the library code it checks: brute-force trajectory
// enumeration, central finite differences, a Newton solver, and closed-form
// transport distances.

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "longfair/datagen.hpp"
#include "longfair/intervene.hpp"
#include "longfair/objective.hpp"
#include "longfair/scm.hpp"

namespace oracle {

using longfair::DecisionModel;
using longfair::InitTable;
using longfair::Mat;
using longfair::TimeLaggedScm;
using longfair::TransTable;
using longfair::Vec;

// Central finite differences of a scalar function.
inline Vec finite_diff(const std::function<double(const Vec&)>& f, const Vec& x,
                       double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    g[i] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

inline double finite_diff_1d(const std::function<double(double)>& f, double x,
                             double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Assembles a scalar tabulated SCM.
inline TimeLaggedScm make_toy_scm(InitTable init, TransTable trans,
                                  DecisionModel truth, int horizon) {
  TimeLaggedScm scm;
  scm.feature_dim = 1;
  scm.horizon = horizon;
  scm.partition = longfair::FeaturePartition::all_relevant(1);
  scm.truth_model = std::move(truth);
  scm.init_sampler = std::make_shared<longfair::TabularInit>(std::move(init));
  scm.transition =
      std::make_shared<longfair::TabularTransition>(std::move(trans));
  return scm;
}

// Sums the post-intervention inference formula by walking every trajectory
// (x^1, y^1, x^2, ..., x^T) explicitly. Independent of the library's forward
// fold.
inline std::vector<double> brute_force_post_intervention(
    const TimeLaggedScm& scm, const longfair::InterventionSpec& spec) {
  const InitTable* init = scm.init_sampler->table();
  const TransTable* trans = scm.transition->table();
  const std::size_t K = init->support.size();
  const bool long_term = spec.mode == longfair::EffectKind::LongTerm;
  const int init_s = long_term ? spec.hard_value : spec.reference_value;
  std::vector<double> out(K, 0.0);

  std::function<void(int, std::size_t, double)> walk =
      [&](int t, std::size_t state, double weight) {
        if (t == spec.target_time) {
          out[state] += weight;
          return;
        }
        Vec x(1);
        x[0] = init->support[state];
        const double p1 =
            longfair::decision_prob(spec.soft_model, x, spec.reference_value);
        for (int y01 = 0; y01 < 2; ++y01) {
          const double py = y01 == 1 ? p1 : 1.0 - p1;
          for (std::size_t next = 0; next < K; ++next) {
            const double pt = trans->prob[state][static_cast<std::size_t>(y01)][next];
            if (py * pt == 0.0) continue;
            walk(t + 1, next, weight * py * pt);
          }
        }
      };
  for (std::size_t k = 0; k < K; ++k) {
    const double p0 = init->prob[init_s != 0 ? 1 : 0][k];
    if (p0 > 0.0) walk(1, k, p0);
  }
  return out;
}

// Random tabulated SCM for property tests; binary support by default.
struct ToyParams {
  int horizon = 2;
  int support_size = 2;
};

inline TimeLaggedScm random_toy_scm(longfair::Rng& rng,
                                    const ToyParams& params = {}) {
  InitTable init;
  for (int k = 0; k < params.support_size; ++k) {
    init.support.push_back(static_cast<double>(k));
  }
  init.prob.resize(2);
  for (int s = 0; s < 2; ++s) {
    double total = 0.0;
    for (int k = 0; k < params.support_size; ++k) {
      const double w = 0.1 + rng.uniform();
      init.prob[static_cast<std::size_t>(s)].push_back(w);
      total += w;
    }
    for (auto& p : init.prob[static_cast<std::size_t>(s)]) p /= total;
  }
  TransTable trans;
  trans.support = init.support;
  trans.prob.resize(static_cast<std::size_t>(params.support_size));
  for (auto& per_state : trans.prob) {
    per_state.resize(2);
    for (auto& per_y : per_state) {
      double total = 0.0;
      for (int k = 0; k < params.support_size; ++k) {
        const double w = 0.1 + rng.uniform();
        per_y.push_back(w);
        total += w;
      }
      for (auto& p : per_y) p /= total;
    }
  }
  Vec truth_w = rng.normal_vec(3);
  return make_toy_scm(std::move(init), std::move(trans),
                      DecisionModel(std::move(truth_w)), params.horizon);
}

inline DecisionModel random_model(longfair::Rng& rng, Eigen::Index d,
                                  double scale = 1.0) {
  return DecisionModel(Vec(rng.normal_vec(d + 2) * scale));
}

// Utility rows with sign-correlated labels and fairness sample sets
// separated by a group gap, enough to keep both hinges active at small
// parameters.
inline longfair::FrozenBatch make_frozen_batch(longfair::Rng& rng, int horizon,
                                               int n_util, int n_fair,
                                               double gap) {
  longfair::FrozenBatch batch;
  batch.utility.resize(static_cast<std::size_t>(horizon));
  for (auto& slice : batch.utility) {
    slice.x.resize(n_util, 2);
    slice.s.resize(n_util);
    slice.y.resize(n_util);
    for (int i = 0; i < n_util; ++i) {
      slice.x.row(i) = rng.normal_vec(2).transpose();
      slice.s[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
      const double h = slice.x(i, 0) - slice.x(i, 1) + 0.3 * slice.s[i];
      slice.y[i] = rng.bernoulli(longfair::sigmoid(2.0 * h)) ? 1.0 : -1.0;
    }
  }
  auto draw = [&](double shift) {
    Mat m(n_fair, 2);
    for (int i = 0; i < n_fair; ++i) {
      m.row(i) = (rng.normal_vec(2).array() + shift).transpose();
    }
    return m;
  };
  batch.longterm_plus = draw(gap);
  batch.longterm_minus = draw(-gap);
  batch.shortterm_minus.resize(static_cast<std::size_t>(horizon));
  batch.shortterm_plus.resize(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) {
    batch.shortterm_minus[static_cast<std::size_t>(t)] = draw(-gap);
    batch.shortterm_plus[static_cast<std::size_t>(t)] = draw(gap);
  }
  return batch;
}

// Three-sigma bound for a binomial frequency check.
inline bool binomial_within_3sigma(double observed_freq, double p, double n) {
  const double sigma = std::sqrt(std::max(p * (1.0 - p), 1e-12) / n);
  return std::abs(observed_freq - p) <= 3.0 * sigma + 1e-12;
}

// Newton's method for the pooled ridge-logistic objective
//   sum_t mean_i phi(y h) + l2 ||theta||^2
// with equal per-step counts; second route against the gradient-descent fit.
inline Vec newton_logistic(const Mat& x, const Vec& s, const Vec& y,
                           int steps_per_individual, double l2,
                           int iters = 100) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Vec theta = Vec::Zero(d + 2);
  Mat design(n, d + 2);
  design.leftCols(d) = x;
  design.col(d) = s;
  design.col(d + 1) = Vec::Ones(n);
  const double scale = static_cast<double>(steps_per_individual) /
                       static_cast<double>(n) * steps_per_individual;
  (void)scale;
  // Objective = t* * mean_pooled phi(y h) + l2 ||theta||^2 (per-step counts
  // equal, so the per-step means collapse onto the pooled mean).
  const double t_star = static_cast<double>(steps_per_individual);
  for (int it = 0; it < iters; ++it) {
    Vec z = design * theta;
    Vec grad = 2.0 * l2 * theta;
    Mat hess = 2.0 * l2 * Mat::Identity(d + 2, d + 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double margin = y[i] * z[i];
      const double sig = 1.0 / (1.0 + std::exp(margin));  // sigmoid(-margin)
      grad += (t_star / n) * (-sig) * y[i] * design.row(i).transpose();
      const double curv = sig * (1.0 - sig);
      hess += (t_star / n) * curv * design.row(i).transpose() * design.row(i);
    }
    const Vec step = hess.ldlt().solve(grad);
    theta -= step;
    if (step.norm() < 1e-12) break;
  }
  return theta;
}

}  // namespace oracle
