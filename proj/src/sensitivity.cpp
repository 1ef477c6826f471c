#include "longfair/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace longfair {

double wasserstein1_sorted(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || a.size() != b.size()) {
    throw DataError("wasserstein1_sorted: need equal-size nonempty samples");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  KahanSum sum;
  for (std::size_t i = 0; i < a.size(); ++i) sum.add(std::abs(a[i] - b[i]));
  return sum.value() / static_cast<double>(a.size());
}

double wasserstein1_tables(const DiscreteDist& a, const DiscreteDist& b) {
  if (a.support.empty() || a.support != b.support) {
    throw DataError("wasserstein1_tables: distributions must share a support");
  }
  for (std::size_t k = 1; k < a.support.size(); ++k) {
    if (a.support[k] < a.support[k - 1]) {
      throw DataError("wasserstein1_tables: support must be sorted");
    }
  }
  // Greedy earth-mover plan over the sorted bins.
  const std::size_t K = a.support.size();
  std::size_t i = 0, j = 0;
  double rem_a = a.prob[0], rem_b = b.prob[0];
  KahanSum cost;
  while (i < K && j < K) {
    const double move = std::min(rem_a, rem_b);
    if (move > 0.0) cost.add(move * std::abs(a.support[i] - a.support[j]));
    rem_a -= move;
    rem_b -= move;
    if (rem_a <= 1e-300) {
      ++i;
      if (i < K) rem_a = a.prob[i];
    }
    if (rem_b <= 1e-300) {
      ++j;
      if (j < K) rem_b = b.prob[j];
    }
  }
  return cost.value();
}

namespace {

// Shortest-augmenting-path assignment on a square cost matrix; returns the
// minimum total cost.
double assignment_cost(const Mat& cost) {
  const int n = static_cast<int>(cost.rows());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = match[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) {
    total += cost(match[static_cast<std::size_t>(j)] - 1, j - 1);
  }
  return total;
}

}  // namespace

double wasserstein1_assignment(const Mat& a, const Mat& b) {
  if (a.rows() == 0 || a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DataError("wasserstein1_assignment: need equal-shape point sets");
  }
  const Eigen::Index n = a.rows();
  Mat cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      cost(i, j) = (a.row(i) - b.row(j)).norm();
    }
  }
  return assignment_cost(cost) / static_cast<double>(n);
}

EpsEstimate estimate_eps_sensitivity(
    const TimeLaggedScm& scm,
    const std::vector<std::pair<DecisionModel, DecisionModel>>& theta_pairs,
    const EpsSensitivityOpts& opts) {
  require_valid(scm);
  const bool tabulated = scm.init_sampler->table() != nullptr &&
                         scm.transition->table() != nullptr;
  if (!tabulated && !opts.clip.has_value()) {
    throw ConfigError(
        "estimate_eps_sensitivity: continuous state space needs a clipping "
        "box to make the transport distance well defined");
  }
  if (opts.clip.has_value() && !opts.clip->valid()) {
    throw ConfigError("estimate_eps_sensitivity: invalid clipping box");
  }

  InterventionSpec spec;
  spec.mode = opts.mode;
  spec.hard_value = opts.hard_value;
  spec.reference_value = opts.reference_value;
  spec.target_time = opts.target_time;

  EpsEstimate out;
  for (const auto& [theta_a, theta_b] : theta_pairs) {
    const double dist_theta = (theta_a.weights - theta_b.weights).norm();
    if (dist_theta == 0.0) {
      ++out.pairs_excluded;
      continue;
    }
    spec.soft_model = theta_a;
    Mat a = sample_post_intervention(scm, spec, opts.n, opts.seed);
    spec.soft_model = theta_b;
    Mat b = sample_post_intervention(scm, spec, opts.n, opts.seed);
    if (opts.clip.has_value()) {
      for (Eigen::Index i = 0; i < a.rows(); ++i) {
        a.row(i) = opts.clip->clip(a.row(i).transpose()).transpose();
        b.row(i) = opts.clip->clip(b.row(i).transpose()).transpose();
      }
    }
    double w1 = 0.0;
    if (scm.feature_dim == 1) {
      std::vector<double> av(a.col(0).data(), a.col(0).data() + a.rows());
      std::vector<double> bv(b.col(0).data(), b.col(0).data() + b.rows());
      w1 = wasserstein1_sorted(std::move(av), std::move(bv));
    } else {
      const Eigen::Index keep =
          std::min<Eigen::Index>(opts.transport_support, a.rows());
      w1 = wasserstein1_assignment(a.topRows(keep), b.topRows(keep));
    }
    out.eps_hat = std::max(out.eps_hat, w1 / dist_theta);
    ++out.pairs_used;
  }
  return out;
}

namespace {

double transition_density(const TimeLaggedScm& scm, const Vec& x, int y,
                          int s, const Vec& deployed_fw, const Vec& x_next,
                          const CEstimateOpts& opts, std::uint64_t probe_tag) {
  if (const TransTable* table = scm.transition->table()) {
    std::size_t from = table->support.size(), to = table->support.size();
    for (std::size_t k = 0; k < table->support.size(); ++k) {
      if (table->support[k] == x[0]) from = k;
      if (table->support[k] == x_next[0]) to = k;
    }
    if (from == table->support.size() || to == table->support.size()) {
      throw DataError("estimate_c: probe state not in the tabulated support");
    }
    return table->prob[from][y == 1 ? 1 : 0][to];
  }
  // Gaussian-product KDE over kernel draws.
  TransitionContext ctx;
  ctx.s_backdrop = s;
  ctx.s_redlining = s;
  ctx.deployed_feature_weights = &deployed_fw;
  Rng rng(derive_seed(opts.seed, "c/kde", probe_tag));
  const double bw = opts.kde_bandwidth;
  const auto d = static_cast<double>(x.size());
  const double norm =
      1.0 / (static_cast<double>(opts.kde_samples) *
             std::pow(bw * std::sqrt(2.0 * std::numbers::pi), d));
  KahanSum density;
  for (int k = 0; k < opts.kde_samples; ++k) {
    const Vec draw = scm.transition->sample(x, y, ctx, rng);
    density.add(std::exp(-0.5 * (draw - x_next).squaredNorm() / (bw * bw)));
  }
  return density.value() * norm;
}

}  // namespace

CEstimate estimate_c(const TimeLaggedScm& scm,
                     const std::vector<DecisionModel>& theta_grid,
                     const std::vector<CProbe>& probes,
                     const CEstimateOpts& opts) {
  require_valid(scm);
  if (theta_grid.empty() || probes.empty()) {
    throw ConfigError("estimate_c: need at least one model and one probe");
  }
  CEstimate out;
  std::uint64_t tag = 0;
  for (const auto& model : theta_grid) {
    const Vec fw = model.feature_weights();
    for (const auto& probe : probes) {
      const double p_plus = transition_density(scm, probe.x, 1, probe.s, fw,
                                               probe.x_next, opts, tag++);
      const double p_minus = transition_density(scm, probe.x, -1, probe.s, fw,
                                                probe.x_next, opts, tag++);
      const double denom = p_plus + p_minus;
      if (denom <= opts.zero_density_tol) {
        ++out.probes_skipped;
        continue;
      }
      const double p = decision_prob(model, probe.x, probe.s);
      const double sig_grad = p * (1.0 - p);
      const double g_norm = score_gradient(probe.x, probe.s).norm();
      const double ratio =
          sig_grad * g_norm * std::abs(p_plus - p_minus) / denom;
      out.c_hat = std::max(out.c_hat, ratio);
      ++out.probes_used;
    }
  }
  return out;
}

CurvatureEstimate estimate_curvature(const ObjectiveFn& objective,
                                     const std::vector<Vec>& thetas) {
  if (thetas.size() < 2) {
    throw ConfigError("estimate_curvature: need at least two points");
  }
  CurvatureEstimate out;
  out.points_used = static_cast<int>(thetas.size());
  out.gamma_hat = std::numeric_limits<double>::infinity();
  std::vector<double> values(thetas.size());
  std::vector<Vec> grads(thetas.size());
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    values[i] = objective.value(thetas[i]);
    grads[i] = objective.grad(thetas[i]);
  }
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    for (std::size_t j = 0; j < thetas.size(); ++j) {
      if (i == j) continue;
      const Vec diff = thetas[j] - thetas[i];
      const double dist2 = diff.squaredNorm();
      if (dist2 == 0.0) continue;
      const double bregman = values[j] - values[i] - grads[i].dot(diff);
      out.gamma_hat = std::min(out.gamma_hat, 2.0 * bregman / dist2);
      if (j > i) {
        out.beta_hat = std::max(out.beta_hat,
                                (grads[j] - grads[i]).norm() / std::sqrt(dist2));
      }
    }
  }
  if (!std::isfinite(out.gamma_hat)) {
    throw NumericsError("estimate_curvature: no usable point pairs");
  }
  return out;
}

CurvatureEstimate estimate_curvature(const FrozenBatch& batch,
                                     const LossWeights& weights,
                                     const std::vector<Vec>& thetas,
                                     double kink_margin) {
  std::vector<Vec> away;
  for (const auto& theta : thetas) {
    const LossBreakdown loss = total_loss(DecisionModel(theta), batch, weights);
    bool near_kink = std::abs(loss.longterm_raw) <= kink_margin;
    for (double raw : loss.shortterm_raw) {
      near_kink = near_kink || std::abs(raw) <= kink_margin;
    }
    if (!near_kink) away.push_back(theta);
  }
  if (away.size() < 2) {
    throw NumericsError(
        "estimate_curvature: " + std::to_string(thetas.size() - away.size()) +
        " of " + std::to_string(thetas.size()) +
        " points sit at hinge kinks; not enough smooth points remain");
  }
  return estimate_curvature(make_objective(batch, weights), away);
}

SensitivityReport make_sensitivity_report(double gamma_hat, double beta_hat,
                                          double c_hat, double eps_hat,
                                          double m, int horizon) {
  SensitivityReport r;
  r.gamma_hat = gamma_hat;
  r.beta_hat = beta_hat;
  r.c_hat = c_hat;
  r.eps_hat = eps_hat;
  r.m = m;
  r.horizon = horizon;
  r.bound_2mct = 2.0 * m * c_hat * static_cast<double>(horizon - 1);
  if (gamma_hat > 0.0) {
    r.margin = beta_hat / gamma_hat - r.bound_2mct;
    r.predicate = r.bound_2mct < beta_hat / gamma_hat;
  }
  if (beta_hat > 0.0) {
    r.margin_reciprocal = gamma_hat / beta_hat - r.bound_2mct;
    r.predicate_reciprocal = r.bound_2mct < gamma_hat / beta_hat;
  }
  return r;
}

PredicateResult convergence_predicate(const SensitivityReport& report) {
  return PredicateResult{report.predicate, report.margin};
}

}  // namespace longfair
