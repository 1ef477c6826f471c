#include "longfair/trainer.hpp"

#include <chrono>
#include <cmath>

namespace longfair {

DecisionModel inner_minimize(const ObjectiveFn& objective, const Vec& theta_init,
                             const InnerOptSpec& spec) {
  if (!theta_init.allFinite()) {
    throw NumericsError("inner_minimize: non-finite starting point");
  }
  Vec theta = theta_init;
  double f = objective.value(theta);
  if (!std::isfinite(f)) {
    throw NumericsError("inner_minimize: non-finite objective at start");
  }
  Vec prev_theta, prev_grad;
  bool have_prev = false;
  for (int step = 0; step < spec.max_steps; ++step) {
    const Vec g = objective.grad(theta);
    if (!g.allFinite()) {
      throw NumericsError("inner_minimize: non-finite gradient");
    }
    const double gnorm2 = g.squaredNorm();
    if (std::sqrt(gnorm2) <= spec.grad_tol) break;

    // Barzilai-Borwein trial step, clamped; Armijo backtracking keeps the
    // iteration monotone.
    double alpha = spec.step_size;
    if (have_prev) {
      const Vec s = theta - prev_theta;
      const Vec y = g - prev_grad;
      const double sy = s.dot(y);
      if (sy > 0.0) {
        alpha = std::min(std::max(s.squaredNorm() / sy, 1e-10), 1e8);
      }
    }
    bool accepted = false;
    while (alpha >= spec.min_step) {
      const Vec trial = theta - alpha * g;
      const double f_trial = objective.value(trial);
      if (std::isfinite(f_trial) &&
          f_trial <= f - spec.armijo_c * alpha * gnorm2) {
        prev_theta = theta;
        prev_grad = g;
        have_prev = true;
        theta = trial;
        f = f_trial;
        accepted = true;
        break;
      }
      alpha *= spec.backtrack;
    }
    if (!accepted) break;  // step underflow: no further descent possible
  }
  return DecisionModel(theta);
}

FrozenBatch freeze_batch(const TimeLaggedScm& scm, const PanelDataset& dataset,
                         const DecisionModel& deployed, int mc_samples,
                         std::uint64_t seed) {
  require_valid(scm);
  if (dataset.steps < scm.horizon) {
    throw DataError("freeze_batch: dataset records " +
                    std::to_string(dataset.steps) +
                    " steps but the horizon is " + std::to_string(scm.horizon));
  }
  FrozenBatch batch;
  const int horizon = scm.horizon;
  const std::size_t n = dataset.size();

  batch.utility.resize(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) {
    auto& slice = batch.utility[static_cast<std::size_t>(t)];
    slice.x.resize(static_cast<Eigen::Index>(n), scm.feature_dim);
    slice.s.resize(static_cast<Eigen::Index>(n));
    slice.y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      slice.x.row(static_cast<Eigen::Index>(i)) =
          dataset.x[i][static_cast<std::size_t>(t)].transpose();
      slice.s[static_cast<Eigen::Index>(i)] = dataset.s[i];
      slice.y[static_cast<Eigen::Index>(i)] =
          dataset.y[i][static_cast<std::size_t>(t)];
    }
  }

  InterventionSpec spec;
  spec.soft_model = deployed;
  spec.reference_value = 0;

  spec.mode = EffectKind::LongTerm;
  spec.target_time = horizon;
  spec.hard_value = 1;
  batch.longterm_plus = sample_post_intervention(
      scm, spec, mc_samples, derive_seed(seed, "batch/longterm_plus"));
  spec.hard_value = 0;
  batch.longterm_minus = sample_post_intervention(
      scm, spec, mc_samples, derive_seed(seed, "batch/longterm_minus"));

  batch.shortterm_minus.resize(static_cast<std::size_t>(horizon));
  batch.shortterm_plus.resize(static_cast<std::size_t>(horizon));
  spec.mode = EffectKind::ShortTerm;
  for (int t = 1; t <= horizon; ++t) {
    spec.target_time = t;
    spec.hard_value = 0;
    batch.shortterm_minus[static_cast<std::size_t>(t - 1)] =
        sample_post_intervention(
            scm, spec, mc_samples,
            derive_seed(seed, "batch/shortterm_minus", static_cast<std::uint64_t>(t)));
    spec.hard_value = 1;
    batch.shortterm_plus[static_cast<std::size_t>(t - 1)] =
        sample_post_intervention(
            scm, spec, mc_samples,
            derive_seed(seed, "batch/shortterm_plus", static_cast<std::uint64_t>(t)));
  }
  return batch;
}

FrozenBatch observational_batch(const PanelDataset& dataset, int horizon) {
  if (dataset.size() == 0) throw DataError("observational_batch: empty dataset");
  if (dataset.steps < horizon) {
    throw DataError("observational_batch: dataset shorter than horizon");
  }
  const Eigen::Index d = dataset.x[0][0].size();
  const std::size_t n = dataset.size();

  FrozenBatch batch;
  batch.utility.resize(static_cast<std::size_t>(horizon));
  std::vector<std::size_t> plus_rows, minus_rows;
  for (std::size_t i = 0; i < n; ++i) {
    (dataset.s[i] != 0 ? plus_rows : minus_rows).push_back(i);
  }
  auto gather = [&](const std::vector<std::size_t>& rows, int t) {
    Mat m(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      m.row(static_cast<Eigen::Index>(r)) =
          dataset.x[rows[r]][static_cast<std::size_t>(t)].transpose();
    }
    return m;
  };
  for (int t = 0; t < horizon; ++t) {
    auto& slice = batch.utility[static_cast<std::size_t>(t)];
    slice.x.resize(static_cast<Eigen::Index>(n), d);
    slice.s.resize(static_cast<Eigen::Index>(n));
    slice.y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      slice.x.row(static_cast<Eigen::Index>(i)) =
          dataset.x[i][static_cast<std::size_t>(t)].transpose();
      slice.s[static_cast<Eigen::Index>(i)] = dataset.s[i];
      slice.y[static_cast<Eigen::Index>(i)] =
          dataset.y[i][static_cast<std::size_t>(t)];
    }
  }
  if (plus_rows.empty() || minus_rows.empty()) {
    throw DataError("observational_batch: a protected group is empty");
  }
  batch.longterm_plus = gather(plus_rows, horizon - 1);
  batch.longterm_minus = gather(minus_rows, horizon - 1);
  batch.shortterm_minus.resize(static_cast<std::size_t>(horizon));
  batch.shortterm_plus.resize(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) {
    batch.shortterm_minus[static_cast<std::size_t>(t)] = gather(minus_rows, t);
    batch.shortterm_plus[static_cast<std::size_t>(t)] = gather(plus_rows, t);
  }
  return batch;
}

DecisionModel init_model(const PanelDataset& dataset, const LossWeights& weights,
                         int horizon, const InnerOptSpec& inner,
                         std::vector<std::string>* warnings) {
  const FrozenBatch batch = observational_batch(dataset, horizon);
  bool any_pos = false, any_neg = false;
  for (const auto& traj : dataset.y) {
    for (int y : traj) (y == 1 ? any_pos : any_neg) = true;
  }
  if (!(any_pos && any_neg) && warnings != nullptr) {
    warnings->push_back(
        "init_model: dataset labels are single-class; the fit is driven by "
        "the regularizer");
  }
  const Eigen::Index d = dataset.x[0][0].size();
  const ObjectiveFn objective = make_objective(batch, weights);
  return inner_minimize(objective, Vec::Zero(d + 2), inner);
}

namespace {

std::uint64_t batch_seed(const RrmConfig& cfg, int iter) {
  const std::uint64_t index =
      cfg.resample == RrmConfig::Resample::FreshPerIteration
          ? static_cast<std::uint64_t>(iter)
          : 0;
  return derive_seed(cfg.seed, "rrm/batch", index);
}

}  // namespace

std::pair<DecisionModel, RrmTrace> rrm_fit(const TimeLaggedScm& scm,
                                           const PanelDataset& dataset,
                                           const LossWeights& weights,
                                           const RrmConfig& cfg) {
  if (cfg.delta <= 0) throw ConfigError("rrm_fit: delta must be positive");
  if (cfg.max_outer_iters < 1) {
    throw ConfigError("rrm_fit: max_outer_iters must be >= 1");
  }
  const auto wviol = validate_weights(weights);
  if (!wviol.empty()) {
    std::string msg = "rrm_fit: invalid weights:";
    for (const auto& v : wviol) msg += "\n  - " + v;
    throw ConfigError(msg);
  }

  RrmTrace trace;
  DecisionModel current = init_model(dataset, weights, scm.horizon, cfg.inner);
  trace.theta0 = current.weights;

  for (int iter = 1; iter <= cfg.max_outer_iters; ++iter) {
    const auto t_start = std::chrono::steady_clock::now();
    const FrozenBatch batch = freeze_batch(scm, dataset, current,
                                           cfg.mc_samples, batch_seed(cfg, iter));
    const ObjectiveFn objective = make_objective(batch, weights);
    DecisionModel next;
    try {
      next = inner_minimize(objective, current.weights, cfg.inner);
    } catch (const NumericsError& e) {
      throw TrainerDivergence(std::string("rrm_fit aborted at iteration ") +
                                  std::to_string(iter) + ": " + e.what(),
                              std::move(trace));
    }
    if (!next.weights.allFinite()) {
      throw TrainerDivergence("rrm_fit: non-finite iterate at iteration " +
                                  std::to_string(iter),
                              std::move(trace));
    }
    RrmIteration row;
    row.iter = iter;
    row.theta = next.weights;
    row.loss = total_loss(next, batch, weights);
    row.delta = (next.weights - current.weights).norm();
    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t_start)
                      .count();
    trace.iterations.push_back(std::move(row));
    current = std::move(next);
    if (trace.iterations.back().delta < cfg.delta) {
      trace.converged = true;
      trace.converged_iter = iter;
      break;
    }
  }
  return {current, trace};
}

double stability_gap(const TimeLaggedScm& scm, const PanelDataset& dataset,
                     const LossWeights& weights, const RrmConfig& cfg,
                     const DecisionModel& model) {
  const FrozenBatch batch =
      freeze_batch(scm, dataset, model, cfg.mc_samples, batch_seed(cfg, 1));
  const ObjectiveFn objective = make_objective(batch, weights);
  const DecisionModel refit = inner_minimize(objective, model.weights, cfg.inner);
  return (refit.weights - model.weights).norm();
}

}  // namespace longfair
