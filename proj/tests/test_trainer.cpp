#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "longfair/datagen.hpp"
#include "longfair/trainer.hpp"

using namespace longfair;

namespace {

GenConfig small_gen(int n, int steps, double eps) {
  GenConfig cfg;
  cfg.n_individuals = n;
  cfg.steps = steps;
  cfg.eps_update = eps;
  cfg.b0 = 0.1;
  cfg.b1 = 0.3;
  cfg.mean_minus = Vec::Constant(2, -0.5);
  cfg.mean_plus = Vec::Constant(2, 0.5);
  cfg.cov_minus = Mat::Identity(2, 2);
  cfg.cov_plus = Mat::Identity(2, 2);
  cfg.seed = 77;
  return cfg;
}

TimeLaggedScm small_scm(const GenConfig& cfg) {
  TimeLaggedScm scm;
  scm.feature_dim = 2;
  scm.horizon = cfg.steps;
  scm.partition = FeaturePartition::all_relevant(2);
  Vec tw(4);
  tw << 1.0, 1.0, 0.3, 0.0;
  scm.truth_model = DecisionModel(tw);
  scm.init_sampler = std::make_shared<GaussianInit>(
      cfg.mean_minus, cfg.mean_plus, cfg.cov_minus, cfg.cov_plus);
  scm.transition = std::make_shared<LendingDynamics>(
      cfg.eps_update, cfg.b0, cfg.b1, scm.truth_model, scm.partition);
  return scm;
}

RrmConfig fast_rrm(std::uint64_t seed) {
  RrmConfig cfg;
  cfg.delta = 1e-4;
  cfg.max_outer_iters = 40;
  cfg.mc_samples = 1500;
  cfg.seed = seed;
  cfg.inner.grad_tol = 1e-9;
  cfg.inner.max_steps = 4000;
  return cfg;
}

}  // namespace

TEST_CASE("inner_minimize: quadratic harness reaches the closed form") {
  Mat a(3, 3);
  a << 4.0, 0.5, 0.0, 0.5, 3.0, 0.2, 0.0, 0.2, 2.0;
  Vec c(3);
  c << 1.0, -2.0, 0.5;
  ObjectiveFn quad;
  quad.value = [&](const Vec& t) { return 0.5 * (t - c).dot(a * (t - c)); };
  quad.grad = [&](const Vec& t) { return Vec(a * (t - c)); };
  InnerOptSpec spec;
  spec.grad_tol = 1e-10;
  spec.max_steps = 5000;
  const DecisionModel fit = inner_minimize(quad, Vec::Zero(3), spec);
  CHECK((fit.weights - c).norm() <= 1e-8);
}

TEST_CASE("inner_minimize: warm start at the optimum returns immediately") {
  ObjectiveFn quad;
  quad.value = [](const Vec& t) { return t.squaredNorm(); };
  quad.grad = [](const Vec& t) { return Vec(2.0 * t); };
  InnerOptSpec spec;
  const Vec at_opt = Vec::Zero(4);
  const DecisionModel fit = inner_minimize(quad, at_opt, spec);
  CHECK(fit.weights == at_opt);
}

TEST_CASE("inner_minimize: objective never increases with more steps") {
  ObjectiveFn quad;
  Vec c = Vec::Constant(3, 2.0);
  quad.value = [c](const Vec& t) { return (t - c).squaredNorm(); };
  quad.grad = [c](const Vec& t) { return Vec(2.0 * (t - c)); };
  double prev = quad.value(Vec::Zero(3));
  for (int steps = 1; steps <= 6; ++steps) {
    InnerOptSpec spec;
    spec.max_steps = steps;
    const double value =
        quad.value(inner_minimize(quad, Vec::Zero(3), spec).weights);
    CHECK(value <= prev + 1e-15);
    prev = value;
  }
}

TEST_CASE("inner_minimize: non-finite start aborts") {
  ObjectiveFn bad;
  bad.value = [](const Vec&) { return std::nan(""); };
  bad.grad = [](const Vec& t) { return t; };
  CHECK_THROWS_AS(inner_minimize(bad, Vec::Zero(2), InnerOptSpec{}),
                  NumericsError);
}

TEST_CASE("init_model: separable data with strong ridge fits cleanly") {
  PanelDataset panel;
  panel.steps = 1;
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const Vec x = rng.normal_vec(2);
    panel.s.push_back(i % 2);
    panel.x.push_back({x});
    panel.y.push_back({x[0] > 0 ? 1 : -1});
    panel.y_hat.push_back({x[0] > 0 ? 1 : -1});
  }
  LossWeights w;
  w.lambda_u = 1.0;
  w.lambda_l = 0.0;
  w.lambda_s = 0.0;
  w.l2_reg = 0.05;
  InnerOptSpec inner;
  inner.grad_tol = 1e-9;
  const DecisionModel model = init_model(panel, w, 1, inner);
  REQUIRE(model.weights.allFinite());
  int errors = 0;
  for (int i = 0; i < 200; ++i) {
    if (hard_decision(score(model, panel.x[static_cast<std::size_t>(i)][0],
                            panel.s[static_cast<std::size_t>(i)])) !=
        panel.y[static_cast<std::size_t>(i)][0]) {
      ++errors;
    }
  }
  CHECK(errors <= 4);
}

TEST_CASE("init_model: pure utility weights match a Newton solver") {
  const GenConfig cfg = small_gen(400, 3, 0.4);
  const auto scm = small_scm(cfg);
  const PanelDataset panel = generate_synthetic(scm, cfg);

  LossWeights w;
  w.lambda_u = 1.0;
  w.lambda_l = 0.0;
  w.lambda_s = 0.0;
  w.l2_reg = 1e-3;
  InnerOptSpec inner;
  inner.grad_tol = 1e-10;
  inner.max_steps = 20000;
  const DecisionModel gd_fit = init_model(panel, w, 3, inner);

  // Pool the rows and solve the same objective with Newton steps.
  Mat x(panel.size() * 3, 2);
  Vec s(panel.size() * 3), y(panel.size() * 3);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < panel.size(); ++i) {
    for (int t = 0; t < 3; ++t) {
      x.row(r) = panel.x[i][static_cast<std::size_t>(t)].transpose();
      s[r] = panel.s[i];
      y[r] = panel.y[i][static_cast<std::size_t>(t)];
      ++r;
    }
  }
  const Vec newton = oracle::newton_logistic(x, s, y, 3, w.l2_reg);
  for (Eigen::Index k = 0; k < newton.size(); ++k) {
    CHECK(std::abs(gd_fit.weights[k] - newton[k]) <= 1e-4);
  }
}

TEST_CASE("init_model: single-class labels warn and satisfy optimality") {
  PanelDataset panel;
  panel.steps = 1;
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    panel.s.push_back(i % 2);
    panel.x.push_back({rng.normal_vec(2)});
    panel.y.push_back({1});
    panel.y_hat.push_back({1});
  }
  LossWeights w;
  w.lambda_u = 1.0;
  w.lambda_l = 0.0;
  w.lambda_s = 0.0;
  w.l2_reg = 1e-2;
  InnerOptSpec inner;
  inner.grad_tol = 1e-7;
  std::vector<std::string> warnings;
  const DecisionModel model = init_model(panel, w, 1, inner, &warnings);
  CHECK(!warnings.empty());
  CHECK(model.bias() > 0.5);
  const FrozenBatch batch = observational_batch(panel, 1);
  CHECK(total_grad(model, batch, w).norm() <= inner.grad_tol);
}

TEST_CASE("rrm_fit: distribution-independent objective converges at once") {
  const GenConfig cfg = small_gen(300, 2, 0.5);
  const auto scm = small_scm(cfg);
  const PanelDataset panel = generate_synthetic(scm, cfg);
  LossWeights w;
  w.lambda_u = 1.0;
  w.lambda_l = 0.0;
  w.lambda_s = 0.0;
  w.l2_reg = 1e-2;
  auto [model, trace] = rrm_fit(scm, panel, w, fast_rrm(9));
  REQUIRE(trace.iterations.size() == 1);
  CHECK(trace.converged);
  CHECK(trace.converged_iter == 1);
  CHECK(trace.iterations[0].delta < 1e-4);
}

TEST_CASE("rrm_fit: frozen dynamics converge within two iterations") {
  GenConfig cfg = small_gen(300, 3, 0.0);
  const auto scm = small_scm(cfg);
  const PanelDataset panel = generate_synthetic(scm, cfg);
  LossWeights w;  // all three terms active
  w.l2_reg = 1e-2;
  auto [model, trace] = rrm_fit(scm, panel, w, fast_rrm(10));
  CHECK(trace.converged);
  CHECK(trace.converged_iter <= 2);
  CHECK(trace.iterations.back().delta < 1e-4);
}

TEST_CASE("rrm_fit: feedback run converges with shrinking moves") {
  const GenConfig cfg = small_gen(500, 3, 0.5);
  const auto scm = small_scm(cfg);
  const PanelDataset panel = generate_synthetic(scm, cfg);
  LossWeights w;
  w.l2_reg = 1e-2;
  auto [model, trace] = rrm_fit(scm, panel, w, fast_rrm(11));
  CHECK(trace.converged);
  REQUIRE(trace.iterations.size() >= 2);
  CHECK(trace.iterations.back().delta <
        trace.iterations.front().delta + 1e-12);
  for (const auto& row : trace.iterations) {
    CHECK(std::isfinite(row.loss.total));
    CHECK(row.delta >= 0.0);
  }
}

TEST_CASE("rrm_fit: trace is bit-reproducible") {
  const GenConfig cfg = small_gen(200, 2, 0.5);
  const auto scm = small_scm(cfg);
  const PanelDataset panel = generate_synthetic(scm, cfg);
  LossWeights w;
  w.l2_reg = 1e-2;
  auto [m1, t1] = rrm_fit(scm, panel, w, fast_rrm(12));
  auto [m2, t2] = rrm_fit(scm, panel, w, fast_rrm(12));
  CHECK(m1.weights == m2.weights);
  REQUIRE(t1.iterations.size() == t2.iterations.size());
  for (std::size_t i = 0; i < t1.iterations.size(); ++i) {
    CHECK(t1.iterations[i].theta == t2.iterations[i].theta);
    CHECK(t1.iterations[i].delta == t2.iterations[i].delta);
  }
}

TEST_CASE("rrm_fit: returned model is performatively stable") {
  const GenConfig cfg = small_gen(400, 3, 0.5);
  const auto scm = small_scm(cfg);
  const PanelDataset panel = generate_synthetic(scm, cfg);
  LossWeights w;
  w.l2_reg = 1e-2;
  const RrmConfig rrm = fast_rrm(13);
  auto [model, trace] = rrm_fit(scm, panel, w, rrm);
  REQUIRE(trace.converged);
  CHECK(stability_gap(scm, panel, w, rrm, model) <= rrm.delta);
}

TEST_CASE("rrm_fit: config validation") {
  const GenConfig cfg = small_gen(50, 2, 0.1);
  const auto scm = small_scm(cfg);
  const PanelDataset panel = generate_synthetic(scm, cfg);
  LossWeights w;
  RrmConfig bad = fast_rrm(1);
  bad.delta = 0.0;
  CHECK_THROWS_AS(rrm_fit(scm, panel, w, bad), ConfigError);
  bad = fast_rrm(1);
  bad.max_outer_iters = 0;
  CHECK_THROWS_AS(rrm_fit(scm, panel, w, bad), ConfigError);
}
