#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "longfair/evaluate.hpp"

using namespace longfair;

namespace {

TimeLaggedScm eval_scm(double gap, double truth_scale, double s_weight,
                       int horizon) {
  TimeLaggedScm scm;
  scm.feature_dim = 2;
  scm.horizon = horizon;
  scm.partition = FeaturePartition::all_relevant(2);
  Vec tw(4);
  tw << truth_scale, truth_scale, s_weight, 0.0;
  scm.truth_model = DecisionModel(tw);
  scm.init_sampler = std::make_shared<GaussianInit>(
      Vec::Constant(2, -gap), Vec::Constant(2, gap), Mat::Identity(2, 2),
      Mat::Identity(2, 2));
  scm.transition = std::make_shared<LendingDynamics>(0.3, 0.1, 0.3,
                                                     scm.truth_model,
                                                     scm.partition);
  return scm;
}

}  // namespace

TEST_CASE("deploy_and_measure: deploying a sharp truth model is accurate") {
  // Saturated sigmoids make repayments nearly deterministic, so deploying
  // the truth model agrees with itself almost always.
  const auto scm = eval_scm(0.8, 8.0, 0.0, 3);
  const EvalReport report =
      deploy_and_measure(scm, scm.truth_model, 4000, 5, "truth");
  for (double acc : report.accuracy) CHECK(acc >= 0.93);
}

TEST_CASE("deploy_and_measure: attribute-blind world has no effects") {
  const auto scm = eval_scm(0.0, 1.0, 0.0, 3);
  Vec w(4);
  w << 0.7, -0.4, 0.0, 0.1;  // ignores s
  const EvalReport report =
      deploy_and_measure(scm, DecisionModel(w), 20000, 6, "blind");
  for (double e : report.short_effect) CHECK(std::abs(e) <= 0.02);
  for (double e : report.long_effect) CHECK(std::abs(e) <= 0.02);
}

TEST_CASE("deploy_and_measure: metric ranges and determinism") {
  const auto scm = eval_scm(0.5, 1.0, 0.4, 4);
  Rng rng(3);
  const DecisionModel model = oracle::random_model(rng, 2);
  const EvalReport a = deploy_and_measure(scm, model, 800, 42, "m");
  const EvalReport b = deploy_and_measure(scm, model, 800, 42, "m");
  REQUIRE(a.accuracy.size() == 4);
  for (std::size_t t = 0; t < 4; ++t) {
    CHECK(a.accuracy[t] == b.accuracy[t]);
    CHECK(a.short_effect[t] == b.short_effect[t]);
    CHECK(a.long_effect[t] == b.long_effect[t]);
    CHECK(a.accuracy[t] >= 0.0);
    CHECK(a.accuracy[t] <= 1.0);
    CHECK(std::abs(a.short_effect[t]) <= 1.0);
    CHECK(std::abs(a.long_effect[t]) <= 1.0);
  }
}

TEST_CASE("deploy_and_measure: measurement does not mutate its inputs") {
  const auto scm = eval_scm(0.5, 1.0, 0.4, 2);
  Rng rng(4);
  const DecisionModel model = oracle::random_model(rng, 2);
  const Vec weights_before = model.weights;
  const Vec truth_before = scm.truth_model.weights;
  (void)deploy_and_measure(scm, model, 200, 7, "m");
  CHECK(model.weights == weights_before);
  CHECK(scm.truth_model.weights == truth_before);
}

TEST_CASE("emit_table: one report, horizon two") {
  EvalReport r;
  r.algorithm = "LR";
  r.horizon = 2;
  r.accuracy = {0.9, 0.8};
  r.short_effect = {0.01, -0.02};
  r.long_effect = {0.1, 0.2};
  const std::string csv = emit_table({r});
  CHECK(csv == "algorithm,metric,t=1,t=2\n"
               "LR,accuracy,0.900,0.800\n"
               "LR,short_term,0.010,-0.020\n"
               "LR,long_term,0.100,0.200\n");
}

TEST_CASE("emit_table: four algorithms give twelve metric rows") {
  std::vector<EvalReport> reports;
  for (const char* name : {"RRM", "LR", "FMDP", "FMEO"}) {
    EvalReport r;
    r.algorithm = name;
    r.horizon = 5;
    r.accuracy = {0.9, 0.9, 0.9, 0.9, 0.9};
    r.short_effect = {0, 0, 0, 0, 0};
    r.long_effect = {0, 0, 0, 0, 0};
    reports.push_back(std::move(r));
  }
  const std::string csv = emit_table(reports);
  int lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 13);  // header + 4 algorithms x 3 metrics
}

TEST_CASE("emit_table: errors on empty and mismatched input") {
  CHECK_THROWS_AS(emit_table({}), DataError);
  EvalReport a, b;
  a.algorithm = "x";
  a.horizon = 2;
  a.accuracy = {1, 1};
  a.short_effect = {0, 0};
  a.long_effect = {0, 0};
  b = a;
  b.horizon = 3;
  b.accuracy = {1, 1, 1};
  b.short_effect = {0, 0, 0};
  b.long_effect = {0, 0, 0};
  CHECK_THROWS_WITH_AS(emit_table({a, b}), doctest::Contains("mismatched"),
                       DataError);
}

TEST_CASE("emit_table: replicate spread appends std columns") {
  EvalReport mean, sd;
  mean.algorithm = sd.algorithm = "RRM";
  mean.horizon = sd.horizon = 2;
  mean.accuracy = {0.8, 0.7};
  mean.short_effect = {0.0, 0.0};
  mean.long_effect = {0.1, 0.05};
  sd.accuracy = {0.01, 0.02};
  sd.short_effect = {0.001, 0.001};
  sd.long_effect = {0.005, 0.004};
  const std::string csv = emit_table({mean}, {sd});
  CHECK(csv.find("t=1,t=2,t=1_std,t=2_std") != std::string::npos);
  CHECK(csv.find("RRM,accuracy,0.800,0.700,0.010,0.020") != std::string::npos);
}

TEST_CASE("linear_fit: recovers an exact line and flags trends") {
  const LinFit fit = linear_fit({1, 2, 3, 4}, {2, 4, 6, 8});
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(trend({0.058, 0.117, 0.173, 0.246, 0.340}).slope > 0.0);
  CHECK(trend({0.040, 0.024, 0.020, 0.012, 0.002}).slope < 0.0);
  CHECK_THROWS_AS(linear_fit({1.0}, {1.0}), DataError);
}
