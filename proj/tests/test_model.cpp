#include <doctest.h>

#include "helpers.hpp"
#include "longfair/model.hpp"
#include "longfair/rng.hpp"

using namespace longfair;

TEST_CASE("score: zero model maps everything to zero") {
  const DecisionModel model = DecisionModel::zeros(3);
  Vec x(3);
  x << 2.0, -7.5, 100.0;
  CHECK(score(model, x, 1) == 0.0);
  CHECK(score(model, x, 0) == 0.0);
}

TEST_CASE("score: unit-weight projection picks one coordinate") {
  Vec w = Vec::Zero(4);
  w[0] = 1.0;  // (1, 0 | w_s=0 | b=0) on two features
  const DecisionModel model(w);
  Vec x(2);
  x << 2.5, -3.0;
  CHECK(score(model, x, 1) == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("score: matches an independent dot-product recomputation") {
  Rng rng(42);
  const DecisionModel model = oracle::random_model(rng, 5);
  for (int rep = 0; rep < 20; ++rep) {
    const Vec x = rng.normal_vec(5);
    const int s = rng.bernoulli(0.5) ? 1 : 0;
    // Second route: reversed-order long double accumulation.
    long double acc = model.weights[6];
    acc += static_cast<long double>(model.weights[5]) * s;
    for (Eigen::Index i = 4; i >= 0; --i) {
      acc += static_cast<long double>(model.weights[i]) * x[i];
    }
    CHECK(score(model, x, s) ==
          doctest::Approx(static_cast<double>(acc)).epsilon(1e-12));
  }
}

TEST_CASE("score: dimension mismatch is a structured error") {
  const DecisionModel model = DecisionModel::zeros(3);
  Vec x(2);
  x << 1.0, 2.0;
  CHECK_THROWS_AS(score(model, x, 0), DimensionError);
}

TEST_CASE("decision_prob: sigmoid midpoint and fixed value") {
  const DecisionModel model = DecisionModel::zeros(1);
  Vec x(1);
  x << 0.0;
  CHECK(decision_prob(model, x, 0) == doctest::Approx(0.5).epsilon(1e-15));

  Vec w(3);
  w << 0.0, 0.0, 1.0;  // bias 1 -> score 1
  CHECK(decision_prob(DecisionModel(w), x, 0) ==
        doctest::Approx(0.731058).epsilon(1e-6));
}

TEST_CASE("decision_prob: approaches 1 monotonically and stays inside (0,1)") {
  double prev = 0.0;
  for (double z : {0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 30.0}) {
    const double p = sigmoid(z);
    CHECK(p > prev);
    CHECK(p < 1.0);
    prev = p;
  }
  // Saturated scores pin to the largest representable value below one.
  for (double z : {100.0, 500.0, 5000.0}) {
    const double p = sigmoid(z);
    CHECK(p >= prev);
    CHECK(p < 1.0);
    prev = p;
  }
  CHECK(sigmoid(5000.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sigmoid(-5000.0) > 0.0);
}

TEST_CASE("decision_prob: antisymmetry around the midpoint") {
  for (double a : {0.0, 0.3, 1.0, 4.2, 17.0, 44.0}) {
    CHECK(sigmoid(-a) == doctest::Approx(1.0 - sigmoid(a)).epsilon(1e-12));
  }
}

TEST_CASE("hard decision agrees with the probability threshold") {
  Rng rng(7);
  const DecisionModel model = oracle::random_model(rng, 2);
  for (int rep = 0; rep < 200; ++rep) {
    const Vec x = rng.normal_vec(2);
    const int s = rng.bernoulli(0.5) ? 1 : 0;
    const double h = score(model, x, s);
    const bool positive = hard_decision(h) == 1;
    CHECK(positive == (decision_prob(model, x, s) >= 0.5));
  }
}

TEST_CASE("score gradient layout is (x, s, 1)") {
  Vec x(2);
  x << 3.0, -1.0;
  const Vec g = score_gradient(x, 1);
  REQUIRE(g.size() == 4);
  CHECK(g[0] == 3.0);
  CHECK(g[1] == -1.0);
  CHECK(g[2] == 1.0);
  CHECK(g[3] == 1.0);
}
