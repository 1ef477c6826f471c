#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "longfair/intervene.hpp"
#include "longfair/objective.hpp"
#include "longfair/scm.hpp"

namespace longfair {

// --- Wasserstein-1 machinery -------------------------------------------

// Exact W1 between two equal-size empirical scalar samples.
double wasserstein1_sorted(std::vector<double> a, std::vector<double> b);

// Exact W1 between two tabulated distributions on the same sorted support,
// computed by an explicit greedy earth-mover plan.
double wasserstein1_tables(const DiscreteDist& a, const DiscreteDist& b);

// Exact W1 between equal-size empirical point sets (rows), solving the
// assignment problem on the Euclidean cost matrix.
double wasserstein1_assignment(const Mat& a, const Mat& b);

// --- Distribution sensitivity (epsilon) --------------------------------

struct EpsSensitivityOpts {
  EffectKind mode = EffectKind::LongTerm;
  int hard_value = 1;
  int reference_value = 0;
  int target_time = 1;
  int n = 4000;
  // Assignment-solver subsample for multi-dimensional states.
  int transport_support = 128;
  // Required for continuous state spaces; tabulated models are bounded by
  // their support and may omit it.
  std::optional<ClipBox> clip;
  std::uint64_t seed = 0;
};

struct EpsEstimate {
  double eps_hat = 0.0;
  int pairs_used = 0;
  int pairs_excluded = 0;  // zero parameter distance
};

// eps_hat = max over pairs of W1(samples(theta), samples(theta')) divided by
// the parameter distance. Both members of a pair share sampling substreams.
EpsEstimate estimate_eps_sensitivity(
    const TimeLaggedScm& scm,
    const std::vector<std::pair<DecisionModel, DecisionModel>>& theta_pairs,
    const EpsSensitivityOpts& opts);

// --- Attribute sensitivity (c) ------------------------------------------

struct CProbe {
  Vec x;
  int s = 0;
  Vec x_next;
};

struct CEstimateOpts {
  // Kernel-density evaluation of continuous transitions.
  double kde_bandwidth = 0.25;
  int kde_samples = 2000;
  std::uint64_t seed = 0;
  double zero_density_tol = 1e-12;
};

struct CEstimate {
  double c_hat = 0.0;
  int probes_used = 0;
  int probes_skipped = 0;  // zero transition mass at the probe
};

// c_hat = max over probes and models of
//   || sum_y grad_theta P_theta(y|x,s) P(x'|x,y) || / sum_y P(x'|x,y),
// with the decision-probability gradient in closed sigmoid form.
CEstimate estimate_c(const TimeLaggedScm& scm,
                     const std::vector<DecisionModel>& theta_grid,
                     const std::vector<CProbe>& probes,
                     const CEstimateOpts& opts = {});

// --- Loss curvature (gamma, beta) ---------------------------------------

struct CurvatureEstimate {
  double gamma_hat = 0.0;  // strong convexity lower bound over the pairs
  double beta_hat = 0.0;   // gradient Lipschitz upper bound over the pairs
  int points_used = 0;
};

// Generic form over an arbitrary objective; the quadratic test seam enters
// here.
CurvatureEstimate estimate_curvature(const ObjectiveFn& objective,
                                     const std::vector<Vec>& thetas);

// Combined-loss form: points sitting within kink_margin of a hinge kink are
// dropped first; refuses when fewer than two points survive.
CurvatureEstimate estimate_curvature(const FrozenBatch& batch,
                                     const LossWeights& weights,
                                     const std::vector<Vec>& thetas,
                                     double kink_margin = 1e-3);

// --- Convergence predicate ----------------------------------------------

struct SensitivityReport {
  double gamma_hat = 0.0;
  double beta_hat = 0.0;
  double c_hat = 0.0;
  double eps_hat = 0.0;
  double m = 0.0;  // maximum ground distance between two attribute vectors
  int horizon = 0;
  double bound_2mct = 0.0;  // 2 * m * c_hat * (t* - 1)
  // The inequality as printed: 2mc(t*-1) < beta/gamma.
  bool predicate = false;
  double margin = 0.0;
  // The performative-stability condition in its conventional orientation,
  // reported side by side: 2mc(t*-1) < gamma/beta.
  bool predicate_reciprocal = false;
  double margin_reciprocal = 0.0;
};

SensitivityReport make_sensitivity_report(double gamma_hat, double beta_hat,
                                          double c_hat, double eps_hat,
                                          double m, int horizon);

struct PredicateResult {
  bool holds = false;
  double margin = 0.0;
};

// Evaluates the printed inequality and its margin.
PredicateResult convergence_predicate(const SensitivityReport& report);

}  // namespace longfair
