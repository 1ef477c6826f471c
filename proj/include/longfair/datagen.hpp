#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "longfair/scm.hpp"

namespace longfair {

// Parameters of the synthetic lending panel generator.
struct GenConfig {
  int n_individuals = 0;
  int steps = 0;          // l
  double eps_update = 0;  // decision-feedback sensitivity
  double b0 = 0;          // base increment, protected group
  double b1 = 0;          // base increment, unprotected group
  Vec mean_minus;         // X^1 Gaussian parameters per group
  Vec mean_plus;
  Mat cov_minus;
  Mat cov_plus;
  std::uint64_t seed = 0;
};

std::vector<std::string> validate_gen_config(const GenConfig& cfg,
                                             Eigen::Index feature_dim);

// Rolls the full panel: S ~ Bernoulli(1/2), X^1 from the group Gaussian,
// then per step both the predicted decision and the repayment are drawn from
// the ground-truth model and the features advance by the feedback update
// rule. Deterministic given the seed; individuals use derived substreams so
// the result is independent of traversal order.
PanelDataset generate_synthetic(const TimeLaggedScm& scm, const GenConfig& cfg);

// Column scaling applied to ingested seed features.
enum class ScaleKind { Identity, ZScore };

struct CsvSeedSpec {
  std::filesystem::path path;
  std::vector<std::string> feature_columns;
  std::string s_column;  // protected-attribute column, values coerced to {0,1}
  int n_rows = 0;
  ScaleKind scale = ScaleKind::Identity;
  // When set, rows are shuffled with this seed before the first n_rows are
  // taken; otherwise file order is kept.
  std::optional<std::uint64_t> shuffle_seed;
};

struct InitialPopulation {
  std::vector<int> s;
  std::vector<Vec> x;
};

// Reads (S, X^1) seed rows from a headered CSV. Errors carry row/column
// context.
InitialPopulation ingest_csv_seed(const CsvSeedSpec& spec);

// Identical dynamics to generate_synthetic but X^1 and S come from the seed
// population (one trajectory per seed row, row order preserved).
PanelDataset generate_semi_synthetic(const InitialPopulation& seedpop,
                                     const TimeLaggedScm& scm,
                                     const GenConfig& cfg);

}  // namespace longfair
