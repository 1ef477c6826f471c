#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "longfair/baselines.hpp"
#include "longfair/datagen.hpp"
#include "longfair/objective.hpp"
#include "longfair/scm.hpp"
#include "longfair/trainer.hpp"

namespace longfair {

// Single-file run configuration; every subcommand reads the sections it
// needs. Cross-section consistency is validated before any work starts.
struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";

  // scm
  Eigen::Index feature_dim = 2;
  int horizon = 5;
  std::optional<Vec> truth_weights;  // explicit ground truth, else drawn
  double truth_scale = 1.0;          // scale of the drawn standard-normal truth

  // datagen
  GenConfig gen;
  std::optional<CsvSeedSpec> csv_seed;

  // training
  LossWeights weights;
  RrmConfig rrm;
  bool train_rrm = true;
  std::vector<BaselineKind> baselines;
  BaselineSpec baseline_template;

  // eval
  int eval_n = 5000;
  int replicates = 1;

  // sweep
  std::vector<double> sweep_eps;

  // sensitivity
  double clip_radius = 25.0;
  int sensitivity_n = 4000;
  double theta_spread = 0.25;
  int sensitivity_pairs = 4;
  int sensitivity_probes = 32;
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);

RunConfig load_config(const std::filesystem::path& path);

// Hash of the canonical JSON echo; stamped into every output file.
std::string config_hash(const RunConfig& cfg);

std::vector<std::string> validate_config(const RunConfig& cfg);
void require_valid(const RunConfig& cfg);

// Ground-truth model: explicit weights when given, otherwise a seeded
// standard-normal draw scaled by truth_scale.
DecisionModel make_truth_model(const RunConfig& cfg);

// Assembles the SCM for a synthetic run (Gaussian init).
TimeLaggedScm build_scm(const RunConfig& cfg, const DecisionModel& truth);

// Assembles the SCM with the initial population pinned to seed rows
// (semi-synthetic runs and evaluation against a recorded panel).
TimeLaggedScm build_scm_seeded(const RunConfig& cfg, const DecisionModel& truth,
                               std::shared_ptr<const SeedPopulationInit> init);

}  // namespace longfair
