#include "longfair/config.hpp"

#include "longfair/io.hpp"

namespace longfair {

using nlohmann::json;

namespace {

Vec vec_or(const json& j, const char* key, const Vec& fallback) {
  if (!j.contains(key)) return fallback;
  return vec_from_json(j.at(key));
}

Mat mat_or(const json& j, const char* key, const Mat& fallback) {
  if (!j.contains(key)) return fallback;
  return mat_from_json(j.at(key));
}

BaselineKind baseline_kind_from(const std::string& name) {
  if (name == "LR") return BaselineKind::LR;
  if (name == "FMDP") return BaselineKind::FMDP;
  if (name == "FMEO") return BaselineKind::FMEO;
  throw ConfigError("unknown baseline kind: " + name);
}

InnerOptSpec inner_from_json(const json& j) {
  InnerOptSpec spec;
  spec.step_size = j.value("step_size", spec.step_size);
  spec.max_steps = j.value("max_steps", spec.max_steps);
  spec.grad_tol = j.value("grad_tol", spec.grad_tol);
  spec.backtrack = j.value("backtrack", spec.backtrack);
  spec.armijo_c = j.value("armijo_c", spec.armijo_c);
  return spec;
}

json inner_to_json(const InnerOptSpec& spec) {
  json j;
  j["step_size"] = spec.step_size;
  j["max_steps"] = spec.max_steps;
  j["grad_tol"] = spec.grad_tol;
  j["backtrack"] = spec.backtrack;
  j["armijo_c"] = spec.armijo_c;
  return j;
}

}  // namespace

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  cfg.output_dir = j.value("output_dir", cfg.output_dir.string());

  if (j.contains("scm")) {
    const json& s = j["scm"];
    cfg.feature_dim = s.value("feature_dim", cfg.feature_dim);
    cfg.horizon = s.value("horizon", cfg.horizon);
    cfg.truth_scale = s.value("truth_scale", cfg.truth_scale);
    if (s.contains("truth_weights")) {
      cfg.truth_weights = vec_from_json(s["truth_weights"]);
    }
  }

  const Eigen::Index d = cfg.feature_dim;
  cfg.gen.mean_minus = Vec::Constant(d, -1.0);
  cfg.gen.mean_plus = Vec::Constant(d, 1.0);
  cfg.gen.cov_minus = Mat::Identity(d, d);
  cfg.gen.cov_plus = Mat::Identity(d, d);
  cfg.gen.n_individuals = 5000;
  cfg.gen.steps = cfg.horizon;
  if (j.contains("datagen")) {
    const json& g = j["datagen"];
    cfg.gen.n_individuals = g.value("n_individuals", cfg.gen.n_individuals);
    cfg.gen.steps = g.value("steps", cfg.gen.steps);
    cfg.gen.eps_update = g.value("eps_update", cfg.gen.eps_update);
    cfg.gen.b0 = g.value("b0", cfg.gen.b0);
    cfg.gen.b1 = g.value("b1", cfg.gen.b1);
    cfg.gen.mean_minus = vec_or(g, "mean_minus", cfg.gen.mean_minus);
    cfg.gen.mean_plus = vec_or(g, "mean_plus", cfg.gen.mean_plus);
    cfg.gen.cov_minus = mat_or(g, "cov_minus", cfg.gen.cov_minus);
    cfg.gen.cov_plus = mat_or(g, "cov_plus", cfg.gen.cov_plus);
    if (g.contains("csv_seed")) {
      const json& c = g["csv_seed"];
      CsvSeedSpec spec;
      spec.path = c.at("path").get<std::string>();
      spec.feature_columns =
          c.at("feature_columns").get<std::vector<std::string>>();
      spec.s_column = c.at("s_column").get<std::string>();
      spec.n_rows = c.at("n_rows").get<int>();
      const std::string scale = c.value("scale", std::string("identity"));
      if (scale == "identity") {
        spec.scale = ScaleKind::Identity;
      } else if (scale == "zscore") {
        spec.scale = ScaleKind::ZScore;
      } else {
        throw ConfigError("csv_seed.scale must be 'identity' or 'zscore'");
      }
      if (c.contains("shuffle_seed")) {
        spec.shuffle_seed = c["shuffle_seed"].get<std::uint64_t>();
      }
      cfg.csv_seed = std::move(spec);
    }
  }
  // Generation randomness flows from the root seed through a named stream.
  cfg.gen.seed = derive_seed(cfg.seed, "stage/datagen");

  if (j.contains("training")) {
    const json& t = j["training"];
    if (t.contains("weights")) {
      const json& w = t["weights"];
      cfg.weights.lambda_u = w.value("lambda_u", cfg.weights.lambda_u);
      cfg.weights.lambda_l = w.value("lambda_l", cfg.weights.lambda_l);
      cfg.weights.lambda_s = w.value("lambda_s", cfg.weights.lambda_s);
      cfg.weights.tau_l = w.value("tau_l", cfg.weights.tau_l);
      cfg.weights.tau_t = w.value("tau_t", cfg.weights.tau_t);
      cfg.weights.l2_reg = w.value("l2_reg", cfg.weights.l2_reg);
      cfg.weights.shortterm_plus_variant =
          w.value("shortterm_plus_variant", cfg.weights.shortterm_plus_variant);
    }
    if (t.contains("rrm")) {
      const json& r = t["rrm"];
      cfg.rrm.delta = r.value("delta", cfg.rrm.delta);
      cfg.rrm.max_outer_iters = r.value("max_outer_iters", cfg.rrm.max_outer_iters);
      cfg.rrm.mc_samples = r.value("mc_samples", cfg.rrm.mc_samples);
      if (r.contains("inner")) cfg.rrm.inner = inner_from_json(r["inner"]);
      const std::string mode = r.value("resample", std::string("common"));
      if (mode == "common") {
        cfg.rrm.resample = RrmConfig::Resample::CommonRandomNumbers;
      } else if (mode == "fresh") {
        cfg.rrm.resample = RrmConfig::Resample::FreshPerIteration;
      } else {
        throw ConfigError("rrm.resample must be 'common' or 'fresh'");
      }
    }
    cfg.train_rrm = t.value("train_rrm", cfg.train_rrm);
    if (t.contains("baselines")) {
      for (const auto& name : t["baselines"]) {
        cfg.baselines.push_back(
            baseline_kind_from(name.get<std::string>()));
      }
    }
    if (t.contains("baseline")) {
      const json& b = t["baseline"];
      cfg.baseline_template.fairness_budget =
          b.value("fairness_budget", cfg.baseline_template.fairness_budget);
      cfg.baseline_template.penalty_weight =
          b.value("penalty_weight", cfg.baseline_template.penalty_weight);
      cfg.baseline_template.l2_reg =
          b.value("l2_reg", cfg.baseline_template.l2_reg);
      if (b.contains("inner")) {
        cfg.baseline_template.inner = inner_from_json(b["inner"]);
      }
    }
  }
  cfg.rrm.seed = derive_seed(cfg.seed, "stage/train");

  if (j.contains("eval")) {
    cfg.eval_n = j["eval"].value("n", cfg.eval_n);
    cfg.replicates = j["eval"].value("replicates", cfg.replicates);
  }
  if (j.contains("sweep") && j["sweep"].contains("eps_list")) {
    cfg.sweep_eps = j["sweep"]["eps_list"].get<std::vector<double>>();
  }
  if (j.contains("sensitivity")) {
    const json& s = j["sensitivity"];
    cfg.clip_radius = s.value("clip_radius", cfg.clip_radius);
    cfg.sensitivity_n = s.value("n", cfg.sensitivity_n);
    cfg.theta_spread = s.value("theta_spread", cfg.theta_spread);
    cfg.sensitivity_pairs = s.value("pairs", cfg.sensitivity_pairs);
    cfg.sensitivity_probes = s.value("probes", cfg.sensitivity_probes);
  }
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir.string();
  json scm;
  scm["feature_dim"] = cfg.feature_dim;
  scm["horizon"] = cfg.horizon;
  scm["truth_scale"] = cfg.truth_scale;
  if (cfg.truth_weights.has_value()) {
    scm["truth_weights"] = vec_to_json(*cfg.truth_weights);
  }
  j["scm"] = std::move(scm);
  json g;
  g["n_individuals"] = cfg.gen.n_individuals;
  g["steps"] = cfg.gen.steps;
  g["eps_update"] = cfg.gen.eps_update;
  g["b0"] = cfg.gen.b0;
  g["b1"] = cfg.gen.b1;
  g["mean_minus"] = vec_to_json(cfg.gen.mean_minus);
  g["mean_plus"] = vec_to_json(cfg.gen.mean_plus);
  g["cov_minus"] = mat_to_json(cfg.gen.cov_minus);
  g["cov_plus"] = mat_to_json(cfg.gen.cov_plus);
  if (cfg.csv_seed.has_value()) {
    json c;
    c["path"] = cfg.csv_seed->path.string();
    c["feature_columns"] = cfg.csv_seed->feature_columns;
    c["s_column"] = cfg.csv_seed->s_column;
    c["n_rows"] = cfg.csv_seed->n_rows;
    c["scale"] = cfg.csv_seed->scale == ScaleKind::ZScore ? "zscore" : "identity";
    if (cfg.csv_seed->shuffle_seed.has_value()) {
      c["shuffle_seed"] = *cfg.csv_seed->shuffle_seed;
    }
    g["csv_seed"] = std::move(c);
  }
  j["datagen"] = std::move(g);
  json t;
  {
    json w;
    w["lambda_u"] = cfg.weights.lambda_u;
    w["lambda_l"] = cfg.weights.lambda_l;
    w["lambda_s"] = cfg.weights.lambda_s;
    w["tau_l"] = cfg.weights.tau_l;
    w["tau_t"] = cfg.weights.tau_t;
    w["l2_reg"] = cfg.weights.l2_reg;
    w["shortterm_plus_variant"] = cfg.weights.shortterm_plus_variant;
    t["weights"] = std::move(w);
    json r;
    r["delta"] = cfg.rrm.delta;
    r["max_outer_iters"] = cfg.rrm.max_outer_iters;
    r["mc_samples"] = cfg.rrm.mc_samples;
    r["resample"] =
        cfg.rrm.resample == RrmConfig::Resample::CommonRandomNumbers ? "common"
                                                                     : "fresh";
    r["inner"] = inner_to_json(cfg.rrm.inner);
    t["rrm"] = std::move(r);
    t["train_rrm"] = cfg.train_rrm;
    json names = json::array();
    for (auto kind : cfg.baselines) names.push_back(baseline_name(kind));
    t["baselines"] = std::move(names);
    json b;
    b["fairness_budget"] = cfg.baseline_template.fairness_budget;
    b["penalty_weight"] = cfg.baseline_template.penalty_weight;
    b["l2_reg"] = cfg.baseline_template.l2_reg;
    b["inner"] = inner_to_json(cfg.baseline_template.inner);
    t["baseline"] = std::move(b);
  }
  j["training"] = std::move(t);
  j["eval"] = {{"n", cfg.eval_n}, {"replicates", cfg.replicates}};
  j["sweep"] = {{"eps_list", cfg.sweep_eps}};
  j["sensitivity"] = {{"clip_radius", cfg.clip_radius},
                      {"n", cfg.sensitivity_n},
                      {"theta_spread", cfg.theta_spread},
                      {"pairs", cfg.sensitivity_pairs},
                      {"probes", cfg.sensitivity_probes}};
  return j;
}

RunConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const RunConfig& cfg) {
  return hash_hex(fnv1a(config_to_json(cfg).dump()));
}

std::vector<std::string> validate_config(const RunConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.feature_dim < 1) out.push_back("scm.feature_dim must be >= 1");
  if (cfg.horizon < 1) out.push_back("scm.horizon must be >= 1");
  if (cfg.gen.steps < cfg.horizon) {
    out.push_back("datagen.steps must cover the horizon");
  }
  for (const auto& v : validate_gen_config(cfg.gen, cfg.feature_dim)) {
    out.push_back("datagen." + v);
  }
  if (cfg.truth_weights.has_value() &&
      cfg.truth_weights->size() != cfg.feature_dim + 2) {
    out.push_back("scm.truth_weights must have length feature_dim + 2");
  }
  for (const auto& v : validate_weights(cfg.weights)) {
    out.push_back("training.weights." + v);
  }
  if (cfg.rrm.delta <= 0) out.push_back("training.rrm.delta must be > 0");
  if (cfg.rrm.max_outer_iters < 1) {
    out.push_back("training.rrm.max_outer_iters must be >= 1");
  }
  if (cfg.rrm.mc_samples < 1) {
    out.push_back("training.rrm.mc_samples must be >= 1");
  }
  for (const auto& v : validate_baseline_spec(cfg.baseline_template)) {
    out.push_back("training.baseline." + v);
  }
  if (cfg.eval_n < 1) out.push_back("eval.n must be >= 1");
  if (cfg.replicates < 1) out.push_back("eval.replicates must be >= 1");
  if (cfg.csv_seed.has_value()) {
    if (cfg.csv_seed->n_rows < 1) out.push_back("csv_seed.n_rows must be >= 1");
    if (static_cast<Eigen::Index>(cfg.csv_seed->feature_columns.size()) !=
        cfg.feature_dim) {
      out.push_back("csv_seed.feature_columns must match scm.feature_dim");
    }
  }
  if (cfg.clip_radius <= 0) out.push_back("sensitivity.clip_radius must be > 0");
  return out;
}

void require_valid(const RunConfig& cfg) {
  const auto violations = validate_config(cfg);
  if (violations.empty()) return;
  std::string msg = "invalid config:";
  for (const auto& v : violations) msg += "\n  - " + v;
  throw ConfigError(msg);
}

DecisionModel make_truth_model(const RunConfig& cfg) {
  if (cfg.truth_weights.has_value()) {
    return DecisionModel(*cfg.truth_weights);
  }
  Rng rng(derive_seed(cfg.seed, "truth_model"));
  Vec w = rng.normal_vec(cfg.feature_dim + 2) * cfg.truth_scale;
  return DecisionModel(std::move(w));
}

TimeLaggedScm build_scm(const RunConfig& cfg, const DecisionModel& truth) {
  TimeLaggedScm scm;
  scm.feature_dim = cfg.feature_dim;
  scm.horizon = cfg.horizon;
  scm.truth_model = truth;
  scm.partition = FeaturePartition::all_relevant(cfg.feature_dim);
  scm.init_sampler = std::make_shared<GaussianInit>(
      cfg.gen.mean_minus, cfg.gen.mean_plus, cfg.gen.cov_minus,
      cfg.gen.cov_plus);
  scm.transition = std::make_shared<LendingDynamics>(
      cfg.gen.eps_update, cfg.gen.b0, cfg.gen.b1, truth, scm.partition);
  return scm;
}

TimeLaggedScm build_scm_seeded(const RunConfig& cfg, const DecisionModel& truth,
                               std::shared_ptr<const SeedPopulationInit> init) {
  TimeLaggedScm scm;
  scm.feature_dim = cfg.feature_dim;
  scm.horizon = cfg.horizon;
  scm.truth_model = truth;
  scm.partition = FeaturePartition::all_relevant(cfg.feature_dim);
  scm.init_sampler = std::move(init);
  scm.transition = std::make_shared<LendingDynamics>(
      cfg.gen.eps_update, cfg.gen.b0, cfg.gen.b1, truth, scm.partition);
  return scm;
}

}  // namespace longfair
