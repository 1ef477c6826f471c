#include "longfair/commands.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <tuple>

#include "longfair/baselines.hpp"
#include "longfair/evaluate.hpp"
#include "longfair/io.hpp"
#include "longfair/sensitivity.hpp"

namespace longfair {

namespace fs = std::filesystem;
using nlohmann::json;

namespace outfile {

namespace {
std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}
}  // namespace

std::string model(const std::string& algorithm) {
  return "model_" + lower(algorithm) + ".json";
}
std::string report(const std::string& algorithm) {
  return "report_" + lower(algorithm) + ".json";
}

}  // namespace outfile

namespace {

struct Bundle {
  RunConfig manifest_cfg;  // configuration echoed into the manifest
  DecisionModel truth;
  PanelDataset panel;
  TimeLaggedScm scm;
  bool semi_synthetic = false;
  std::string hash;
};

json make_manifest(const RunConfig& cfg, const DecisionModel& truth,
                   const PanelDataset& panel, bool semi) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "panel_manifest";
  j["config"] = config_to_json(cfg);
  j["config_hash"] = config_hash(cfg);
  j["seed"] = cfg.seed;
  j["n"] = panel.size();
  j["steps"] = panel.steps;
  j["feature_dim"] = cfg.feature_dim;
  j["semi_synthetic"] = semi;
  j["theta_star"] = vec_to_json(truth.weights);
  return j;
}

Bundle load_bundle(const RunConfig& cfg) {
  Bundle b;
  const fs::path manifest_path = cfg.output_dir / outfile::kManifest;
  const fs::path panel_path = cfg.output_dir / outfile::kPanel;
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw DataError("bad manifest " + manifest_path.string() + ": " + e.what());
  }
  b.manifest_cfg = config_from_json(manifest.at("config"));
  b.truth = DecisionModel(vec_from_json(manifest.at("theta_star")));
  b.semi_synthetic = manifest.value("semi_synthetic", false);
  b.hash = manifest.value("config_hash", std::string{});
  b.panel = panel_from_jsonl(read_file(panel_path));
  if (b.panel.steps < b.manifest_cfg.horizon) {
    throw DataError("recorded panel has fewer steps than the horizon");
  }
  if (b.semi_synthetic) {
    std::vector<Vec> first;
    first.reserve(b.panel.size());
    for (const auto& traj : b.panel.x) first.push_back(traj[0]);
    b.scm = build_scm_seeded(
        b.manifest_cfg, b.truth,
        std::make_shared<SeedPopulationInit>(b.panel.s, std::move(first)));
  } else {
    b.scm = build_scm(b.manifest_cfg, b.truth);
  }
  return b;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_convergence_csv(const fs::path& path, const RrmTrace& trace,
                           const RunConfig& cfg) {
  std::ostringstream os;
  os << csv_stamp(config_hash(cfg), cfg.seed);
  os << "iteration,delta,loss_u,loss_l,loss_s,loss_total\n";
  for (const auto& row : trace.iterations) {
    os << row.iter << ',' << format_double(row.delta) << ','
       << format_double(row.loss.utility) << ','
       << format_double(row.loss.longterm) << ','
       << format_double(row.loss.shortterm) << ','
       << format_double(row.loss.total) << '\n';
  }
  write_file_atomic(path, os.str());
}

void save_model(const RunConfig& cfg, const DecisionModel& model,
                const std::string& algorithm) {
  ModelFile mf;
  mf.model = model;
  mf.algorithm = algorithm;
  mf.horizon = cfg.horizon;
  mf.config_hash = config_hash(cfg);
  mf.seed = cfg.seed;
  write_file_atomic(cfg.output_dir / outfile::model(algorithm),
                    model_to_json(mf));
}

}  // namespace

int cmd_generate(const RunConfig& cfg, bool dry_run, std::ostream& log) {
  require_valid(cfg);
  const DecisionModel truth = make_truth_model(cfg);

  TimeLaggedScm scm;
  PanelDataset panel;
  bool semi = false;
  if (cfg.csv_seed.has_value()) {
    semi = true;
    const InitialPopulation pop = ingest_csv_seed(*cfg.csv_seed);
    if (dry_run) {
      log << "dry-run: config OK, csv seed OK (" << pop.s.size() << " rows)\n";
      return 0;
    }
    auto init = std::make_shared<SeedPopulationInit>(pop.s, pop.x);
    scm = build_scm_seeded(cfg, truth, init);
    require_valid(scm);
    panel = generate_semi_synthetic(pop, scm, cfg.gen);
  } else {
    if (dry_run) {
      scm = build_scm(cfg, truth);
      require_valid(scm);
      log << "dry-run: config OK\n";
      return 0;
    }
    scm = build_scm(cfg, truth);
    require_valid(scm);
    panel = generate_synthetic(scm, cfg.gen);
  }

  write_file_atomic(cfg.output_dir / outfile::kPanel, panel_to_jsonl(panel));
  write_file_atomic(cfg.output_dir / outfile::kManifest,
                    make_manifest(cfg, truth, panel, semi).dump(2) + "\n");

  std::size_t n_plus = 0;
  long long positives = 0, labels = 0;
  for (std::size_t i = 0; i < panel.size(); ++i) {
    n_plus += static_cast<std::size_t>(panel.s[i]);
    for (int y : panel.y[i]) {
      labels += 1;
      positives += (y == 1);
    }
  }
  log << "panel: " << panel.size() << " individuals, " << panel.steps
      << " steps, groups s+=" << n_plus << " s-=" << (panel.size() - n_plus)
      << ", base positive rate "
      << static_cast<double>(positives) / static_cast<double>(labels) << "\n";
  log << "wrote " << (cfg.output_dir / outfile::kPanel).string() << " and "
      << (cfg.output_dir / outfile::kManifest).string() << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& log) {
  require_valid(cfg);
  const Bundle bundle = load_bundle(cfg);

  if (cfg.train_rrm) {
    RrmConfig rrm = cfg.rrm;
    try {
      auto [model, trace] = rrm_fit(bundle.scm, bundle.panel, cfg.weights, rrm);
      save_model(cfg, model, "RRM");
      write_file_atomic(cfg.output_dir / outfile::kTrace,
                        trace_to_jsonl(trace, config_hash(cfg), cfg.seed));
      write_convergence_csv(cfg.output_dir / outfile::kConvergence, trace, cfg);
      double wall = 0;
      for (const auto& row : trace.iterations) wall += row.wall_ms;
      log << "rrm: " << trace.iterations.size() << " iterations, "
          << (trace.converged
                  ? "converged at iteration " + std::to_string(trace.converged_iter)
                  : "iteration cap reached")
          << ", " << wall << " ms total\n";
    } catch (const TrainerDivergence& e) {
      // Preserve whatever trace exists before failing the stage.
      write_file_atomic(cfg.output_dir / outfile::kTrace,
                        trace_to_jsonl(e.trace, config_hash(cfg), cfg.seed));
      write_convergence_csv(cfg.output_dir / outfile::kConvergence, e.trace,
                            cfg);
      log << "rrm diverged: " << e.what() << "\n";
      return 1;
    }
  }

  for (BaselineKind kind : cfg.baselines) {
    BaselineSpec spec = cfg.baseline_template;
    spec.kind = kind;
    const DecisionModel model =
        fit_baseline(bundle.panel, spec, derive_seed(cfg.seed, "stage/baseline"));
    save_model(cfg, model, baseline_name(kind));
    log << "baseline " << baseline_name(kind) << ": fit done\n";
  }
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  require_valid(cfg);
  const Bundle bundle = load_bundle(cfg);

  // Deterministic model discovery: RRM first, then configured baselines.
  std::vector<std::string> algorithms;
  if (cfg.train_rrm) algorithms.push_back("RRM");
  for (BaselineKind kind : cfg.baselines) {
    algorithms.push_back(baseline_name(kind));
  }
  if (algorithms.empty()) throw ConfigError("cmd_evaluate: nothing to evaluate");

  std::vector<EvalReport> means, stds;
  for (const auto& alg : algorithms) {
    const fs::path model_path = cfg.output_dir / outfile::model(alg);
    const ModelFile mf = model_from_json(read_file(model_path));
    if (mf.horizon != cfg.horizon) {
      throw DataError("model " + model_path.string() + " was trained for "
                      "horizon " + std::to_string(mf.horizon) +
                      " but the config asks for " + std::to_string(cfg.horizon));
    }
    std::vector<EvalReport> reps;
    for (int r = 0; r < cfg.replicates; ++r) {
      reps.push_back(deploy_and_measure(
          bundle.scm, mf.model, cfg.eval_n,
          derive_seed(cfg.seed, "stage/eval", static_cast<std::uint64_t>(r)),
          mf.algorithm));
    }

    json per_rep;
    per_rep["schema_version"] = kSchemaVersion;
    per_rep["kind"] = "eval_report";
    per_rep["algorithm"] = mf.algorithm;
    per_rep["config_hash"] = config_hash(cfg);
    per_rep["n"] = cfg.eval_n;
    per_rep["replicates"] = cfg.replicates;
    json arr = json::array();
    for (const auto& rep : reps) {
      json one;
      one["seed"] = rep.seed;
      one["model_hash"] = hash_hex(rep.model_hash);
      one["accuracy"] = rep.accuracy;
      one["short_term"] = rep.short_effect;
      one["long_term"] = rep.long_effect;
      arr.push_back(std::move(one));
    }
    per_rep["runs"] = std::move(arr);
    write_file_atomic(cfg.output_dir / outfile::report(alg),
                      per_rep.dump(2) + "\n");

    EvalReport mean = reps.front();
    EvalReport sd = reps.front();
    const auto horizon = static_cast<std::size_t>(mean.horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
      auto moments = [&](auto getter) {
        double m = 0;
        for (const auto& rep : reps) m += getter(rep)[t];
        m /= static_cast<double>(reps.size());
        double v = 0;
        for (const auto& rep : reps) {
          v += (getter(rep)[t] - m) * (getter(rep)[t] - m);
        }
        v = reps.size() > 1 ? std::sqrt(v / static_cast<double>(reps.size() - 1))
                            : 0.0;
        return std::pair<double, double>{m, v};
      };
      std::tie(mean.accuracy[t], sd.accuracy[t]) =
          moments([](const EvalReport& r) -> const std::vector<double>& {
            return r.accuracy;
          });
      std::tie(mean.short_effect[t], sd.short_effect[t]) =
          moments([](const EvalReport& r) -> const std::vector<double>& {
            return r.short_effect;
          });
      std::tie(mean.long_effect[t], sd.long_effect[t]) =
          moments([](const EvalReport& r) -> const std::vector<double>& {
            return r.long_effect;
          });
    }
    means.push_back(std::move(mean));
    stds.push_back(std::move(sd));
    log << "evaluated " << alg << " over " << cfg.replicates
        << " replicate(s)\n";
  }

  const std::string table = cfg.replicates > 1 ? emit_table(means, stds)
                                               : emit_table(means);
  write_file_atomic(cfg.output_dir / outfile::kTables,
                    csv_stamp(config_hash(cfg), cfg.seed) + table);
  log << "wrote " << (cfg.output_dir / outfile::kTables).string() << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& cfg, std::vector<double> eps_list,
              std::ostream& log) {
  require_valid(cfg);
  if (eps_list.empty()) throw ConfigError("cmd_sweep: empty eps list");
  std::vector<double> eps_unique;
  for (double e : eps_list) {
    if (std::find(eps_unique.begin(), eps_unique.end(), e) != eps_unique.end()) {
      log << "warning: duplicate eps value " << e << " dropped\n";
      continue;
    }
    eps_unique.push_back(e);
  }

  std::ostringstream rows;
  rows << csv_stamp(config_hash(cfg), cfg.seed);
  rows << "eps,iteration,delta,converged,status\n";
  std::ostringstream summary;
  summary << csv_stamp(config_hash(cfg), cfg.seed);
  summary << "eps,status,converged,iterations,final_delta,c_hat,"
             "margin_as_printed,margin_reciprocal\n";

  bool all_ok = true;
  for (double eps : eps_unique) {
    RunConfig run = cfg;
    run.gen.eps_update = eps;
    std::string status = "ok";
    RrmTrace trace;
    DecisionModel model;
    TimeLaggedScm scm;
    PanelDataset panel;
    try {
      const DecisionModel truth = make_truth_model(run);
      scm = build_scm(run, truth);
      require_valid(scm);
      panel = generate_synthetic(scm, run.gen);
      std::tie(model, trace) = rrm_fit(scm, panel, run.weights, run.rrm);
    } catch (const TrainerDivergence& e) {
      status = "diverged";
      trace = e.trace;
      all_ok = false;
    } catch (const Error& e) {
      log << "eps=" << eps << " failed: " << e.what() << "\n";
      summary << format_double(eps) << ",error,false,0,,,\n";
      all_ok = false;
      continue;
    }

    for (const auto& row : trace.iterations) {
      rows << format_double(eps) << ',' << row.iter << ','
           << format_double(row.delta) << ','
           << (trace.converged ? "true" : "false") << ',' << status << '\n';
    }

    double c_hat = std::numeric_limits<double>::quiet_NaN();
    double margin = std::numeric_limits<double>::quiet_NaN();
    double margin_rec = std::numeric_limits<double>::quiet_NaN();
    if (status == "ok") {
      try {
        const FrozenBatch batch =
            freeze_batch(scm, panel, model, std::min(run.rrm.mc_samples, 2000),
                         derive_seed(run.seed, "sweep/batch"));
        Rng rng(derive_seed(run.seed, "sweep/thetas"));
        std::vector<Vec> thetas;
        for (int k = 0; k < 6; ++k) {
          thetas.push_back(model.weights +
                           run.theta_spread * rng.normal_vec(model.weights.size()));
        }
        const CurvatureEstimate curv =
            estimate_curvature(batch, run.weights, thetas, 1e-4);
        std::vector<CProbe> probes;
        CEstimateOpts copts;
        copts.seed = derive_seed(run.seed, "sweep/c");
        for (int k = 0; k < 16; ++k) {
          CProbe probe;
          const Eigen::Index row = k % batch.longterm_minus.rows();
          probe.x = batch.longterm_minus.row(row).transpose();
          probe.s = k % 2;
          TransitionContext ctx;
          ctx.s_backdrop = probe.s;
          ctx.s_redlining = probe.s;
          const Vec fw = model.feature_weights();
          ctx.deployed_feature_weights = &fw;
          Rng prng(derive_seed(run.seed, "sweep/probe", static_cast<std::uint64_t>(k)));
          probe.x_next = scm.transition->sample(probe.x, k % 4 < 2 ? 1 : -1,
                                                ctx, prng);
          probes.push_back(std::move(probe));
        }
        const CEstimate c = estimate_c(scm, {model}, probes, copts);
        c_hat = c.c_hat;
        const ClipBox box{Vec::Constant(cfg.feature_dim, -cfg.clip_radius),
                          Vec::Constant(cfg.feature_dim, cfg.clip_radius)};
        const SensitivityReport rep = make_sensitivity_report(
            curv.gamma_hat, curv.beta_hat, c_hat, 0.0, box.diameter(),
            cfg.horizon);
        margin = rep.margin;
        margin_rec = rep.margin_reciprocal;
      } catch (const Error& e) {
        log << "eps=" << eps << ": sensitivity summary skipped: " << e.what()
            << "\n";
      }
    }

    const double final_delta =
        trace.iterations.empty() ? std::numeric_limits<double>::quiet_NaN()
                                 : trace.iterations.back().delta;
    summary << format_double(eps) << ',' << status << ','
            << (trace.converged ? "true" : "false") << ','
            << trace.iterations.size() << ',' << format_double(final_delta)
            << ',' << format_double(c_hat) << ',' << format_double(margin)
            << ',' << format_double(margin_rec) << '\n';
    log << "eps=" << eps << ": " << status << ", "
        << (trace.converged ? "converged" : "not converged") << " in "
        << trace.iterations.size() << " iterations\n";
  }

  write_file_atomic(cfg.output_dir / outfile::kSweep, rows.str());
  write_file_atomic(cfg.output_dir / outfile::kSweepSummary, summary.str());
  return all_ok ? 0 : 1;
}

int cmd_sensitivity(const RunConfig& cfg, std::ostream& log) {
  require_valid(cfg);
  const Bundle bundle = load_bundle(cfg);
  const fs::path model_path = cfg.output_dir / outfile::model("RRM");
  const ModelFile mf = model_from_json(read_file(model_path));

  const FrozenBatch batch =
      freeze_batch(bundle.scm, bundle.panel, mf.model, cfg.sensitivity_n,
                   derive_seed(cfg.seed, "sens/batch"));

  Rng rng(derive_seed(cfg.seed, "sens/thetas"));
  std::vector<Vec> thetas;
  const int n_thetas = std::max(cfg.sensitivity_pairs + 1, 6);
  for (int k = 0; k < n_thetas; ++k) {
    thetas.push_back(mf.model.weights +
                     cfg.theta_spread * rng.normal_vec(mf.model.weights.size()));
  }
  const CurvatureEstimate curv =
      estimate_curvature(batch, cfg.weights, thetas, 1e-4);

  const ClipBox box{Vec::Constant(cfg.feature_dim, -cfg.clip_radius),
                    Vec::Constant(cfg.feature_dim, cfg.clip_radius)};
  EpsSensitivityOpts eopts;
  eopts.mode = EffectKind::LongTerm;
  eopts.target_time = cfg.horizon;
  eopts.n = cfg.sensitivity_n;
  eopts.clip = box;
  eopts.seed = derive_seed(cfg.seed, "sens/eps");
  std::vector<std::pair<DecisionModel, DecisionModel>> pairs;
  for (int k = 0; k < cfg.sensitivity_pairs; ++k) {
    pairs.emplace_back(mf.model, DecisionModel(thetas[static_cast<std::size_t>(k)]));
  }
  const EpsEstimate eps = estimate_eps_sensitivity(bundle.scm, pairs, eopts);

  std::vector<CProbe> probes;
  CEstimateOpts copts;
  copts.seed = derive_seed(cfg.seed, "sens/c");
  const Vec fw = mf.model.feature_weights();
  for (int k = 0; k < cfg.sensitivity_probes; ++k) {
    CProbe probe;
    const Eigen::Index row =
        static_cast<Eigen::Index>(k) % batch.longterm_minus.rows();
    probe.x = batch.longterm_minus.row(row).transpose();
    probe.s = k % 2;
    TransitionContext ctx;
    ctx.s_backdrop = probe.s;
    ctx.s_redlining = probe.s;
    ctx.deployed_feature_weights = &fw;
    Rng prng(derive_seed(cfg.seed, "sens/probe", static_cast<std::uint64_t>(k)));
    probe.x_next =
        bundle.scm.transition->sample(probe.x, k % 4 < 2 ? 1 : -1, ctx, prng);
    probes.push_back(std::move(probe));
  }
  std::vector<DecisionModel> grid = {mf.model};
  for (int k = 0; k < 2 && k < n_thetas; ++k) {
    grid.emplace_back(thetas[static_cast<std::size_t>(k)]);
  }
  const CEstimate c = estimate_c(bundle.scm, grid, probes, copts);

  const SensitivityReport report = make_sensitivity_report(
      curv.gamma_hat, curv.beta_hat, c.c_hat, eps.eps_hat, box.diameter(),
      cfg.horizon);
  json j = sensitivity_to_json(report);
  j["config_hash"] = config_hash(cfg);
  j["eps_pairs_used"] = eps.pairs_used;
  j["eps_pairs_excluded"] = eps.pairs_excluded;
  j["c_probes_used"] = c.probes_used;
  j["c_probes_skipped"] = c.probes_skipped;
  write_file_atomic(cfg.output_dir / outfile::kSensitivity, j.dump(2) + "\n");
  log << "sensitivity: gamma=" << report.gamma_hat << " beta=" << report.beta_hat
      << " c=" << report.c_hat << " eps=" << report.eps_hat
      << " bound=" << report.bound_2mct
      << " predicate(as printed)=" << (report.predicate ? "true" : "false")
      << " predicate(reciprocal)="
      << (report.predicate_reciprocal ? "true" : "false") << "\n";
  return 0;
}

}  // namespace longfair
