#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "longfair/commands.hpp"
#include "longfair/io.hpp"

using namespace longfair;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_config_json(const fs::path& out) {
  nlohmann::json j;
  j["seed"] = 321;
  j["output_dir"] = out.string();
  j["scm"] = {{"feature_dim", 2}, {"horizon", 2}, {"truth_scale", 1.5}};
  j["datagen"] = {{"n_individuals", 250}, {"steps", 2},   {"eps_update", 0.5},
                  {"b0", 0.1},            {"b1", 0.4}};
  j["training"] = {
      {"weights",
       {{"lambda_u", 0.6}, {"lambda_l", 0.2}, {"lambda_s", 0.2},
        {"l2_reg", 0.01}}},
      {"rrm",
       {{"delta", 1e-4}, {"max_outer_iters", 25}, {"mc_samples", 400},
        {"inner", {{"grad_tol", 1e-8}, {"max_steps", 3000}}}}},
      {"baselines", {"LR"}}};
  j["eval"] = {{"n", 300}, {"replicates", 2}};
  return j;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("panel jsonl: round trip preserves every field") {
  Rng rng(71);
  PanelDataset panel;
  panel.steps = 3;
  for (int i = 0; i < 20; ++i) {
    panel.s.push_back(rng.bernoulli(0.5) ? 1 : 0);
    std::vector<Vec> xs;
    std::vector<int> ys, yh;
    for (int t = 0; t < 3; ++t) {
      xs.push_back(rng.normal_vec(2));
      ys.push_back(rng.bernoulli(0.5) ? 1 : -1);
      yh.push_back(rng.bernoulli(0.5) ? 1 : -1);
    }
    panel.x.push_back(std::move(xs));
    panel.y.push_back(std::move(ys));
    panel.y_hat.push_back(std::move(yh));
  }
  const PanelDataset back = panel_from_jsonl(panel_to_jsonl(panel));
  REQUIRE(back.size() == panel.size());
  CHECK(back.steps == panel.steps);
  for (std::size_t i = 0; i < panel.size(); ++i) {
    CHECK(back.s[i] == panel.s[i]);
    CHECK(back.y[i] == panel.y[i]);
    CHECK(back.y_hat[i] == panel.y_hat[i]);
    for (int t = 0; t < 3; ++t) {
      CHECK(back.x[i][static_cast<std::size_t>(t)] ==
            panel.x[i][static_cast<std::size_t>(t)]);
    }
  }
}

TEST_CASE("panel jsonl: malformed line reports its position") {
  CHECK_THROWS_WITH_AS(panel_from_jsonl("not json\n"),
                       doctest::Contains("line 1"), DataError);
}

TEST_CASE("model json: round trip and corruption errors") {
  ModelFile mf;
  Vec w(4);
  w << 0.25, -1.5, 0.75, 0.0;
  mf.model = DecisionModel(w);
  mf.algorithm = "RRM";
  mf.horizon = 5;
  mf.config_hash = "abc123";
  mf.seed = 99;
  const ModelFile back = model_from_json(model_to_json(mf));
  CHECK(back.model.weights == mf.model.weights);
  CHECK(back.algorithm == "RRM");
  CHECK(back.horizon == 5);
  CHECK(back.config_hash == "abc123");
  CHECK_THROWS_AS(model_from_json("{"), DataError);
}

TEST_CASE("write_file_atomic: no temp residue and content lands") {
  const fs::path dir = fresh_dir("longfair_io_test");
  const fs::path target = dir / "a.txt";
  write_file_atomic(target, "hello\n");
  CHECK(read_file(target) == "hello\n");
  CHECK(!fs::exists(target.string() + ".tmp"));
  write_file_atomic(target, "replaced\n");
  CHECK(read_file(target) == "replaced\n");
}

TEST_CASE("config: parse, echo, hash stability") {
  const fs::path dir = fresh_dir("longfair_cfg_test");
  const RunConfig cfg = config_from_json(small_config_json(dir));
  CHECK(cfg.feature_dim == 2);
  CHECK(cfg.horizon == 2);
  CHECK(cfg.gen.n_individuals == 250);
  CHECK(cfg.weights.lambda_u == 0.6);
  CHECK(validate_config(cfg).empty());

  const std::string h1 = config_hash(cfg);
  const std::string h2 = config_hash(config_from_json(config_to_json(cfg)));
  CHECK(h1 == h2);
  CHECK(h1.size() == 16);

  RunConfig other = cfg;
  other.seed = 999;
  // Stage seeds derive from the root, so the echo must differ.
  nlohmann::json mutated = small_config_json(dir);
  mutated["seed"] = 999;
  CHECK(config_hash(config_from_json(mutated)) != h1);
}

TEST_CASE("config: cross-section inconsistencies are rejected early") {
  const fs::path dir = fresh_dir("longfair_cfg_bad");
  nlohmann::json j = small_config_json(dir);
  j["datagen"]["steps"] = 1;  // shorter than the horizon
  CHECK(!validate_config(config_from_json(j)).empty());

  j = small_config_json(dir);
  j["training"]["weights"]["lambda_u"] = 0.9;  // weights no longer sum to 1
  CHECK(!validate_config(config_from_json(j)).empty());

  j = small_config_json(dir);
  j["scm"]["truth_weights"] = {1.0, 2.0};  // wrong length
  CHECK(!validate_config(config_from_json(j)).empty());
}

TEST_CASE("cmd_generate: dry run validates without writing files") {
  const fs::path dir = fresh_dir("longfair_dry");
  const RunConfig cfg = config_from_json(small_config_json(dir));
  std::ostringstream log;
  CHECK(cmd_generate(cfg, true, log) == 0);
  CHECK(!fs::exists(dir / outfile::kPanel));
  CHECK(!fs::exists(dir / outfile::kManifest));
}

TEST_CASE("cmd pipeline: generate, train, evaluate, rerun byte-identical") {
  const fs::path dir = fresh_dir("longfair_pipe");
  const RunConfig cfg = config_from_json(small_config_json(dir));
  std::ostringstream log;
  REQUIRE(cmd_generate(cfg, false, log) == 0);
  REQUIRE(fs::exists(dir / outfile::kPanel));
  REQUIRE(fs::exists(dir / outfile::kManifest));
  REQUIRE(cmd_train(cfg, log) == 0);
  REQUIRE(fs::exists(dir / outfile::model("RRM")));
  REQUIRE(fs::exists(dir / outfile::model("LR")));
  REQUIRE(fs::exists(dir / outfile::kTrace));
  REQUIRE(cmd_evaluate(cfg, log) == 0);
  REQUIRE(fs::exists(dir / outfile::kTables));
  REQUIRE(fs::exists(dir / outfile::report("RRM")));

  const std::string panel_a = read_file(dir / outfile::kPanel);
  const std::string trace_a = read_file(dir / outfile::kTrace);
  const std::string table_a = read_file(dir / outfile::kTables);

  // Full rerun into a second directory.
  const fs::path dir2 = fresh_dir("longfair_pipe2");
  nlohmann::json j2 = small_config_json(dir2);
  const RunConfig cfg2 = config_from_json(j2);
  REQUIRE(cmd_generate(cfg2, false, log) == 0);
  REQUIRE(cmd_train(cfg2, log) == 0);
  REQUIRE(cmd_evaluate(cfg2, log) == 0);
  CHECK(read_file(dir2 / outfile::kPanel) == panel_a);
  CHECK(read_file(dir2 / outfile::kTrace) == trace_a);
  CHECK(read_file(dir2 / outfile::kTables) == table_a);

  // The replicate table carries spread columns.
  CHECK(table_a.find("_std") != std::string::npos);
}

TEST_CASE("cmd_evaluate: horizon mismatch against the model manifest") {
  const fs::path dir = fresh_dir("longfair_mismatch");
  nlohmann::json j = small_config_json(dir);
  const RunConfig cfg = config_from_json(j);
  std::ostringstream log;
  REQUIRE(cmd_generate(cfg, false, log) == 0);
  REQUIRE(cmd_train(cfg, log) == 0);
  j["scm"]["horizon"] = 1;
  j["datagen"]["steps"] = 2;
  const RunConfig shrunk = config_from_json(j);
  CHECK_THROWS_AS(cmd_evaluate(shrunk, log), DataError);
}

TEST_CASE("cmd_sweep: duplicates warned, series recorded") {
  const fs::path dir = fresh_dir("longfair_sweep");
  nlohmann::json j = small_config_json(dir);
  j["datagen"]["n_individuals"] = 120;
  j["training"]["rrm"]["mc_samples"] = 200;
  const RunConfig cfg = config_from_json(j);
  std::ostringstream log;
  const int rc = cmd_sweep(cfg, {0.0, 0.0, 0.4}, log);
  CHECK(rc == 0);
  CHECK(log.str().find("duplicate") != std::string::npos);
  const std::string csv = read_file(dir / outfile::kSweep);
  CHECK(csv.find("eps,iteration,delta,converged,status") != std::string::npos);
  CHECK(csv.find("0,1,") != std::string::npos);
  CHECK(fs::exists(dir / outfile::kSweepSummary));
}

TEST_CASE("cmd_train: baselines-only request emits no trace") {
  const fs::path dir = fresh_dir("longfair_nobaseline");
  nlohmann::json j = small_config_json(dir);
  j["training"]["train_rrm"] = false;
  const RunConfig cfg = config_from_json(j);
  std::ostringstream log;
  REQUIRE(cmd_generate(cfg, false, log) == 0);
  REQUIRE(cmd_train(cfg, log) == 0);
  CHECK(!fs::exists(dir / outfile::kTrace));
  CHECK(fs::exists(dir / outfile::model("LR")));
}

TEST_CASE("cmd_train: an iteration cap of one records exactly one iteration") {
  const fs::path dir = fresh_dir("longfair_cap1");
  nlohmann::json j = small_config_json(dir);
  j["training"]["rrm"]["max_outer_iters"] = 1;
  const RunConfig cfg = config_from_json(j);
  std::ostringstream log;
  REQUIRE(cmd_generate(cfg, false, log) == 0);
  REQUIRE(cmd_train(cfg, log) == 0);
  const std::string trace = read_file(dir / outfile::kTrace);
  int lines = 0;
  for (char c : trace) lines += c == '\n';
  CHECK(lines == 2);  // header plus one iteration row
}

TEST_CASE("cmd_evaluate: table cells match moments of the replicate reports") {
  const fs::path dir = fresh_dir("longfair_moments");
  nlohmann::json j = small_config_json(dir);
  j["eval"]["replicates"] = 3;
  const RunConfig cfg = config_from_json(j);
  std::ostringstream log;
  REQUIRE(cmd_generate(cfg, false, log) == 0);
  REQUIRE(cmd_train(cfg, log) == 0);
  REQUIRE(cmd_evaluate(cfg, log) == 0);

  const nlohmann::json rep =
      nlohmann::json::parse(read_file(dir / outfile::report("RRM")));
  double mean_acc1 = 0.0;
  for (const auto& run : rep.at("runs")) {
    mean_acc1 += run.at("accuracy")[0].get<double>();
  }
  mean_acc1 /= 3.0;

  std::istringstream table(read_file(dir / outfile::kTables));
  std::string line;
  double cell = -1.0;
  while (std::getline(table, line)) {
    if (line.rfind("RRM,accuracy,", 0) == 0) {
      std::istringstream row(line.substr(std::string("RRM,accuracy,").size()));
      std::string first;
      std::getline(row, first, ',');
      cell = std::stod(first);
    }
  }
  REQUIRE(cell >= 0.0);
  CHECK(std::abs(cell - mean_acc1) <= 5e-4 + 1e-12);  // three-decimal rounding
}

TEST_CASE("cmd_sensitivity: emits a complete report for the trained model") {
  const fs::path dir = fresh_dir("longfair_sens");
  nlohmann::json j = small_config_json(dir);
  j["sensitivity"] = {{"clip_radius", 20.0}, {"n", 500},  {"theta_spread", 0.3},
                      {"pairs", 2},          {"probes", 8}};
  const RunConfig cfg = config_from_json(j);
  std::ostringstream log;
  REQUIRE(cmd_generate(cfg, false, log) == 0);
  REQUIRE(cmd_train(cfg, log) == 0);
  REQUIRE(cmd_sensitivity(cfg, log) == 0);
  const nlohmann::json s =
      nlohmann::json::parse(read_file(dir / outfile::kSensitivity));
  CHECK(s.at("gamma_hat").get<double>() > 0.0);
  CHECK(s.at("beta_hat").get<double>() >= s.at("gamma_hat").get<double>());
  CHECK(s.at("c_hat").get<double>() >= 0.0);
  CHECK(s.at("eps_hat").get<double>() >= 0.0);
  CHECK(s.at("m").get<double>() > 0.0);
  CHECK(s.contains("predicate_as_printed"));
  CHECK(s.contains("predicate_reciprocal"));
  CHECK(s.contains("margin_as_printed"));
}

TEST_CASE("outputs: emitted files carry the config hash and seed") {
  const fs::path dir = fresh_dir("longfair_stamp");
  const RunConfig cfg = config_from_json(small_config_json(dir));
  std::ostringstream log;
  REQUIRE(cmd_generate(cfg, false, log) == 0);
  REQUIRE(cmd_train(cfg, log) == 0);
  REQUIRE(cmd_evaluate(cfg, log) == 0);
  const std::string hash = config_hash(cfg);
  for (const char* name :
       {outfile::kManifest, outfile::kTrace, outfile::kConvergence,
        outfile::kTables}) {
    const std::string content = read_file(dir / name);
    CHECK(content.find(hash) != std::string::npos);
  }
  const std::string model = read_file(dir / outfile::model("RRM"));
  CHECK(model.find(hash) != std::string::npos);
}

TEST_CASE("fnv1a: stable reference values") {
  // Standard FNV-1a test vectors.
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hash_hex(0x0123456789abcdefULL) == "0123456789abcdef");
}
