#include "longfair/io.hpp"

#include <fstream>
#include <sstream>

namespace longfair {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open for reading: " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vec vec_from_json(const json& j) {
  if (!j.is_array()) throw DataError("expected JSON array for vector");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows.push_back(vec_to_json(m.row(i).transpose()));
  }
  return rows;
}

Mat mat_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw DataError("expected JSON matrix");
  const auto first = vec_from_json(j[0]);
  Mat m(static_cast<Eigen::Index>(j.size()), first.size());
  m.row(0) = first.transpose();
  for (std::size_t i = 1; i < j.size(); ++i) {
    const Vec row = vec_from_json(j[i]);
    if (row.size() != first.size()) throw DataError("ragged JSON matrix");
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

std::string panel_to_jsonl(const PanelDataset& panel) {
  std::ostringstream os;
  for (std::size_t i = 0; i < panel.size(); ++i) {
    json line;
    line["s"] = panel.s[i];
    json xs = json::array();
    for (const auto& x : panel.x[i]) xs.push_back(vec_to_json(x));
    line["x"] = std::move(xs);
    line["y"] = panel.y[i];
    line["y_hat"] = panel.y_hat[i];
    os << line.dump() << '\n';
  }
  return os.str();
}

PanelDataset panel_from_jsonl(const std::string& text) {
  PanelDataset panel;
  std::istringstream in(text);
  std::string line;
  std::size_t n_line = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++n_line;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("panel line " + std::to_string(n_line) +
                      ": bad JSON: " + e.what());
    }
    panel.s.push_back(j.at("s").get<int>());
    std::vector<Vec> xs;
    for (const auto& x : j.at("x")) xs.push_back(vec_from_json(x));
    panel.x.push_back(std::move(xs));
    panel.y.push_back(j.at("y").get<std::vector<int>>());
    panel.y_hat.push_back(j.at("y_hat").get<std::vector<int>>());
  }
  if (!panel.x.empty()) panel.steps = static_cast<int>(panel.x[0].size());
  const auto violations = validate_panel(panel);
  if (!violations.empty()) {
    std::string msg = "loaded panel is invalid:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw DataError(msg);
  }
  return panel;
}

std::string model_to_json(const ModelFile& mf) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "decision_model";
  j["algorithm"] = mf.algorithm;
  j["weights"] = vec_to_json(mf.model.weights);
  j["feature_dim"] = mf.model.feature_dim();
  j["horizon"] = mf.horizon;
  j["config_hash"] = mf.config_hash;
  j["seed"] = mf.seed;
  return j.dump(2) + "\n";
}

ModelFile model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("bad model JSON: ") + e.what());
  }
  ModelFile mf;
  mf.model = DecisionModel(vec_from_json(j.at("weights")));
  mf.algorithm = j.at("algorithm").get<std::string>();
  mf.horizon = j.at("horizon").get<int>();
  mf.config_hash = j.value("config_hash", std::string{});
  mf.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("feature_dim") &&
      j["feature_dim"].get<Eigen::Index>() != mf.model.feature_dim()) {
    throw DataError("model JSON: feature_dim disagrees with weight length");
  }
  return mf;
}

std::string trace_to_jsonl(const RrmTrace& trace, const std::string& config_hash,
                           std::uint64_t seed) {
  std::ostringstream os;
  {
    json head;
    head["schema_version"] = kSchemaVersion;
    head["kind"] = "rrm_trace_header";
    head["config_hash"] = config_hash;
    head["seed"] = seed;
    head["theta0"] = vec_to_json(trace.theta0);
    head["converged"] = trace.converged;
    head["converged_iter"] = trace.converged_iter;
    os << head.dump() << '\n';
  }
  for (const auto& row : trace.iterations) {
    json j;
    j["iter"] = row.iter;
    j["theta"] = vec_to_json(row.theta);
    j["loss_u"] = row.loss.utility;
    j["loss_l"] = row.loss.longterm;
    j["loss_s"] = row.loss.shortterm;
    j["loss_total"] = row.loss.total;
    j["delta"] = row.delta;
    os << j.dump() << '\n';
  }
  return os.str();
}

std::string csv_stamp(const std::string& config_hash, std::uint64_t seed) {
  return "# schema_version=" + std::to_string(kSchemaVersion) +
         " config_hash=" + config_hash + " seed=" + std::to_string(seed) +
         "\n";
}

json sensitivity_to_json(const SensitivityReport& r) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "sensitivity_report";
  j["gamma_hat"] = r.gamma_hat;
  j["beta_hat"] = r.beta_hat;
  j["c_hat"] = r.c_hat;
  j["eps_hat"] = r.eps_hat;
  j["m"] = r.m;
  j["horizon"] = r.horizon;
  j["bound_2mct"] = r.bound_2mct;
  j["predicate_as_printed"] = r.predicate;
  j["margin_as_printed"] = r.margin;
  j["predicate_reciprocal"] = r.predicate_reciprocal;
  j["margin_reciprocal"] = r.margin_reciprocal;
  return j;
}

}  // namespace longfair
