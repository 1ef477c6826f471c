#include "longfair/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "longfair/parallel.hpp"

namespace longfair {

namespace {

// One individual's trajectory under the generation dynamics: decisions and
// repayments both drawn from the ground-truth model.
void roll_individual(const TimeLaggedScm& scm, const GenConfig& cfg, int s,
                     Vec x1, Rng& rng, std::vector<Vec>& xs,
                     std::vector<int>& ys, std::vector<int>& yhats) {
  const auto* lending =
      dynamic_cast<const LendingDynamics*>(scm.transition.get());
  Vec x = std::move(x1);
  const Vec truth_fw = scm.truth_model.feature_weights();
  for (int t = 1; t <= cfg.steps; ++t) {
    const double p = decision_prob(scm.truth_model, x, s);
    const int y_hat = rng.bernoulli(p) ? 1 : -1;
    const int y = rng.bernoulli(p) ? 1 : -1;
    xs.push_back(x);
    ys.push_back(y);
    yhats.push_back(y_hat);
    if (t == cfg.steps) break;
    TransitionContext ctx;
    ctx.s_backdrop = s;
    ctx.s_redlining = s;
    ctx.deployed_feature_weights = &truth_fw;
    if (lending != nullptr) {
      x = lending->update(x, y_hat, y, ctx);
    } else {
      x = scm.transition->sample(x, y_hat, ctx, rng);
    }
  }
}

PanelDataset roll_panel(const TimeLaggedScm& scm, const GenConfig& cfg,
                        const std::vector<int>& s_init,
                        const std::vector<Vec>& x_init) {
  const std::size_t n = s_init.size();
  PanelDataset panel;
  panel.steps = cfg.steps;
  panel.s = s_init;
  panel.x.resize(n);
  panel.y.resize(n);
  panel.y_hat.resize(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng(derive_seed(cfg.seed, "datagen/indiv", i));
    panel.x[i].reserve(static_cast<std::size_t>(cfg.steps));
    roll_individual(scm, cfg, s_init[i], x_init[i], rng, panel.x[i],
                    panel.y[i], panel.y_hat[i]);
  });
  return panel;
}

}  // namespace

std::vector<std::string> validate_gen_config(const GenConfig& cfg,
                                             Eigen::Index feature_dim) {
  std::vector<std::string> out;
  if (cfg.n_individuals < 1) out.push_back("n_individuals must be >= 1");
  if (cfg.steps < 1) out.push_back("steps must be >= 1");
  if (cfg.eps_update < 0) out.push_back("eps_update must be >= 0");
  if (!std::isfinite(cfg.b0) || !std::isfinite(cfg.b1)) {
    out.push_back("base increments must be finite");
  }
  auto check_gauss = [&](const Vec& mean, const Mat& cov, const char* which) {
    if (mean.size() != feature_dim) {
      out.push_back(std::string(which) + " mean dimension mismatch");
      return;
    }
    if (cov.rows() != feature_dim || cov.cols() != feature_dim) {
      out.push_back(std::string(which) + " covariance shape mismatch");
      return;
    }
    if (!cov.isApprox(cov.transpose(), 1e-10)) {
      out.push_back(std::string(which) + " covariance not symmetric");
      return;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    if (es.eigenvalues().minCoeff() < -1e-10) {
      out.push_back(std::string(which) +
                    " covariance not positive semidefinite");
    }
  };
  check_gauss(cfg.mean_minus, cfg.cov_minus, "group s- ");
  check_gauss(cfg.mean_plus, cfg.cov_plus, "group s+");
  return out;
}

PanelDataset generate_synthetic(const TimeLaggedScm& scm,
                                const GenConfig& cfg) {
  require_valid(scm);
  const auto violations = validate_gen_config(cfg, scm.feature_dim);
  if (!violations.empty()) {
    std::string msg = "invalid GenConfig:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw ConfigError(msg);
  }
  if (const auto* lending =
          dynamic_cast<const LendingDynamics*>(scm.transition.get())) {
    if (lending->eps_update() != cfg.eps_update || lending->b0() != cfg.b0 ||
        lending->b1() != cfg.b1) {
      throw ConfigError(
          "generate_synthetic: update-rule parameters in GenConfig disagree "
          "with the SCM transition");
    }
  }
  GaussianInit init(cfg.mean_minus, cfg.mean_plus, cfg.cov_minus,
                    cfg.cov_plus);
  const std::size_t n = static_cast<std::size_t>(cfg.n_individuals);
  std::vector<int> s_init(n);
  std::vector<Vec> x_init(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng(derive_seed(cfg.seed, "datagen/init", i));
    auto [s, x] = init.sample_joint(rng);
    s_init[i] = s;
    x_init[i] = std::move(x);
  });
  return roll_panel(scm, cfg, s_init, x_init);
}

namespace {

// Minimal CSV reader: header row required, comma separated, double quotes
// honored for embedded commas.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_numeric(const std::string& cell, std::size_t row,
                     const std::string& column) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(cell, &pos);
    while (pos < cell.size() &&
           std::isspace(static_cast<unsigned char>(cell[pos]))) {
      ++pos;
    }
    if (pos != cell.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw DataError("non-numeric cell '" + cell + "' at data row " +
                    std::to_string(row) + ", column '" + column + "'");
  }
}

}  // namespace

InitialPopulation ingest_csv_seed(const CsvSeedSpec& spec) {
  std::ifstream in(spec.path);
  if (!in) {
    throw DataError("cannot open CSV file: " + spec.path.string());
  }
  if (spec.n_rows < 1) throw ConfigError("ingest_csv_seed: n_rows must be >= 1");
  if (spec.feature_columns.empty()) {
    throw ConfigError("ingest_csv_seed: no feature columns requested");
  }

  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("CSV file has no header row: " + spec.path.string());
  }
  const auto header = split_csv_line(line);
  auto column_index = [&](const std::string& name) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return j;
    }
    throw DataError("missing column '" + name + "' in " + spec.path.string());
  };
  std::vector<std::size_t> feat_idx;
  for (const auto& name : spec.feature_columns) {
    feat_idx.push_back(column_index(name));
  }
  const std::size_t s_idx = column_index(spec.s_column);

  std::vector<int> s_all;
  std::vector<Vec> x_all;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError("data row " + std::to_string(row) + " has " +
                      std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    Vec x(static_cast<Eigen::Index>(feat_idx.size()));
    for (std::size_t j = 0; j < feat_idx.size(); ++j) {
      x[static_cast<Eigen::Index>(j)] =
          parse_numeric(fields[feat_idx[j]], row, spec.feature_columns[j]);
    }
    const double s_raw = parse_numeric(fields[s_idx], row, spec.s_column);
    s_all.push_back(s_raw != 0.0 ? 1 : 0);
    x_all.push_back(std::move(x));
  }
  if (static_cast<int>(s_all.size()) < spec.n_rows) {
    throw DataError("requested " + std::to_string(spec.n_rows) +
                    " rows but file has only " + std::to_string(s_all.size()) +
                    " data rows (short by " +
                    std::to_string(spec.n_rows - static_cast<int>(s_all.size())) +
                    ")");
  }

  std::vector<std::size_t> order(s_all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (spec.shuffle_seed.has_value()) {
    Rng rng(derive_seed(*spec.shuffle_seed, "csv/shuffle"));
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      const std::size_t j =
          std::min(i, static_cast<std::size_t>(rng.uniform() * (i + 1)));
      std::swap(order[i], order[j]);
    }
  }

  InitialPopulation pop;
  pop.s.reserve(static_cast<std::size_t>(spec.n_rows));
  pop.x.reserve(static_cast<std::size_t>(spec.n_rows));
  for (int k = 0; k < spec.n_rows; ++k) {
    pop.s.push_back(s_all[order[static_cast<std::size_t>(k)]]);
    pop.x.push_back(x_all[order[static_cast<std::size_t>(k)]]);
  }

  if (spec.scale == ScaleKind::ZScore) {
    const Eigen::Index d = pop.x[0].size();
    Vec mean = Vec::Zero(d);
    for (const auto& x : pop.x) mean += x;
    mean /= static_cast<double>(pop.x.size());
    Vec var = Vec::Zero(d);
    for (const auto& x : pop.x) var += (x - mean).cwiseAbs2();
    var /= static_cast<double>(pop.x.size());
    Vec sd = var.cwiseSqrt();
    for (Eigen::Index j = 0; j < d; ++j) {
      if (sd[j] == 0.0) sd[j] = 1.0;  // constant column stays centered
    }
    for (auto& x : pop.x) x = (x - mean).cwiseQuotient(sd);
  }
  return pop;
}

PanelDataset generate_semi_synthetic(const InitialPopulation& seedpop,
                                     const TimeLaggedScm& scm,
                                     const GenConfig& cfg) {
  require_valid(scm);
  if (seedpop.s.empty() || seedpop.s.size() != seedpop.x.size()) {
    throw DataError("generate_semi_synthetic: empty or inconsistent seed population");
  }
  for (const auto& x : seedpop.x) {
    if (x.size() != scm.feature_dim) {
      throw DimensionError(
          "generate_semi_synthetic: seed feature dimension " +
          std::to_string(x.size()) + " does not match SCM feature_dim " +
          std::to_string(scm.feature_dim));
    }
  }
  if (cfg.steps < 1) throw ConfigError("steps must be >= 1");
  if (cfg.eps_update < 0) throw ConfigError("eps_update must be >= 0");
  return roll_panel(scm, cfg, seedpop.s, seedpop.x);
}

}  // namespace longfair
