#include "longfair/scm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace longfair {

LendingDynamics::LendingDynamics(double eps_update, double b0, double b1,
                                 DecisionModel truth_model,
                                 FeaturePartition partition)
    : eps_update_(eps_update),
      b0_(b0),
      b1_(b1),
      truth_model_(std::move(truth_model)),
      partition_(std::move(partition)) {
  if (eps_update_ < 0.0) {
    throw ConfigError("LendingDynamics: eps_update must be nonnegative");
  }
}

Vec LendingDynamics::update(const Vec& x, int y_hat, int y_repay,
                            int s_base) const {
  TransitionContext ctx;
  ctx.s_backdrop = s_base;
  ctx.s_redlining = s_base;
  return update(x, y_hat, y_repay, ctx);
}

Vec LendingDynamics::update(const Vec& x, int y_hat, int y_repay,
                            const TransitionContext& ctx) const {
  const Vec& theta_x = ctx.deployed_feature_weights != nullptr
                           ? *ctx.deployed_feature_weights
                           : Vec(truth_model_.feature_weights());
  if (theta_x.size() != x.size()) {
    throw DimensionError("LendingDynamics: deployed feature weights length " +
                         std::to_string(theta_x.size()) +
                         " does not match feature dim " +
                         std::to_string(x.size()));
  }
  Vec next = x;
  if (y_hat == 1) {
    next += (y_repay == 1 ? eps_update_ : -eps_update_) * theta_x;
  }
  for (Eigen::Index j = 0; j < next.size(); ++j) {
    const bool redl = partition_.is_redlining(j);
    next[j] += base_increment(redl ? ctx.s_redlining : ctx.s_backdrop);
  }
  return next;
}

Vec LendingDynamics::sample(const Vec& x, int y, const TransitionContext& ctx,
                            Rng& rng) const {
  const double p_repay = decision_prob(truth_model_, x, ctx.s_backdrop);
  const int y_repay = rng.bernoulli(p_repay) ? 1 : -1;
  return update(x, y, y_repay, ctx);
}

Vec TabularTransition::sample(const Vec& x, int y, const TransitionContext&,
                              Rng& rng) const {
  if (x.size() != 1) {
    throw DimensionError("TabularTransition: scalar state expected");
  }
  std::size_t k = table_.support.size();
  for (std::size_t i = 0; i < table_.support.size(); ++i) {
    if (table_.support[i] == x[0]) {
      k = i;
      break;
    }
  }
  if (k == table_.support.size()) {
    throw DataError("TabularTransition: state value not in support");
  }
  const int y01 = y == 1 ? 1 : 0;
  const int k2 = rng.categorical(table_.prob[k][static_cast<std::size_t>(y01)]);
  Vec out(1);
  out[0] = table_.support[static_cast<std::size_t>(k2)];
  return out;
}

Vec TabularInit::sample_given(int s, Rng& rng) const {
  const int k = rng.categorical(table_.prob[s != 0 ? 1 : 0]);
  Vec out(1);
  out[0] = table_.support[static_cast<std::size_t>(k)];
  return out;
}

std::pair<int, Vec> TabularInit::sample_joint(Rng& rng) const {
  const int s = rng.bernoulli(s_plus_prob_) ? 1 : 0;
  return {s, sample_given(s, rng)};
}

GaussianInit::GaussianInit(Vec mean_minus, Vec mean_plus, Mat cov_minus,
                           Mat cov_plus) {
  mean_[0] = std::move(mean_minus);
  mean_[1] = std::move(mean_plus);
  const Mat* covs[2] = {&cov_minus, &cov_plus};
  for (int g = 0; g < 2; ++g) {
    const Mat& cov = *covs[g];
    if (cov.rows() != mean_[g].size() || cov.cols() != mean_[g].size()) {
      throw DimensionError("GaussianInit: covariance shape mismatch");
    }
    if (!cov.isApprox(cov.transpose(), 1e-10)) {
      throw ConfigError("GaussianInit: covariance not symmetric");
    }
    Eigen::LLT<Mat> llt(cov);
    if (llt.info() != Eigen::Success) {
      // Allow PSD matrices with zero eigenvalues via a tiny jitter retry.
      Eigen::LLT<Mat> jittered(cov + 1e-12 * Mat::Identity(cov.rows(), cov.cols()));
      if (jittered.info() != Eigen::Success) {
        throw ConfigError("GaussianInit: covariance not positive semidefinite");
      }
      chol_[g] = jittered.matrixL();
      continue;
    }
    chol_[g] = llt.matrixL();
  }
  if (mean_[0].size() != mean_[1].size()) {
    throw DimensionError("GaussianInit: group mean dimensions differ");
  }
}

Vec GaussianInit::sample_given(int s, Rng& rng) const {
  const int g = s != 0 ? 1 : 0;
  return mean_[g] + chol_[g] * rng.normal_vec(mean_[g].size());
}

std::pair<int, Vec> GaussianInit::sample_joint(Rng& rng) const {
  const int s = rng.bernoulli(0.5) ? 1 : 0;
  return {s, sample_given(s, rng)};
}

SeedPopulationInit::SeedPopulationInit(std::vector<int> s, std::vector<Vec> x)
    : s_(std::move(s)), x_(std::move(x)) {
  if (s_.empty() || s_.size() != x_.size()) {
    throw DataError("SeedPopulationInit: empty or mismatched seed population");
  }
  for (std::size_t i = 0; i < s_.size(); ++i) {
    if (x_[i].size() != x_[0].size()) {
      throw DimensionError("SeedPopulationInit: ragged feature rows");
    }
    group_rows_[s_[i] != 0 ? 1 : 0].push_back(i);
  }
}

Vec SeedPopulationInit::sample_given(int s, Rng& rng) const {
  const auto& rows = group_rows_[s != 0 ? 1 : 0];
  if (rows.empty()) {
    throw DataError("SeedPopulationInit: no rows with requested group value");
  }
  const std::size_t pick =
      std::min<std::size_t>(rows.size() - 1,
                            static_cast<std::size_t>(rng.uniform() * rows.size()));
  return x_[rows[pick]];
}

std::pair<int, Vec> SeedPopulationInit::sample_joint(Rng& rng) const {
  const std::size_t pick =
      std::min<std::size_t>(s_.size() - 1,
                            static_cast<std::size_t>(rng.uniform() * s_.size()));
  return {s_[pick], x_[pick]};
}

Eigen::Index SeedPopulationInit::dim() const { return x_[0].size(); }

std::vector<std::string> validate_scm(const TimeLaggedScm& scm) {
  std::vector<std::string> out;
  if (scm.feature_dim < 1) out.push_back("feature_dim must be >= 1");
  if (scm.horizon < 1) out.push_back("horizon must be >= 1");
  if (!scm.init_sampler) {
    out.push_back("init_sampler missing");
  } else if (scm.init_sampler->dim() != scm.feature_dim) {
    out.push_back("init_sampler dimension " +
                  std::to_string(scm.init_sampler->dim()) +
                  " does not match feature_dim " +
                  std::to_string(scm.feature_dim));
  }
  if (!scm.transition) out.push_back("transition missing");
  if (scm.truth_model.weights.size() != scm.feature_dim + 2) {
    out.push_back("truth_model weight length " +
                  std::to_string(scm.truth_model.weights.size()) +
                  " must equal feature_dim + 2 = " +
                  std::to_string(scm.feature_dim + 2));
  } else {
    if (!scm.truth_model.weights.allFinite()) {
      out.push_back("truth_model weights must be finite");
    }
  }
  // Relevant and irrelevant must cover every index exactly once.
  std::vector<int> cover(static_cast<std::size_t>(std::max<Eigen::Index>(scm.feature_dim, 0)), 0);
  auto mark = [&](const std::vector<Eigen::Index>& idx, const char* name) {
    for (auto j : idx) {
      if (j < 0 || j >= scm.feature_dim) {
        out.push_back(std::string("partition: ") + name + " index " +
                      std::to_string(j) + " out of range");
        continue;
      }
      cover[static_cast<std::size_t>(j)] += 1;
    }
  };
  mark(scm.partition.relevant, "relevant");
  mark(scm.partition.irrelevant, "irrelevant");
  for (std::size_t j = 0; j < cover.size(); ++j) {
    if (cover[j] == 0) {
      out.push_back("partition missing index " + std::to_string(j));
    } else if (cover[j] > 1) {
      out.push_back("partition assigns index " + std::to_string(j) +
                    " more than once");
    }
  }
  for (auto j : scm.partition.redlining) {
    bool in_relevant = false;
    for (auto r : scm.partition.relevant) {
      if (r == j) {
        in_relevant = true;
        break;
      }
    }
    if (!in_relevant) {
      out.push_back("redlining index " + std::to_string(j) +
                    " violates the redlining-subset-of-relevant rule");
    }
  }
  return out;
}

void require_valid(const TimeLaggedScm& scm) {
  const auto violations = validate_scm(scm);
  if (violations.empty()) return;
  std::string msg = "invalid SCM:";
  for (const auto& v : violations) msg += "\n  - " + v;
  throw ConfigError(msg);
}

std::vector<std::string> validate_panel(const PanelDataset& panel) {
  std::vector<std::string> out;
  if (panel.steps < 1) out.push_back("panel has no time steps");
  if (panel.s.size() != panel.x.size() || panel.s.size() != panel.y.size() ||
      panel.s.size() != panel.y_hat.size()) {
    out.push_back("panel arrays have mismatched lengths");
    return out;
  }
  for (std::size_t i = 0; i < panel.size(); ++i) {
    if (panel.s[i] != 0 && panel.s[i] != 1) {
      out.push_back("individual " + std::to_string(i) + ": s not in {0,1}");
    }
    if (static_cast<int>(panel.x[i].size()) != panel.steps ||
        static_cast<int>(panel.y[i].size()) != panel.steps ||
        static_cast<int>(panel.y_hat[i].size()) != panel.steps) {
      out.push_back("individual " + std::to_string(i) +
                    ": trajectory length differs from panel steps");
    }
    for (std::size_t t = 0; t < panel.y[i].size(); ++t) {
      if (panel.y[i][t] != 1 && panel.y[i][t] != -1) {
        out.push_back("individual " + std::to_string(i) + " step " +
                      std::to_string(t + 1) + ": label not in {-1,+1}");
      }
    }
  }
  return out;
}

}  // namespace longfair
