#include "longfair/evaluate.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <sstream>

#include "longfair/parallel.hpp"

namespace longfair {

namespace {

std::uint64_t hash_weights(const Vec& w) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(double));
    std::memcpy(&bits, &w[i], sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace

EvalReport deploy_and_measure(const TimeLaggedScm& scm,
                              const DecisionModel& model, int n,
                              std::uint64_t seed,
                              const std::string& algorithm_name) {
  require_valid(scm);
  if (n < 1) throw ConfigError("deploy_and_measure: n must be >= 1");
  if (model.weights.size() != scm.feature_dim + 2) {
    throw DimensionError("deploy_and_measure: model does not fit the SCM");
  }

  const int horizon = scm.horizon;
  const Vec deployed_fw = model.feature_weights();
  const auto* lending =
      dynamic_cast<const LendingDynamics*>(scm.transition.get());

  // Integer agreement counts per step; order-independent accumulation.
  std::vector<std::atomic<long long>> agree(static_cast<std::size_t>(horizon));
  for (auto& a : agree) a.store(0);

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    Rng rng(derive_seed(seed, "deploy/indiv", i));
    auto [s, x] = scm.init_sampler->sample_joint(rng);
    for (int t = 1; t <= horizon; ++t) {
      const int y_hat = hard_decision(score(model, x, s));
      const double p_repay = decision_prob(scm.truth_model, x, s);
      const int y = rng.bernoulli(p_repay) ? 1 : -1;
      if (y_hat == y) {
        agree[static_cast<std::size_t>(t - 1)].fetch_add(1);
      }
      if (t == horizon) break;
      TransitionContext ctx;
      ctx.s_backdrop = s;
      ctx.s_redlining = s;
      ctx.deployed_feature_weights = &deployed_fw;
      if (lending != nullptr) {
        x = lending->update(x, y_hat, y, ctx);
      } else {
        x = scm.transition->sample(x, y_hat, ctx, rng);
      }
    }
  });

  EvalReport report;
  report.algorithm = algorithm_name;
  report.horizon = horizon;
  report.n = n;
  report.seed = seed;
  report.model_hash = hash_weights(model.weights);
  report.accuracy.resize(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) {
    report.accuracy[static_cast<std::size_t>(t)] =
        static_cast<double>(agree[static_cast<std::size_t>(t)].load()) / n;
  }

  for (int t = 1; t <= horizon; ++t) {
    EffectQuery lq{EffectKind::LongTerm, t, 1, 0};
    report.long_effect.push_back(
        effect(scm.with_horizon(t), model, lq, n,
               derive_seed(seed, "eval/long", static_cast<std::uint64_t>(t))));
    EffectQuery sq{EffectKind::ShortTerm, t, 1, 0};
    report.short_effect.push_back(
        effect(scm, model, sq, n,
               derive_seed(seed, "eval/short", static_cast<std::uint64_t>(t))));
  }
  return report;
}

namespace {

void check_reports(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw DataError("emit_table: no reports");
  for (const auto& r : reports) {
    if (r.horizon != reports.front().horizon) {
      throw DataError("emit_table: mismatched horizons across reports (" +
                      std::to_string(r.horizon) + " vs " +
                      std::to_string(reports.front().horizon) + ")");
    }
  }
}

void append_rows(std::ostringstream& os, const EvalReport& r,
                 const EvalReport* stds) {
  const auto row = [&](const char* metric, const std::vector<double>& vals,
                       const std::vector<double>* sds) {
    os << r.algorithm << ',' << metric;
    for (double v : vals) os << ',' << std::fixed << std::setprecision(3) << v;
    if (sds != nullptr) {
      for (double v : *sds) {
        os << ',' << std::fixed << std::setprecision(3) << v;
      }
    }
    os << '\n';
  };
  row("accuracy", r.accuracy, stds != nullptr ? &stds->accuracy : nullptr);
  row("short_term", r.short_effect,
      stds != nullptr ? &stds->short_effect : nullptr);
  row("long_term", r.long_effect,
      stds != nullptr ? &stds->long_effect : nullptr);
}

std::string table_impl(const std::vector<EvalReport>& reports,
                       const std::vector<EvalReport>* stds) {
  check_reports(reports);
  std::ostringstream os;
  os << "algorithm,metric";
  for (int t = 1; t <= reports.front().horizon; ++t) os << ",t=" << t;
  if (stds != nullptr) {
    for (int t = 1; t <= reports.front().horizon; ++t) os << ",t=" << t << "_std";
  }
  os << '\n';
  for (std::size_t i = 0; i < reports.size(); ++i) {
    append_rows(os, reports[i], stds != nullptr ? &(*stds)[i] : nullptr);
  }
  return os.str();
}

}  // namespace

std::string emit_table(const std::vector<EvalReport>& reports) {
  return table_impl(reports, nullptr);
}

std::string emit_table(const std::vector<EvalReport>& means,
                       const std::vector<EvalReport>& stds) {
  if (means.size() != stds.size()) {
    throw DataError("emit_table: mean/std report counts differ");
  }
  check_reports(stds);
  return table_impl(means, &stds);
}

LinFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw DataError("linear_fit: need at least two paired points");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  LinFit fit;
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

LinFit trend(const std::vector<double>& values) {
  std::vector<double> ts(values.size());
  for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = static_cast<double>(i + 1);
  return linear_fit(ts, values);
}

}  // namespace longfair
