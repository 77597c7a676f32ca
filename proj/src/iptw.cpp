#include "causalpanel/iptw.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "causalpanel/errors.hpp"
#include "causalpanel/mathstats.hpp"
#include "design.hpp"

namespace causalpanel {

namespace {

WeightStats compute_stats(const Eigen::VectorXd& w) {
  WeightStats stats;
  stats.mean = w.mean();
  stats.max = w.maxCoeff();
  stats.min = w.minCoeff();
  std::vector<double> sorted(w.data(), w.data() + w.size());
  std::sort(sorted.begin(), sorted.end());
  stats.p99 = quantile_linear(sorted, 0.99);
  const double sum = w.sum();
  stats.ess = sum * sum / w.squaredNorm();
  stats.mean_ok = std::abs(stats.mean - 1.0) <= 0.05;
  return stats;
}

}  // namespace

PropensityScores fit_propensity(const Panel& panel) {
  panel.require_both_arms();
  const DesignMatrix X = detail::covariate_design(panel);
  const Eigen::VectorXd a = detail::treatment_vector(panel);

  PropensityScores out;
  try {
    out.model = fit_logistic(X, a);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::separation) {
      raise(ErrorKind::separation,
            std::string("propensity model separated — a covariate stratum is "
                        "deterministically assigned to one arm (positivity "
                        "violation); review the covariate set (") +
                e.what() + ")");
    }
    throw;
  }
  out.scores = predict_prob(out.model, X);
  out.score_min = out.scores.minCoeff();
  out.score_max = out.scores.maxCoeff();
  out.model_terms = X.columns;
  return out;
}

WeightSet stabilized_weights(const PropensityScores& scores, const Panel& panel) {
  const auto n = static_cast<Eigen::Index>(panel.size());
  if (scores.scores.size() != n) {
    raise(ErrorKind::dimension_mismatch,
          "score vector does not align with the panel");
  }
  const double treated_fraction =
      static_cast<double>(panel.n_treated()) / static_cast<double>(panel.size());

  WeightSet set;
  set.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool treated = panel.rows()[static_cast<std::size_t>(i)].treatment == 1;
    const double numerator = treated ? treated_fraction : 1.0 - treated_fraction;
    const double denominator = treated ? scores.scores[i] : 1.0 - scores.scores[i];
    set.weights[i] = numerator / denominator;
  }
  set.stats = compute_stats(set.weights);
  return set;
}

WeightSet truncate_weights(const WeightSet& w, double percentile, bool two_sided) {
  if (!(percentile > 50.0) || !(percentile <= 100.0)) {
    raise(ErrorKind::invalid_config,
          "truncation percentile must be in (50, 100], got " +
              std::to_string(percentile));
  }
  std::vector<double> sorted(w.weights.data(), w.weights.data() + w.weights.size());
  std::sort(sorted.begin(), sorted.end());
  const double q = percentile / 100.0;
  const double cap = quantile_linear(sorted, q);
  const double floor = two_sided ? quantile_linear(sorted, 1.0 - q) : 0.0;

  WeightSet out;
  out.weights = w.weights.cwiseMin(cap);
  if (two_sided) out.weights = out.weights.cwiseMax(floor);
  out.truncation.applied = percentile < 100.0;
  out.truncation.percentile = percentile;
  out.truncation.cap = cap;
  out.truncation.floor = floor;
  out.truncation.two_sided = two_sided;
  out.stats = compute_stats(out.weights);
  return out;
}

MsmResult msm_contrasts(double alpha0, double alpha1) {
  MsmResult r;
  r.alpha0 = alpha0;
  r.alpha1 = alpha1;
  r.risk_p0 = expit(alpha0);
  r.risk_p1 = expit(alpha0 + alpha1);
  r.risk_difference = r.risk_p1 - r.risk_p0;
  r.odds_ratio = std::exp(alpha1);
  return r;
}

MsmResult fit_msm(const Panel& panel, const WeightSet& w) {
  panel.require_both_arms();
  const auto n = static_cast<Eigen::Index>(panel.size());
  if (w.weights.size() != n) {
    raise(ErrorKind::dimension_mismatch,
          "weight vector does not align with the panel");
  }

  DesignMatrix X;
  X.columns = {"(intercept)", "treatment"};
  X.has_intercept = true;
  X.values.resize(n, 2);
  X.values.col(0).setOnes();
  X.values.col(1) = detail::treatment_vector(panel);
  const Eigen::VectorXd y = detail::outcome_vector(panel);

  const LogisticFit fit = fit_logistic(X, y, &w.weights);
  MsmResult r = msm_contrasts(fit.coefficients[0], fit.coefficients[1]);
  r.se_alpha1_model = fit.se_model(1);
  r.se_alpha1_sandwich = fit.se_sandwich(1);
  return r;
}

}  // namespace causalpanel
