#include "causalpanel/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "causalpanel/errors.hpp"
#include "causalpanel/mathstats.hpp"

namespace causalpanel {

namespace {

struct ArmMoments {
  double mean = 0.0;
  double variance = 0.0;  // per SmdOptions: weighted or plain sample variance
};

ArmMoments arm_moments(const Panel& panel, std::size_t cov, int arm,
                       const WeightSet* weights, bool weighted_variance) {
  double sw = 0.0, swx = 0.0;
  double n = 0.0, sx = 0.0;
  for (std::size_t i = 0; i < panel.size(); ++i) {
    const auto& row = panel.rows()[i];
    if (row.treatment != arm) continue;
    const double x = row.covariates[cov];
    const double w = weights ? weights->weights[static_cast<Eigen::Index>(i)] : 1.0;
    sw += w;
    swx += w * x;
    n += 1.0;
    sx += x;
  }
  ArmMoments m;
  const double mean_w = swx / sw;
  const double mean_u = sx / n;
  m.mean = weights ? mean_w : mean_u;

  double ss = 0.0, denom = 0.0;
  for (std::size_t i = 0; i < panel.size(); ++i) {
    const auto& row = panel.rows()[i];
    if (row.treatment != arm) continue;
    const double x = row.covariates[cov];
    if (weights && weighted_variance) {
      const double w = weights->weights[static_cast<Eigen::Index>(i)];
      ss += w * (x - mean_w) * (x - mean_w);
      denom = sw;
    } else {
      ss += (x - mean_u) * (x - mean_u);
      denom = n - 1.0;
    }
  }
  m.variance = denom > 0.0 ? ss / denom : 0.0;
  return m;
}

}  // namespace

double smd(const Panel& panel, const std::string& covariate,
           const WeightSet* weights, const SmdOptions& options) {
  panel.require_both_arms();
  const std::size_t cov = panel.covariate_index(covariate);
  if (weights && weights->weights.size() != static_cast<Eigen::Index>(panel.size())) {
    raise(ErrorKind::dimension_mismatch,
          "weight vector does not align with the panel");
  }
  const ArmMoments treated =
      arm_moments(panel, cov, 1, weights, options.weighted_variance);
  const ArmMoments control =
      arm_moments(panel, cov, 0, weights, options.weighted_variance);

  const double pooled = std::sqrt(0.5 * (treated.variance + control.variance));
  const double gap = std::abs(treated.mean - control.mean);
  if (pooled == 0.0) {
    return gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return gap / pooled;
}

PositivitySection positivity_report(const PropensityScores& scores) {
  PositivitySection section;
  if (scores.scores.size() == 0) {
    raise(ErrorKind::invalid_design, "empty score vector");
  }
  for (Eigen::Index i = 0; i < scores.scores.size(); ++i) {
    const double s = scores.scores[i];
    if (!(s > 0.0) || !(s < 1.0)) {
      raise(ErrorKind::invalid_design,
            "score " + std::to_string(s) +
                " is not strictly inside (0,1); PropensityScores invariant "
                "violated");
    }
    if (s < section.low_threshold) ++section.n_below;
    if (s > section.high_threshold) ++section.n_above;
  }
  section.score_min = scores.scores.minCoeff();
  section.score_max = scores.scores.maxCoeff();
  section.pass = section.score_min > 0.0 && section.score_max < 1.0;
  return section;
}

BalanceReport balance_report(const Panel& panel, const PropensityScores& scores,
                             const WeightSet* weights) {
  BalanceReport report;
  report.positivity = positivity_report(scores);

  for (const auto& name : panel.schema()) {
    BalanceRow row;
    row.name = name;
    row.smd_raw = smd(panel, name);
    if (weights) row.smd_weighted = smd(panel, name, weights);
    row.zero_variance = std::isinf(row.smd_raw) ||
                        (row.smd_weighted && std::isinf(*row.smd_weighted));
    report.rows.push_back(std::move(row));
  }

  // Always 0 after ingestion; recounted anyway so the report states it.
  for (const auto& row : panel.rows()) {
    for (const double x : row.covariates) {
      if (!std::isfinite(x)) ++report.missing_count;
    }
  }
  if (weights) report.weight_stats = weights->stats;
  return report;
}

EvalueResult evalue(double rr, std::string basis) {
  if (!(rr > 0.0)) {
    raise(ErrorKind::non_positive_rr,
          "risk ratio must be positive, got " + std::to_string(rr));
  }
  EvalueResult result;
  result.basis = std::move(basis);
  result.inverted = rr < 1.0;
  result.rr_input = result.inverted ? 1.0 / rr : rr;
  result.evalue_point =
      result.rr_input + std::sqrt(result.rr_input * (result.rr_input - 1.0));
  return result;
}

}  // namespace causalpanel
