#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "causalpanel/glm.hpp"
#include "causalpanel/panel.hpp"

namespace causalpanel {

struct PropensityScores {
  Eigen::VectorXd scores;  // P(A=1 | L), strictly inside (0,1)
  LogisticFit model;
  double score_min = 0.0;
  double score_max = 0.0;
  std::vector<std::string> model_terms;
};

struct WeightStats {
  double mean = 0.0;
  double max = 0.0;
  double min = 0.0;
  double p99 = 0.0;   // linear-interpolation quantile
  double ess = 0.0;   // (sum w)^2 / sum w^2, <= n
  // Stabilized weights should average ~1; |mean - 1| > 0.05 flips this flag
  // (a warning, not an error).
  bool mean_ok = true;
};

struct TruncationInfo {
  bool applied = false;      // false for raw sets and percentile == 100
  double percentile = 100.0;
  double cap = 0.0;          // upper cap == pre-truncation percentile quantile
  double floor = 0.0;        // lower cap, two-sided only
  bool two_sided = false;
};

struct WeightSet {
  Eigen::VectorXd weights;
  TruncationInfo truncation;
  WeightStats stats;
};

struct MsmResult {
  double alpha0 = 0.0;  // log-odds of the outcome under no treatment
  double alpha1 = 0.0;  // log odds ratio for treatment
  double se_alpha1_model = 0.0;
  double se_alpha1_sandwich = 0.0;
  double risk_p0 = 0.0;           // expit(alpha0)
  double risk_p1 = 0.0;           // expit(alpha0 + alpha1)
  double risk_difference = 0.0;   // risk_p1 - risk_p0
  double odds_ratio = 0.0;        // exp(alpha1)
};

// Logistic regression of treatment on intercept + all covariates. A
// Separation failure is reported as a positivity violation (some covariate
// stratum is deterministically assigned).
PropensityScores fit_propensity(const Panel& panel);

// SW_i = P(A_i) / P(A_i | L_i), with the empirical marginal treated
// fraction as the numerator estimate.
WeightSet stabilized_weights(const PropensityScores& scores, const Panel& panel);

// Caps weights above the `percentile` quantile at that quantile (linear
// interpolation between order statistics). Upper tail only by default;
// `two_sided` also floors at the (100 - percentile) quantile. percentile
// must be in (50, 100]; 100 is the identity.
WeightSet truncate_weights(const WeightSet& w, double percentile,
                           bool two_sided = false);

// Coefficient-scale contrasts of the MSM logit P(Y^a = 1) = alpha0 +
// alpha1 * a; shared by fit_msm and directly testable.
MsmResult msm_contrasts(double alpha0, double alpha1);

// Weighted logistic regression of the outcome on intercept + treatment.
// Both the model-based and the HC0 sandwich SE of alpha1 are attached.
MsmResult fit_msm(const Panel& panel, const WeightSet& w);

}  // namespace causalpanel
