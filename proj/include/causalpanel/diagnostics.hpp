#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "causalpanel/iptw.hpp"
#include "causalpanel/panel.hpp"

namespace causalpanel {

struct SmdOptions {
  // The denominator uses the unweighted arm variances even for weighted
  // SMDs (weighted means over an unweighted pooled SD) unless this is set,
  // in which case the weighted variances are used throughout.
  bool weighted_variance = false;
};

// |m1 - m0| / sqrt((s1^2 + s0^2) / 2) for one covariate, with weighted arm
// means when `weights` is given. A zero pooled term yields 0 when the means
// agree (identical arms) and the +infinity sentinel when they differ.
double smd(const Panel& panel, const std::string& covariate,
           const WeightSet* weights = nullptr, const SmdOptions& options = {});

struct PositivitySection {
  double score_min = 0.0;
  double score_max = 0.0;
  bool pass = false;        // strict: 0 < min and max < 1
  std::size_t n_below = 0;  // scores under the practical low threshold
  std::size_t n_above = 0;  // scores over the practical high threshold
  double low_threshold = 0.01;
  double high_threshold = 0.99;
};

// Records the score range, the strict pass flag and practical-violation
// advisory counts at 0.01/0.99. Scores touching 0 or 1 exactly break the
// PropensityScores invariant and raise InvalidDesign.
PositivitySection positivity_report(const PropensityScores& scores);

struct BalanceRow {
  std::string name;
  double smd_raw = 0.0;
  std::optional<double> smd_weighted;
  bool zero_variance = false;  // an SMD hit the +infinity sentinel
};

struct BalanceReport {
  std::vector<BalanceRow> rows;
  PositivitySection positivity;
  std::size_t missing_count = 0;             // 0 by ingestion guarantee
  std::optional<WeightStats> weight_stats;   // echo of the set used
};

// Per-covariate SMDs before and (when weights are given) after weighting,
// plus positivity and the missingness recount.
BalanceReport balance_report(const Panel& panel, const PropensityScores& scores,
                             const WeightSet* weights = nullptr);

struct EvalueResult {
  double rr_input = 1.0;  // risk ratio on the >= 1 scale (inverted if < 1)
  bool inverted = false;
  double evalue_point = 1.0;  // rr + sqrt(rr * (rr - 1))
  std::string basis;          // how the input RR was obtained
};

// VanderWeele–Ding point E-value. Throws NonPositiveRR when rr <= 0.
EvalueResult evalue(double rr, std::string basis = "");

}  // namespace causalpanel
