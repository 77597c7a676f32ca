#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "causalpanel/diagnostics.hpp"
#include "causalpanel/errors.hpp"
#include "causalpanel/iptw.hpp"
#include "causalpanel/panel.hpp"
#include "causalpanel/synth.hpp"
#include "doctest.h"

using namespace causalpanel;

namespace {

// Treated x in {2,4,6,8} (mean 5, sample variance 20/3), control x in
// {1,2,3,4} (mean 2.5, variance 5/3): gap 2.5 over pooled sqrt(25/6), so the
// SMD is exactly sqrt(6)/2.
Panel hand_panel() {
  std::vector<PanelRow> rows = {
      {"t1", 1, 1, {2.0}}, {"t2", 1, 0, {4.0}},
      {"t3", 1, 1, {6.0}}, {"t4", 1, 0, {8.0}},
      {"c1", 0, 0, {1.0}}, {"c2", 0, 1, {2.0}},
      {"c3", 0, 0, {3.0}}, {"c4", 0, 0, {4.0}},
  };
  return Panel({"l1"}, std::move(rows), "hand");
}

WeightSet weight_set(const std::vector<double>& w) {
  WeightSet set;
  set.weights = Eigen::Map<const Eigen::VectorXd>(
      w.data(), static_cast<Eigen::Index>(w.size()));
  return set;
}

PropensityScores scores_of(const std::vector<double>& s) {
  PropensityScores scores;
  scores.scores.resize(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    scores.scores[static_cast<Eigen::Index>(i)] = s[i];
  }
  return scores;
}

}  // namespace

TEST_CASE("the unweighted SMD matches hand arithmetic") {
  const Panel panel = hand_panel();
  CHECK(smd(panel, "l1") ==
        doctest::Approx(1.224744871391589).epsilon(1e-12));
}

TEST_CASE("weights move the arm means but not the default denominator") {
  // Weighted means 6 and 2.2 (gap 3.8) over the unchanged unweighted pooled
  // SD sqrt(25/6); with weighted_variance set, the weighted (population)
  // variances 32/6 and 6.8/5 replace the pooled term.
  const Panel panel = hand_panel();
  const WeightSet w = weight_set({1, 1, 1, 3, 2, 1, 1, 1});
  CHECK(smd(panel, "l1", &w) ==
        doctest::Approx(1.8616122045152153).epsilon(1e-12));
  const SmdOptions weighted_var{.weighted_variance = true};
  CHECK(smd(panel, "l1", &w, weighted_var) ==
        doctest::Approx(2.07719547367516).epsilon(1e-12));
}

TEST_CASE("uniform weights reproduce the unweighted SMD") {
  const Panel panel = hand_panel();
  const WeightSet w = weight_set(std::vector<double>(8, 1.0));
  CHECK(smd(panel, "l1", &w) ==
        doctest::Approx(smd(panel, "l1")).epsilon(1e-12));
}

TEST_CASE("the SMD is invariant under positive affine maps") {
  SynthConfig c = facet_preset();
  c.n = 2000;
  const auto [panel, truth] = generate(c);
  std::vector<PanelRow> mapped = panel.rows();
  for (auto& row : mapped) {
    for (double& x : row.covariates) x = 3.0 * x + 7.0;
  }
  const Panel panel_mapped(panel.schema(), std::move(mapped), "mapped");
  for (const auto& name : panel.schema()) {
    CHECK(smd(panel_mapped, name) ==
          doctest::Approx(smd(panel, name)).epsilon(1e-10));
  }
}

TEST_CASE("degenerate pooled variance hits the documented sentinels") {
  std::vector<PanelRow> rows = {
      {"t1", 1, 1, {5.0, 1.0}}, {"t2", 1, 0, {5.0, 2.0}},
      {"c1", 0, 0, {3.0, 3.0}}, {"c2", 0, 1, {3.0, 4.0}},
  };
  const Panel panel({"flat", "ok"}, std::move(rows), "degenerate");
  CHECK(std::isinf(smd(panel, "flat")));  // gap 2 over pooled 0

  std::vector<PanelRow> equal = {
      {"t1", 1, 1, {5.0}}, {"t2", 1, 0, {5.0}},
      {"c1", 0, 0, {5.0}}, {"c2", 0, 1, {5.0}},
  };
  const Panel panel_equal({"flat"}, std::move(equal), "identical");
  CHECK(smd(panel_equal, "flat") == 0.0);  // identical arms: 0, not NaN
}

TEST_CASE("smd validates its inputs") {
  const Panel panel = hand_panel();
  try {
    smd(panel, "nope");
    FAIL("expected SchemaMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::schema_mismatch);
  }
  const WeightSet w = weight_set({1.0, 1.0});
  try {
    smd(panel, "l1", &w);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::dimension_mismatch);
  }
}

TEST_CASE("positivity report counts practical violations") {
  const PositivitySection s =
      positivity_report(scores_of({0.005, 0.5, 0.995}));
  CHECK(s.pass);  // strict bounds hold even with practical violations
  CHECK(s.n_below == 1);
  CHECK(s.n_above == 1);
  CHECK(s.score_min == 0.005);
  CHECK(s.score_max == 0.995);
  CHECK(s.low_threshold == 0.01);
  CHECK(s.high_threshold == 0.99);
}

TEST_CASE("scores touching the boundary violate the contract") {
  for (const double bad : {0.0, 1.0}) {
    try {
      positivity_report(scores_of({0.5, bad}));
      FAIL("expected InvalidDesign");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::invalid_design);
    }
  }
  try {
    positivity_report(scores_of({}));
    FAIL("expected InvalidDesign");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_design);
  }
}

TEST_CASE("balance report flags zero-variance covariates") {
  std::vector<PanelRow> rows = {
      {"t1", 1, 1, {5.0, 1.0}}, {"t2", 1, 0, {5.0, 2.0}},
      {"c1", 0, 0, {3.0, 3.0}}, {"c2", 0, 1, {3.0, 4.0}},
  };
  const Panel panel({"flat", "ok"}, std::move(rows), "degenerate");
  const BalanceReport report =
      balance_report(panel, scores_of({0.6, 0.6, 0.4, 0.4}));
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].zero_variance);
  CHECK(!report.rows[1].zero_variance);
  CHECK(!report.rows[0].smd_weighted.has_value());  // no weights given
  CHECK(report.missing_count == 0);
  CHECK(!report.weight_stats.has_value());
}

TEST_CASE("facet balance shows severe imbalance repaired by weighting") {
  const auto [panel, truth] = generate(facet_preset());
  const PropensityScores scores = fit_propensity(panel);
  const WeightSet truncated =
      truncate_weights(stabilized_weights(scores, panel), 99.0);
  const BalanceReport report = balance_report(panel, scores, &truncated);

  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].name == "cum_subjects_enrolled");
  CHECK(report.rows[1].name == "current_term_load");
  CHECK(report.rows[0].smd_raw ==
        doctest::Approx(1.1541423331579173).epsilon(1e-9));
  CHECK(report.rows[1].smd_raw ==
        doctest::Approx(0.40491020140833556).epsilon(1e-9));
  CHECK(report.rows[0].smd_raw > 0.8);  // far beyond the 0.10 threshold

  REQUIRE(report.rows[0].smd_weighted.has_value());
  REQUIRE(report.rows[1].smd_weighted.has_value());
  CHECK(*report.rows[0].smd_weighted ==
        doctest::Approx(0.06470609518886024).epsilon(1e-9));
  CHECK(*report.rows[1].smd_weighted ==
        doctest::Approx(0.07155631896166931).epsilon(1e-9));
  CHECK(*report.rows[0].smd_weighted < 0.10);  // balance target met
  CHECK(*report.rows[1].smd_weighted < 0.10);
  CHECK(!report.rows[0].zero_variance);
  CHECK(!report.rows[1].zero_variance);

  CHECK(report.positivity.pass);
  CHECK(report.positivity.score_min ==
        doctest::Approx(0.0992470537438016).epsilon(1e-9));
  CHECK(report.positivity.score_max ==
        doctest::Approx(0.9880618339973066).epsilon(1e-9));
  CHECK(report.positivity.n_below == 0);
  CHECK(report.positivity.n_above == 0);

  CHECK(report.missing_count == 0);
  REQUIRE(report.weight_stats.has_value());
  CHECK(report.weight_stats->ess == doctest::Approx(11178.05).epsilon(1e-4));
}

TEST_CASE("E-values follow the point formula") {
  const EvalueResult unit = evalue(1.0);
  CHECK(unit.evalue_point == 1.0);  // exact: sqrt(0) term vanishes
  CHECK(!unit.inverted);
  CHECK(unit.rr_input == 1.0);

  const EvalueResult big = evalue(3.36, "raw contrast");
  CHECK(big.evalue_point == doctest::Approx(6.175954545087686).epsilon(1e-12));
  CHECK(big.basis == "raw contrast");
  CHECK(!big.inverted);

  // Protective ratios are inverted onto the >= 1 scale first.
  const EvalueResult inv = evalue(0.5);
  CHECK(inv.inverted);
  CHECK(inv.rr_input == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(inv.evalue_point == doctest::Approx(3.414213562373095).epsilon(1e-12));

  CHECK(evalue(2.0).evalue_point < evalue(3.0).evalue_point);

  for (const double bad : {0.0, -1.0}) {
    try {
      evalue(bad);
      FAIL("expected NonPositiveRR");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::non_positive_rr);
    }
  }
}
