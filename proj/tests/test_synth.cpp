#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <vector>

#include "causalpanel/errors.hpp"
#include "causalpanel/mathstats.hpp"
#include "causalpanel/panel.hpp"
#include "causalpanel/synth.hpp"
#include "doctest.h"

using namespace causalpanel;
namespace fs = std::filesystem;

namespace {

// Independent numerical integration over the rounded-lognormal grid, used
// as the oracle for marginal rates (no sampling involved).
std::vector<double> pmf_oracle(double mu, double sd, int k_max) {
  std::vector<double> pmf(static_cast<std::size_t>(k_max) + 1);
  double prev = 0.0;
  for (int k = 0; k <= k_max; ++k) {
    const double z = (std::log(k + 0.5) - mu) / sd;
    const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
    pmf[static_cast<std::size_t>(k)] = cdf - prev;
    prev = cdf;
  }
  const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  for (double& p : pmf) p /= total;
  return pmf;
}

SynthConfig unconfounded_config() {
  SynthConfig c;
  c.n = 50000;
  c.seed = 11;
  c.psi_true = 0.25;
  c.risk_cap = 0.75;
  c.covariates = {
      {"l1", CovariateFamily::rounded_lognormal, 1.0, 0.5},
      {"l2", CovariateFamily::rounded_lognormal, 0.3, 0.6},
  };
  c.treat_coefs = {0.0, 0.0, 0.0};  // logit(0.5): pure coin-flip assignment
  c.base_coefs = {-1.5, 0.2, 0.3};
  return c;
}

}  // namespace

TEST_CASE("null effect with no confounding gives a null risk difference") {
  SynthConfig c = unconfounded_config();
  c.psi_true = 0.0;
  const auto [panel, truth] = generate(c);
  CHECK(panel.size() == 50000);
  CHECK(std::abs(truth.naive_risk_difference) < 0.01);
  CHECK(truth.treated_fraction == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("additive effect with no confounding shows up in the raw contrast") {
  const SynthConfig c = unconfounded_config();
  const auto [panel, truth] = generate(c);
  CHECK(truth.naive_risk_difference == doctest::Approx(0.25).epsilon(0.06));
  CHECK(std::abs(truth.naive_risk_difference - 0.25) < 0.015);

  // Oracle: marginal baseline risk by numerical integration over the exact
  // covariate grid. With assignment independent of L both arms share it.
  const auto pmf1 = pmf_oracle(1.0, 0.5, 60);
  const auto pmf2 = pmf_oracle(0.3, 0.6, 60);
  double p0_marginal = 0.0;
  for (std::size_t k1 = 0; k1 < pmf1.size(); ++k1) {
    for (std::size_t k2 = 0; k2 < pmf2.size(); ++k2) {
      const double eta = -1.5 + 0.2 * static_cast<double>(k1) +
                         0.3 * static_cast<double>(k2);
      const double p0 = std::min(1.0 / (1.0 + std::exp(-eta)), c.risk_cap);
      p0_marginal += pmf1[k1] * pmf2[k2] * p0;
    }
  }
  // Frozen oracle value for this configuration.
  CHECK(p0_marginal == doctest::Approx(0.404425205608).epsilon(1e-8));
  // Realized arm rates sit within Monte Carlo noise of the oracle
  // (binomial SE at n/2 = 25,000 is under 0.0032; wide 5-SE margin).
  CHECK(std::abs(truth.control_outcome_rate - p0_marginal) < 0.016);
  CHECK(std::abs(truth.treated_outcome_rate - (p0_marginal + 0.25)) < 0.016);
}

TEST_CASE("generation is deterministic") {
  const SynthConfig c = unconfounded_config();
  const auto [p1, t1] = generate(c);
  const auto [p2, t2] = generate(c);
  REQUIRE(p1.size() == p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) {
    CHECK(p1.rows()[i].unit_id == p2.rows()[i].unit_id);
    CHECK(p1.rows()[i].treatment == p2.rows()[i].treatment);
    CHECK(p1.rows()[i].outcome == p2.rows()[i].outcome);
    REQUIRE(p1.rows()[i].covariates == p2.rows()[i].covariates);
  }
  CHECK(t1.realized_effect == t2.realized_effect);

  // A different seed produces a different draw.
  SynthConfig c2 = unconfounded_config();
  c2.seed = 12;
  const auto [p3, t3] = generate(c2);
  bool any_diff = false;
  for (std::size_t i = 0; i < p1.size() && !any_diff; ++i) {
    any_diff = p1.rows()[i].outcome != p3.rows()[i].outcome ||
               p1.rows()[i].covariates != p3.rows()[i].covariates;
  }
  CHECK(any_diff);
}

TEST_CASE("potential outcomes honour the additive structure") {
  SynthConfig c = unconfounded_config();
  c.n = 20000;
  const auto [panel, truth] = generate(c);
  REQUIRE(truth.y0.size() == c.n);
  REQUIRE(truth.y1.size() == c.n);

  // Monotone coupling: treatment can only flip 0 -> 1.
  for (std::size_t i = 0; i < c.n; ++i) {
    CHECK(truth.y1[i] >= truth.y0[i]);
  }

  // mean(Y1) - mean(Y0) = psi_true up to 2 Monte Carlo SEs, overall...
  const double se = std::sqrt(0.25 * 0.75 / static_cast<double>(c.n));
  CHECK(std::abs(truth.realized_effect - 0.25) <= 2.0 * se);

  // ...and within covariate strata.
  std::map<std::pair<double, double>, std::pair<int, int>> strata;
  for (std::size_t i = 0; i < c.n; ++i) {
    const auto& l = panel.rows()[i].covariates;
    auto& [count, effect] = strata[{l[0], l[1]}];
    ++count;
    effect += truth.y1[i] - truth.y0[i];
  }
  for (const auto& [key, agg] : strata) {
    const auto& [count, effect] = agg;
    if (count < 500) continue;  // skip noisy cells
    const double stratum_se = std::sqrt(0.25 * 0.75 / count);
    CHECK(std::abs(static_cast<double>(effect) / count - 0.25) <=
          2.5 * stratum_se);
  }

  // The flag controls retention only, not the draw.
  SynthConfig c_drop = c;
  c_drop.keep_potential_outcomes = false;
  const auto [panel2, truth2] = generate(c_drop);
  CHECK(truth2.y0.empty());
  CHECK(truth2.y1.empty());
  CHECK(panel2.rows()[100].outcome == panel.rows()[100].outcome);
  CHECK(truth2.realized_effect == truth.realized_effect);
}

TEST_CASE("config validation") {
  SynthConfig c = unconfounded_config();

  SUBCASE("risk cap plus effect above one") {
    c.risk_cap = 0.9;
    c.psi_true = 0.2;
    try {
      generate(c);
      FAIL("expected InvalidRisk");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::invalid_risk);
    }
  }
  SUBCASE("psi outside range") {
    c.psi_true = 0.6;
    CHECK_THROWS_AS(generate(c), Error);
  }
  SUBCASE("coefficient shape") {
    c.treat_coefs = {0.0, 0.0};
    CHECK_THROWS_AS(generate(c), Error);
  }
  SUBCASE("zero n") {
    c.n = 0;
    CHECK_THROWS_AS(generate(c), Error);
  }
  SUBCASE("duplicate covariate names") {
    c.covariates[1].name = "l1";
    CHECK_THROWS_AS(generate(c), Error);
  }
  SUBCASE("negative log sd") {
    c.covariates[0].log_sd = -0.1;
    CHECK_THROWS_AS(generate(c), Error);
  }
  SUBCASE("negative value cap") {
    c.covariates[0].value_cap = -3.0;
    CHECK_THROWS_AS(generate(c), Error);
  }
}

TEST_CASE("winsorization caps the draws and nothing else") {
  SynthConfig c = unconfounded_config();
  c.covariates[0].value_cap = 4.0;
  const auto [capped, t1] = generate(c);
  const auto [free, t2] = generate(unconfounded_config());
  REQUIRE(capped.size() == free.size());
  for (std::size_t i = 0; i < capped.size(); ++i) {
    const double x_cap = capped.rows()[i].covariates[0];
    const double x_free = free.rows()[i].covariates[0];
    CHECK(x_cap <= 4.0);
    CHECK(x_cap == std::min(x_free, 4.0));
    // Second covariate is uncapped and shares the same stream position.
    CHECK(capped.rows()[i].covariates[1] == free.rows()[i].covariates[1]);
  }
}

TEST_CASE("facet preset defaults") {
  const SynthConfig preset = facet_preset();
  CHECK(preset.n == 16868);
  CHECK(preset.seed == 42);
  CHECK(preset.psi_true == 0.25);
  REQUIRE(preset.covariates.size() == 2);
  CHECK(preset.covariates[0].name == "cum_subjects_enrolled");
  CHECK(preset.covariates[1].name == "current_term_load");
}

TEST_CASE("facet preset hits the documented moments") {
  const auto [panel, truth] = generate(facet_preset());
  CHECK(panel.size() == 16868);

  CHECK(std::abs(truth.treated_fraction - 0.660) < 0.05);
  CHECK(std::abs(truth.treated_covariate_means[0] - 4.67) < 0.05 * 4.67);
  CHECK(std::abs(truth.control_covariate_means[0] - 2.41) < 0.05 * 2.41);
  CHECK(std::abs(truth.treated_covariate_means[1] - 1.69) < 0.05 * 1.69);
  CHECK(std::abs(truth.control_covariate_means[1] - 1.09) < 0.05 * 1.09);
  CHECK(truth.naive_risk_difference == doctest::Approx(0.354).epsilon(0.09));

  // Confounding direction: the raw contrast overstates the causal effect by
  // a wide margin at this n.
  CHECK(truth.naive_risk_difference - truth.psi_true > 0.05);

  const GroupSummary g = summarize_groups(panel);
  CHECK(g.treated.outcome_rate == doctest::Approx(0.504).epsilon(0.05));
  CHECK(g.control.outcome_rate == doctest::Approx(0.150).epsilon(0.08));
}

TEST_CASE("large synthetic panel round-trips through csv") {
  const auto [panel, truth] = generate(facet_preset());
  const fs::path dir = fs::temp_directory_path() / "causalpanel_tests";
  fs::create_directories(dir);
  const fs::path path = dir / "facet_round_trip.csv";
  write_panel(panel, path.string());

  CsvMapping m;
  m.unit_column = "unit_id";
  m.treatment_column = "treatment";
  m.outcome_column = "outcome";
  m.covariate_columns = panel.schema();
  const Panel loaded = load_panel(path.string(), m);

  REQUIRE(loaded.size() == panel.size());
  CHECK(loaded.schema() == panel.schema());
  for (std::size_t i = 0; i < panel.size(); ++i) {
    const PanelRow& a = panel.rows()[i];
    const PanelRow& b = loaded.rows()[i];
    REQUIRE(a.unit_id == b.unit_id);
    REQUIRE(a.treatment == b.treatment);
    REQUIRE(a.outcome == b.outcome);
    REQUIRE(a.covariates == b.covariates);
  }
}
