#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "causalpanel/errors.hpp"
#include "causalpanel/panel.hpp"
#include "doctest.h"

using namespace causalpanel;
namespace fs = std::filesystem;

namespace {

fs::path write_temp_csv(const std::string& name, const std::string& body) {
  const fs::path dir = fs::temp_directory_path() / "causalpanel_tests";
  fs::create_directories(dir);
  const fs::path path = dir / name;
  std::ofstream out(path, std::ios::trunc);
  out << body;
  return path;
}

CsvMapping mapping_al2() {
  CsvMapping m;
  m.unit_column = "id";
  m.treatment_column = "a";
  m.outcome_column = "y";
  m.covariate_columns = {"l1", "l2"};
  return m;
}

PanelRow make_row(std::string id, int a, int y, std::vector<double> l) {
  PanelRow r;
  r.unit_id = std::move(id);
  r.treatment = a;
  r.outcome = y;
  r.covariates = std::move(l);
  return r;
}

}  // namespace

TEST_CASE("well-formed csv loads") {
  const auto path = write_temp_csv("ok.csv",
                                   "id,a,y,l1,l2\n"
                                   "u1,1,0,2.5,1\n"
                                   "u2,0,1,3,0.5\n"
                                   "u3,1,1,4,2\n");
  const Panel panel = load_panel(path.string(), mapping_al2());
  CHECK(panel.size() == 3);
  CHECK(panel.schema() == std::vector<std::string>{"l1", "l2"});
  CHECK(panel.rows()[0].unit_id == "u1");
  CHECK(panel.rows()[1].treatment == 0);
  CHECK(panel.rows()[2].covariates == std::vector<double>{4.0, 2.0});
  CHECK(panel.n_treated() == 2);
  CHECK(panel.n_control() == 1);
}

TEST_CASE("non-binary treatment names the row") {
  const auto path = write_temp_csv("bad_a.csv",
                                   "id,a,y,l1,l2\n"
                                   "u1,1,0,2.5,1\n"
                                   "u2,2,1,3,0.5\n");
  try {
    load_panel(path.string(), mapping_al2());
    FAIL("expected NonBinaryTreatment");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::non_binary_treatment);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("non-binary outcome rejected") {
  const auto path = write_temp_csv("bad_y.csv",
                                   "id,a,y,l1,l2\n"
                                   "u1,1,0.5,2.5,1\n");
  CHECK_THROWS_AS(load_panel(path.string(), mapping_al2()), Error);
}

TEST_CASE("absent column is a schema mismatch") {
  const auto path = write_temp_csv("no_l2.csv",
                                   "id,a,y,l1\n"
                                   "u1,1,0,2.5\n");
  try {
    load_panel(path.string(), mapping_al2());
    FAIL("expected SchemaMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::schema_mismatch);
  }
}

TEST_CASE("missing file is unreadable") {
  try {
    load_panel("/nonexistent/panel.csv", mapping_al2());
    FAIL("expected FileUnreadable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::file_unreadable);
  }
}

TEST_CASE("missing values: strict errors, drop policy counts") {
  const auto path = write_temp_csv("gaps.csv",
                                   "id,a,y,l1,l2\n"
                                   "u1,1,0,2.5,1\n"
                                   "u2,0,1,,0.5\n"
                                   "u3,1,1,4,2\n");
  CsvMapping strict = mapping_al2();
  try {
    load_panel(path.string(), strict);
    FAIL("expected MissingValue");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::missing_value);
  }

  CsvMapping lax = mapping_al2();
  lax.drop_missing = true;
  LoadStats stats;
  const Panel panel = load_panel(path.string(), lax, &stats);
  CHECK(panel.size() == 2);
  CHECK(stats.rows_read == 3);
  CHECK(stats.rows_dropped_missing == 1);
}

TEST_CASE("duplicate unit ids rejected") {
  const auto path = write_temp_csv("dups.csv",
                                   "id,a,y,l1,l2\n"
                                   "u1,1,0,2.5,1\n"
                                   "u1,0,1,3,0.5\n");
  try {
    load_panel(path.string(), mapping_al2());
    FAIL("expected DuplicateUnitId");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::duplicate_unit_id);
  }
}

TEST_CASE("quoted fields and crlf lines parse") {
  const auto path = write_temp_csv("quoted.csv",
                                   "id,a,y,l1,l2\r\n"
                                   "\"u,1\",1,0,2.5,1\r\n"
                                   "u2,0,1,3,0.5\r\n");
  const Panel panel = load_panel(path.string(), mapping_al2());
  CHECK(panel.size() == 2);
  CHECK(panel.rows()[0].unit_id == "u,1");
}

TEST_CASE("write then load round-trips bit-identically") {
  std::vector<PanelRow> rows = {
      make_row("a", 1, 0, {0.1, 1.0 / 3.0}),
      make_row("b", 0, 1, {2.718281828459045, -0.0000123456789}),
      make_row("c", 1, 1, {1e17, 5.0}),
  };
  const Panel panel({"l1", "l2"}, rows, "unit-test");
  const fs::path dir = fs::temp_directory_path() / "causalpanel_tests";
  fs::create_directories(dir);
  const fs::path path = dir / "round_trip.csv";
  write_panel(panel, path.string());

  CsvMapping m;
  m.unit_column = "unit_id";
  m.treatment_column = "treatment";
  m.outcome_column = "outcome";
  m.covariate_columns = {"l1", "l2"};
  const Panel loaded = load_panel(path.string(), m);
  REQUIRE(loaded.size() == panel.size());
  for (std::size_t i = 0; i < panel.size(); ++i) {
    CHECK(loaded.rows()[i].unit_id == panel.rows()[i].unit_id);
    CHECK(loaded.rows()[i].treatment == panel.rows()[i].treatment);
    CHECK(loaded.rows()[i].outcome == panel.rows()[i].outcome);
    REQUIRE(loaded.rows()[i].covariates.size() == 2);
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(loaded.rows()[i].covariates[j] == panel.rows()[i].covariates[j]);
    }
  }
}

TEST_CASE("sample flow with no filters is the identity") {
  const Panel panel({"l1"},
                    {make_row("a", 1, 0, {1.0}), make_row("b", 0, 1, {2.0})},
                    "test");
  const auto [out, flow] = sample_flow(panel, {});
  CHECK(out.size() == 2);
  REQUIRE(flow.stages.size() == 1);
  CHECK(flow.stages[0].stage == "input");
  CHECK(flow.stages[0].n_units == 2);
  CHECK(flow.stages[0].n_rows == 2);
}

TEST_CASE("sample flow records counts and reasons") {
  std::vector<PanelRow> rows;
  for (int i = 0; i < 5; ++i) {
    rows.push_back(make_row("u" + std::to_string(i), i % 2, 0,
                            {static_cast<double>(i)}));
  }
  const Panel panel({"l1"}, rows, "test");
  const PanelFilter keep_big{"outcome defined",
                             [](const PanelRow& r) { return r.covariates[0] >= 2.0; },
                             "missing outcome"};
  const auto [out, flow] = sample_flow(panel, {keep_big}, "raw cohort");
  CHECK(out.size() == 3);
  REQUIRE(flow.stages.size() == 2);
  CHECK(flow.stages[0].stage == "raw cohort");
  CHECK(flow.stages[1].stage == "outcome defined");
  CHECK(flow.stages[1].n_rows == 3);
  CHECK(flow.stages[1].n_units == 3);
  CHECK(flow.stages[1].reason == "missing outcome");

  // Counts never increase.
  for (std::size_t s = 1; s < flow.stages.size(); ++s) {
    CHECK(flow.stages[s].n_rows <= flow.stages[s - 1].n_rows);
  }
}

TEST_CASE("filters compose") {
  std::vector<PanelRow> rows;
  for (int i = 0; i < 40; ++i) {
    rows.push_back(make_row("u" + std::to_string(i), i % 2, (i / 2) % 2,
                            {static_cast<double>(i % 7), static_cast<double>(i % 3)}));
  }
  const Panel panel({"l1", "l2"}, rows, "test");
  const PanelFilter f1{"f1", [](const PanelRow& r) { return r.covariates[0] < 5.0; }, ""};
  const PanelFilter f2{"f2", [](const PanelRow& r) { return r.covariates[1] > 0.0; }, ""};

  const auto [one_shot, flow_both] = sample_flow(panel, {f1, f2});
  const auto [mid, flow1] = sample_flow(panel, {f1});
  const auto [two_step, flow2] = sample_flow(mid, {f2});

  REQUIRE(one_shot.size() == two_step.size());
  for (std::size_t i = 0; i < one_shot.size(); ++i) {
    CHECK(one_shot.rows()[i].unit_id == two_step.rows()[i].unit_id);
  }
}

TEST_CASE("empty stage raises EmptyResult") {
  const Panel panel({"l1"},
                    {make_row("a", 1, 0, {1.0}), make_row("b", 0, 1, {2.0})},
                    "test");
  const PanelFilter drop_all{"drop all", [](const PanelRow&) { return false; },
                             "everything excluded"};
  try {
    sample_flow(panel, {drop_all});
    FAIL("expected EmptyResult");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::empty_result);
  }
}

TEST_CASE("group summary matches the documented arithmetic") {
  // Arms with rates 0.504 (n=11,139) and 0.150 (n=5,729): overall rate 0.384,
  // unadjusted risk difference 0.354.
  std::vector<PanelRow> rows;
  rows.reserve(16868);
  int id = 0;
  auto add_arm = [&](int a, int n, int positives) {
    for (int i = 0; i < n; ++i) {
      rows.push_back(make_row("u" + std::to_string(id++), a, i < positives ? 1 : 0,
                              {static_cast<double>(a), 1.0}));
    }
  };
  add_arm(1, 11139, 5614);  // 5614/11139 = 0.50399...
  add_arm(0, 5729, 859);    // 859/5729 = 0.14995...
  const Panel panel({"l1", "l2"}, rows, "test");
  const GroupSummary g = summarize_groups(panel);
  CHECK(g.n_total == 16868);
  CHECK(g.treated.n == 11139);
  CHECK(g.control.n == 5729);
  CHECK(g.treated.outcome_rate == doctest::Approx(0.504).epsilon(1e-4));
  CHECK(g.control.outcome_rate == doctest::Approx(0.150).epsilon(1e-3));
  CHECK(g.outcome_rate_overall == doctest::Approx(0.384).epsilon(1e-3));
  CHECK(g.unadjusted_risk_difference == doctest::Approx(0.354).epsilon(1e-3));

  // Exact identity: overall rate is the row-weighted mean of the arm rates.
  const double weighted =
      (g.treated.outcome_rate * static_cast<double>(g.treated.n) +
       g.control.outcome_rate * static_cast<double>(g.control.n)) /
      static_cast<double>(g.n_total);
  CHECK(g.outcome_rate_overall == doctest::Approx(weighted).epsilon(1e-12));

  CHECK(g.treated.covariate_means[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.control.covariate_means[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("all-zero outcomes give zero rates") {
  const Panel panel({"l1"},
                    {make_row("a", 1, 0, {1.0}), make_row("b", 0, 0, {2.0})},
                    "test");
  const GroupSummary g = summarize_groups(panel);
  CHECK(g.treated.outcome_rate == 0.0);
  CHECK(g.control.outcome_rate == 0.0);
  CHECK(g.unadjusted_risk_difference == 0.0);
}

TEST_CASE("single arm summary fails") {
  const Panel panel({"l1"},
                    {make_row("a", 1, 0, {1.0}), make_row("b", 1, 1, {2.0})},
                    "test");
  try {
    summarize_groups(panel);
    FAIL("expected SingleArm");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::single_arm);
  }
}

TEST_CASE("panel constructor validates rows") {
  CHECK_THROWS_AS(Panel({"l1"}, {make_row("a", 2, 0, {1.0})}, "t"), Error);
  CHECK_THROWS_AS(Panel({"l1"}, {make_row("a", 1, 3, {1.0})}, "t"), Error);
  CHECK_THROWS_AS(Panel({"l1"}, {make_row("a", 1, 0, {1.0, 2.0})}, "t"), Error);
  CHECK_THROWS_AS(Panel({"l1"}, {make_row("a", 1, 0, {std::nan("")})}, "t"), Error);
  CHECK_THROWS_AS(Panel({"l1"},
                        {make_row("a", 1, 0, {1.0}), make_row("a", 0, 1, {2.0})},
                        "t"),
                  Error);
}

TEST_CASE("covariate index lookup") {
  const Panel panel({"l1", "l2"}, {make_row("a", 1, 0, {1.0, 2.0})}, "t");
  CHECK(panel.covariate_index("l2") == 1);
  CHECK_THROWS_AS(panel.covariate_index("nope"), Error);
}
