#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "causalpanel/bootstrap.hpp"
#include "causalpanel/diagnostics.hpp"
#include "causalpanel/gest.hpp"
#include "causalpanel/iptw.hpp"
#include "causalpanel/panel.hpp"

namespace causalpanel {

inline constexpr const char* kToolName = "causalpanel";
inline constexpr const char* kToolVersion = "1.0.0";

// Plot-data bin counts (tool convention).
inline constexpr std::size_t kWeightHistBins = 50;
inline constexpr std::size_t kBootstrapHistBins = 40;

// Effective run configuration. Every analysis-affecting field is echoed
// into the report, so a report always records the defaults it ran with.
// Execution-only knobs (threads, out_dir) are excluded from the echo: the
// same analysis must produce byte-identical reports regardless of thread
// count or destination directory.
struct RunConfig {
  // Input: exactly one of input_path / preset ("facet").
  std::string input_path;
  std::string preset;
  std::size_t synth_n = 0;  // preset size override; 0 keeps the preset default

  std::string unit_column = "unit_id";
  std::string treatment_column = "treatment";
  std::string outcome_column = "outcome";
  std::vector<std::string> covariate_columns;  // CSV input only

  double grid_lo = 0.0;
  double grid_hi = 0.5;
  double grid_step = 0.005;

  double truncate_pct = 99.0;
  bool two_sided_truncation = false;

  std::size_t bootstrap_B = 0;  // 0 disables the bootstrap stage
  std::size_t jack_groups = 1000;
  double level = 0.95;
  // Bootstrap resamples re-solve on a grid narrowed to psi_hat +/-
  // bootstrap_window (step 0.01, clamped to the configured grid) — a speed
  // option; set bootstrap_full_grid to re-run the complete grid instead.
  double bootstrap_window = 0.15;
  bool bootstrap_full_grid = false;

  std::uint64_t seed = 42;
  unsigned threads = 1;
  std::string out_dir;  // empty = compute only, write nothing

  // Throws InvalidConfig on contradictory or out-of-range settings.
  void validate() const;
};

struct Triangulation {
  double gest_rd = 0.0;
  double iptw_rd = 0.0;
  double discrepancy_pp = 0.0;   // |gest_rd - iptw_rd| * 100, exact
  // discrepancy_pp relative to the larger |RD|, in percent (0 when both RDs
  // are 0).
  double discrepancy_pct = 0.0;
};

struct RunReport {
  std::string tool_version;
  std::string provenance;
  RunConfig config;
  SampleFlow sample_flow;
  GroupSummary groups;
  BalanceReport balance;
  GestResult gest;
  PropensityScores propensity;
  WeightSet weights_raw;
  WeightSet weights_truncated;
  MsmResult msm;
  Triangulation triangulation;
  std::vector<EvalueResult> evalues;
  std::optional<BcaResult> bca;
};

// Diagnostics-only run: sample flow, group summary, pre-weighting balance
// and the raw-RR E-value; writes diagnostics.json and sample_flow.json when
// out_dir is set.
struct DiagnoseReport {
  std::string tool_version;
  std::string provenance;
  RunConfig config;
  SampleFlow sample_flow;
  GroupSummary groups;
  BalanceReport balance;
  std::vector<EvalueResult> evalues;
};

// Loads the configured input (CSV or preset synth draw).
Panel load_input(const RunConfig& config);

DiagnoseReport run_diagnose(const RunConfig& config);

// panel -> diagnostics -> gest -> iptw -> (optional) bootstrap, then writes
// report.json and the plot-data files to config.out_dir (unless empty).
// Throws the first failing module's error.
RunReport run_pipeline(const RunConfig& config);

// JSON renderings (fixed key order, shortest round-trip numbers, no
// timestamps — reports are byte-stable given identical inputs).
std::string render_report_json(const RunReport& report);
std::string render_sample_flow_json(const SampleFlow& flow);

// Writes content to a temporary file in the target directory and renames it
// into place, so readers never observe a partial file.
void write_text_atomic(const std::string& path, const std::string& content);

// Plot-data renderers (CSV).
std::string render_gest_curve_csv(const std::vector<GestCurvePoint>& curve);
std::string render_weight_hist_csv(const WeightSet& weights);
std::string render_bootstrap_hist_csv(const std::optional<BcaResult>& bca);

// report.json, gest_curve.csv, weights_raw_hist.csv, weights_trunc_hist.csv,
// bootstrap_hist.csv, sample_flow.json — all atomic.
void write_run_outputs(const RunReport& report, const std::string& out_dir);

}  // namespace causalpanel
