#include "causalpanel/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <utility>

#include "causalpanel/errors.hpp"
#include "causalpanel/synth.hpp"
#include "json.hpp"

namespace causalpanel {

namespace {

using json = nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string tool_version_string() {
  return std::string(kToolName) + " " + kToolVersion;
}

json grid_json(const RunConfig& config) {
  const GestGrid grid{config.grid_lo, config.grid_hi, config.grid_step};
  return {{"lo", config.grid_lo},
          {"hi", config.grid_hi},
          {"step", config.grid_step},
          {"n_points", grid.points().size()}};
}

json config_json(const RunConfig& config) {
  return {{"input_path", config.input_path},
          {"preset", config.preset},
          {"synth_n", config.synth_n},
          {"unit_column", config.unit_column},
          {"treatment_column", config.treatment_column},
          {"outcome_column", config.outcome_column},
          {"covariate_columns", config.covariate_columns},
          {"grid", grid_json(config)},
          {"truncate_pct", config.truncate_pct},
          {"two_sided_truncation", config.two_sided_truncation},
          {"bootstrap_B", config.bootstrap_B},
          {"jack_groups", config.jack_groups},
          {"level", config.level},
          {"bootstrap_window", config.bootstrap_window},
          {"bootstrap_full_grid", config.bootstrap_full_grid},
          {"seed", config.seed}};
}

json flow_json(const SampleFlow& flow) {
  json stages = json::array();
  for (const auto& stage : flow.stages) {
    stages.push_back({{"stage", stage.stage},
                      {"n_units", stage.n_units},
                      {"n_rows", stage.n_rows},
                      {"reason", stage.reason}});
  }
  return {{"stages", stages}};
}

json arm_json(const ArmSummary& arm, const std::vector<std::string>& schema) {
  json means;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    means[schema[j]] = arm.covariate_means[j];
  }
  return {{"n", arm.n}, {"outcome_rate", arm.outcome_rate}, {"covariate_means", means}};
}

json groups_json(const GroupSummary& groups, const std::vector<std::string>& schema) {
  return {{"n_total", groups.n_total},
          {"outcome_rate_overall", groups.outcome_rate_overall},
          {"unadjusted_risk_difference", groups.unadjusted_risk_difference},
          {"unadjusted_risk_difference_pp", 100.0 * groups.unadjusted_risk_difference},
          {"treated", arm_json(groups.treated, schema)},
          {"control", arm_json(groups.control, schema)}};
}

json positivity_json(const PositivitySection& p) {
  return {{"score_min", p.score_min},
          {"score_max", p.score_max},
          {"pass", p.pass},
          {"n_below_low_threshold", p.n_below},
          {"n_above_high_threshold", p.n_above},
          {"low_threshold", p.low_threshold},
          {"high_threshold", p.high_threshold}};
}

json weight_stats_json(const WeightStats& s) {
  return {{"mean", s.mean}, {"max", s.max},   {"min", s.min},
          {"p99", s.p99},   {"ess", s.ess},   {"mean_ok", s.mean_ok}};
}

json balance_json(const BalanceReport& balance) {
  json rows = json::array();
  for (const auto& row : balance.rows) {
    json r = {{"name", row.name},
              {"smd_raw", row.smd_raw},
              {"smd_weighted", nullptr},
              {"zero_variance", row.zero_variance}};
    if (row.smd_weighted) r["smd_weighted"] = *row.smd_weighted;
    rows.push_back(std::move(r));
  }
  json out = {{"covariates", rows},
              {"positivity", positivity_json(balance.positivity)},
              {"missing_count", balance.missing_count},
              {"weight_stats", nullptr}};
  if (balance.weight_stats) out["weight_stats"] = weight_stats_json(*balance.weight_stats);
  return out;
}

json gest_json(const GestResult& gest, const RunConfig& config) {
  return {{"psi_hat", gest.psi_hat},
          {"psi_hat_pp", 100.0 * gest.psi_hat},
          {"indep_coef_at_hat", gest.indep_coef_at_hat},
          {"crossing_bracket",
           json::array({gest.crossing_bracket.first, gest.crossing_bracket.second})},
          {"refined", gest.refined},
          {"multiple_crossings", gest.multiple_crossings},
          {"refine_fits", gest.refine_fits},
          {"treatment_model_terms", gest.treatment_model_terms},
          {"grid", grid_json(config)},
          {"curve_points", gest.curve.size()}};
}

json propensity_json(const PropensityScores& ps) {
  json coefs;
  for (std::size_t j = 0; j < ps.model_terms.size(); ++j) {
    coefs[ps.model_terms[j]] = ps.model.coefficients[static_cast<Eigen::Index>(j)];
  }
  return {{"score_min", ps.score_min},
          {"score_max", ps.score_max},
          {"coefficients", coefs},
          {"converged", ps.model.converged},
          {"n_iter", ps.model.n_iter}};
}

json weights_json(const WeightSet& w) {
  return {{"stats", weight_stats_json(w.stats)},
          {"truncation",
           {{"applied", w.truncation.applied},
            {"percentile", w.truncation.percentile},
            {"cap", w.truncation.cap},
            {"floor", w.truncation.floor},
            {"two_sided", w.truncation.two_sided}}}};
}

json msm_json(const MsmResult& msm) {
  return {{"alpha0", msm.alpha0},
          {"alpha1", msm.alpha1},
          {"se_alpha1_model", msm.se_alpha1_model},
          {"se_alpha1_sandwich", msm.se_alpha1_sandwich},
          {"risk_p0", msm.risk_p0},
          {"risk_p1", msm.risk_p1},
          {"risk_difference", msm.risk_difference},
          {"risk_difference_pp", 100.0 * msm.risk_difference},
          {"odds_ratio", msm.odds_ratio}};
}

json triangulation_json(const Triangulation& t) {
  return {{"gest_rd", t.gest_rd},
          {"gest_rd_pp", 100.0 * t.gest_rd},
          {"iptw_rd", t.iptw_rd},
          {"iptw_rd_pp", 100.0 * t.iptw_rd},
          {"discrepancy_pp", t.discrepancy_pp},
          {"discrepancy_pct", t.discrepancy_pct}};
}

json evalues_json(const std::vector<EvalueResult>& evalues) {
  json out = json::array();
  for (const auto& e : evalues) {
    out.push_back({{"basis", e.basis},
                   {"rr_input", e.rr_input},
                   {"inverted", e.inverted},
                   {"evalue_point", e.evalue_point}});
  }
  return out;
}

json bca_json(const BcaResult& b) {
  return {{"estimate", b.estimate},
          {"n_resamples", b.n_resamples},
          {"failures", b.failures},
          {"jack_failures", b.jack_failures},
          {"z0", b.z0},
          {"accel", b.accel},
          {"ci", json::array({b.ci_lo, b.ci_hi})},
          {"level", b.level},
          {"boot_se", b.boot_se},
          {"seed", b.seed},
          {"degenerate", b.degenerate},
          {"ci_contains_estimate", b.ci_contains_estimate},
          {"resample_estimates", b.resample_estimates}};
}

// The pipeline applies no row exclusions of its own; the flow records the
// raw input and re-states the ingestion guarantee so downstream counts are
// explicit.
std::pair<Panel, SampleFlow> pipeline_flow(const Panel& panel) {
  std::vector<PanelFilter> filters;
  filters.push_back({"validated_complete_cases",
                     [](const PanelRow&) { return true; },
                     "binary flags and complete covariates enforced at ingestion"});
  return sample_flow(panel, filters, "full_cohort");
}

std::vector<EvalueResult> pipeline_evalues(const GroupSummary& groups,
                                           const double* gest_rd) {
  std::vector<EvalueResult> out;
  const double rate_t = groups.treated.outcome_rate;
  const double rate_c = groups.control.outcome_rate;
  if (rate_c > 0.0 && rate_t > 0.0) {
    out.push_back(evalue(rate_t / rate_c, "raw arm-rate risk ratio"));
  }
  if (gest_rd && rate_c > 0.0 && rate_c + *gest_rd > 0.0) {
    out.push_back(
        evalue((rate_c + *gest_rd) / rate_c, "causal risk difference over control risk"));
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  const bool has_csv = !input_path.empty();
  const bool has_preset = !preset.empty();
  if (has_csv == has_preset) {
    raise(ErrorKind::invalid_config,
          "exactly one of input_path / preset must be set");
  }
  if (has_preset && preset != "facet") {
    raise(ErrorKind::invalid_config, "unknown preset '" + preset + "'");
  }
  if (has_csv &&
      (unit_column.empty() || treatment_column.empty() || outcome_column.empty())) {
    raise(ErrorKind::invalid_config, "CSV input needs unit/treatment/outcome columns");
  }
  GestGrid{grid_lo, grid_hi, grid_step}.points();  // bounds/step validation
  if (!(truncate_pct > 50.0) || !(truncate_pct <= 100.0)) {
    raise(ErrorKind::invalid_config,
          "truncate_pct must be in (50, 100], got " + std::to_string(truncate_pct));
  }
  if (bootstrap_B != 0 && bootstrap_B < 100) {
    raise(ErrorKind::invalid_config, "bootstrap_B must be 0 (off) or >= 100");
  }
  if (jack_groups < 20) {
    raise(ErrorKind::invalid_config, "jack_groups must be >= 20");
  }
  if (!(level > 0.0) || !(level < 1.0)) {
    raise(ErrorKind::invalid_config, "level must be inside (0,1)");
  }
  if (!(bootstrap_window > 0.0)) {
    raise(ErrorKind::invalid_config, "bootstrap_window must be positive");
  }
  if (threads == 0) {
    raise(ErrorKind::invalid_config, "threads must be >= 1");
  }
}

Panel load_input(const RunConfig& config) {
  if (!config.preset.empty()) {
    SynthConfig synth = facet_preset();
    synth.seed = config.seed;
    if (config.synth_n != 0) synth.n = config.synth_n;
    return generate(synth).first;
  }
  CsvMapping mapping;
  mapping.unit_column = config.unit_column;
  mapping.treatment_column = config.treatment_column;
  mapping.outcome_column = config.outcome_column;
  mapping.covariate_columns = config.covariate_columns;
  return load_panel(config.input_path, mapping);
}

DiagnoseReport run_diagnose(const RunConfig& config) {
  config.validate();
  DiagnoseReport report;
  report.tool_version = tool_version_string();
  report.config = config;

  const Panel raw = load_input(config);
  auto [panel, flow] = pipeline_flow(raw);
  report.provenance = raw.provenance();
  report.sample_flow = std::move(flow);
  report.groups = summarize_groups(panel);
  const PropensityScores ps = fit_propensity(panel);
  report.balance = balance_report(panel, ps);
  report.evalues = pipeline_evalues(report.groups, nullptr);

  if (!config.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    const fs::path dir(config.out_dir);

    json j = {{"tool_version", report.tool_version},
              {"provenance", report.provenance},
              {"seed", config.seed},
              {"config", config_json(config)},
              {"sample_flow", flow_json(report.sample_flow)},
              {"groups", groups_json(report.groups, panel.schema())},
              {"balance", balance_json(report.balance)},
              {"evalues", evalues_json(report.evalues)}};
    write_text_atomic((dir / "diagnostics.json").string(), j.dump(2) + "\n");
    write_text_atomic((dir / "sample_flow.json").string(),
                      render_sample_flow_json(report.sample_flow));
  }
  return report;
}

RunReport run_pipeline(const RunConfig& config) {
  config.validate();
  RunReport report;
  report.tool_version = tool_version_string();
  report.config = config;

  // panel
  const Panel raw = load_input(config);
  auto [panel, flow] = pipeline_flow(raw);
  report.provenance = raw.provenance();
  report.sample_flow = std::move(flow);
  report.groups = summarize_groups(panel);

  // diagnostics (pre-estimation): propensity, positivity contract
  report.propensity = fit_propensity(panel);
  positivity_report(report.propensity);

  // gest
  const GestGrid grid{config.grid_lo, config.grid_hi, config.grid_step};
  report.gest = estimate_psi(panel, grid);

  // iptw
  report.weights_raw = stabilized_weights(report.propensity, panel);
  report.weights_truncated = truncate_weights(report.weights_raw, config.truncate_pct,
                                              config.two_sided_truncation);
  report.msm = fit_msm(panel, report.weights_truncated);

  // post-weighting balance + sensitivity
  report.balance = balance_report(panel, report.propensity, &report.weights_truncated);
  report.triangulation.gest_rd = report.gest.psi_hat;
  report.triangulation.iptw_rd = report.msm.risk_difference;
  report.triangulation.discrepancy_pp =
      std::abs(report.triangulation.gest_rd - report.triangulation.iptw_rd) * 100.0;
  const double denom = std::max(std::abs(report.triangulation.gest_rd),
                                std::abs(report.triangulation.iptw_rd));
  report.triangulation.discrepancy_pct =
      denom > 0.0 ? std::abs(report.triangulation.gest_rd - report.triangulation.iptw_rd) /
                        denom * 100.0
                  : 0.0;
  report.evalues = pipeline_evalues(report.groups, &report.gest.psi_hat);

  // bootstrap (optional)
  if (config.bootstrap_B > 0) {
    GestGrid bgrid = grid;
    if (!config.bootstrap_full_grid) {
      bgrid.lo = std::max(config.grid_lo, report.gest.psi_hat - config.bootstrap_window);
      bgrid.hi = std::min(config.grid_hi, report.gest.psi_hat + config.bootstrap_window);
      bgrid.step = 0.01;
      if (bgrid.hi - bgrid.lo < 4.0 * bgrid.step) bgrid = grid;  // window too tight
    }
    const PanelEstimator estimator = [bgrid](const Panel& p) {
      return estimate_psi(p, bgrid).psi_hat;
    };
    report.bca = bca(panel, estimator, config.bootstrap_B, config.level, config.seed,
                     config.jack_groups, config.threads);
  }

  if (!config.out_dir.empty()) write_run_outputs(report, config.out_dir);
  return report;
}

std::string render_report_json(const RunReport& report) {
  std::vector<std::string> covariate_names;
  for (const auto& row : report.balance.rows) covariate_names.push_back(row.name);

  json j = {{"tool_version", report.tool_version},
            {"provenance", report.provenance},
            {"seed", report.config.seed},
            {"config", config_json(report.config)},
            {"sample_flow", flow_json(report.sample_flow)},
            {"groups", groups_json(report.groups, covariate_names)},
            {"balance", balance_json(report.balance)},
            {"propensity", propensity_json(report.propensity)},
            {"gest", gest_json(report.gest, report.config)},
            {"weights_raw", weights_json(report.weights_raw)},
            {"weights_truncated", weights_json(report.weights_truncated)},
            {"msm", msm_json(report.msm)},
            {"triangulation", triangulation_json(report.triangulation)},
            {"evalues", evalues_json(report.evalues)},
            {"bootstrap", nullptr}};
  if (report.bca) j["bootstrap"] = bca_json(*report.bca);
  return j.dump(2) + "\n";
}

std::string render_sample_flow_json(const SampleFlow& flow) {
  return flow_json(flow).dump(2) + "\n";
}

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp(path + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      raise(ErrorKind::io_failure, "cannot write '" + tmp.string() + "'");
    }
    out << content;
    out.flush();
    if (!out) {
      raise(ErrorKind::io_failure, "write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    raise(ErrorKind::io_failure,
          "rename '" + tmp.string() + "' -> '" + target.string() +
              "' failed: " + ec.message());
  }
}

std::string render_gest_curve_csv(const std::vector<GestCurvePoint>& curve) {
  std::string out = "psi,indep_coef,se\n";
  for (const auto& point : curve) {
    out += format_double(point.psi);
    out += ',';
    out += format_double(point.indep_coef);
    out += ',';
    out += format_double(point.se);
    out += '\n';
  }
  return out;
}

std::string render_weight_hist_csv(const WeightSet& weights) {
  std::string out = "bin_lo,bin_hi,count\n";
  const Eigen::VectorXd& w = weights.weights;
  if (w.size() == 0) return out;
  if (weights.stats.min == weights.stats.max) {
    // Point mass (e.g. all weights exactly 1): one degenerate bin.
    out += format_double(weights.stats.min) + ',' + format_double(weights.stats.max) +
           ',' + std::to_string(w.size()) + '\n';
    return out;
  }
  const std::vector<double> values(w.data(), w.data() + w.size());
  for (const auto& bin : histogram(values, kWeightHistBins)) {
    out += format_double(bin.lo) + ',' + format_double(bin.hi) + ',' +
           std::to_string(bin.count) + '\n';
  }
  return out;
}

std::string render_bootstrap_hist_csv(const std::optional<BcaResult>& bca) {
  std::string out = "bin_lo,bin_hi,count\n";
  if (!bca || bca->degenerate || bca->resample_estimates.empty()) return out;
  for (const auto& bin : bootstrap_histogram(*bca, kBootstrapHistBins)) {
    out += format_double(bin.lo) + ',' + format_double(bin.hi) + ',' +
           std::to_string(bin.count) + '\n';
  }
  return out;
}

void write_run_outputs(const RunReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_text_atomic((dir / "report.json").string(), render_report_json(report));
  write_text_atomic((dir / "gest_curve.csv").string(),
                    render_gest_curve_csv(report.gest.curve));
  write_text_atomic((dir / "weights_raw_hist.csv").string(),
                    render_weight_hist_csv(report.weights_raw));
  write_text_atomic((dir / "weights_trunc_hist.csv").string(),
                    render_weight_hist_csv(report.weights_truncated));
  write_text_atomic((dir / "bootstrap_hist.csv").string(),
                    render_bootstrap_hist_csv(report.bca));
  write_text_atomic((dir / "sample_flow.json").string(),
                    render_sample_flow_json(report.sample_flow));
}

}  // namespace causalpanel
