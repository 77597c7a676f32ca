#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "causalpanel/errors.hpp"
#include "causalpanel/report.hpp"
#include "causalpanel/synth.hpp"
#include "json.hpp"

namespace {

using namespace causalpanel;

int exit_code_for(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::data: return 3;
    case ErrorCategory::estimation: return 4;
  }
  return 4;
}

void run_simulate(const RunConfig& config) {
  if (config.preset.empty()) {
    raise(ErrorKind::invalid_config, "simulate needs --preset");
  }
  config.validate();
  SynthConfig synth = facet_preset();
  synth.seed = config.seed;
  if (config.synth_n != 0) synth.n = config.synth_n;
  const auto [panel, truth] = generate(synth);

  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);
  const fs::path dir(config.out_dir);

  // write_panel streams directly; stage through a temp name so the CSV
  // appears atomically like every other output.
  const fs::path csv = dir / "panel.csv";
  const fs::path csv_tmp = dir / "panel.csv.tmp";
  WriteColumns columns;
  columns.unit_column = config.unit_column;
  columns.treatment_column = config.treatment_column;
  columns.outcome_column = config.outcome_column;
  write_panel(panel, csv_tmp.string(), columns);
  std::error_code ec;
  fs::rename(csv_tmp, csv, ec);
  if (ec) {
    fs::remove(csv_tmp);
    raise(ErrorKind::io_failure, "rename to '" + csv.string() + "' failed");
  }

  nlohmann::ordered_json means_t, means_c;
  for (std::size_t j = 0; j < panel.schema().size(); ++j) {
    means_t[panel.schema()[j]] = truth.treated_covariate_means[j];
    means_c[panel.schema()[j]] = truth.control_covariate_means[j];
  }
  const nlohmann::ordered_json truth_json = {
      {"psi_true", truth.psi_true},
      {"n", panel.size()},
      {"seed", synth.seed},
      {"treated_fraction", truth.treated_fraction},
      {"treated_covariate_means", means_t},
      {"control_covariate_means", means_c},
      {"treated_outcome_rate", truth.treated_outcome_rate},
      {"control_outcome_rate", truth.control_outcome_rate},
      {"naive_risk_difference", truth.naive_risk_difference},
      {"realized_effect", truth.realized_effect},
  };
  write_text_atomic((dir / "ground_truth.json").string(), truth_json.dump(2) + "\n");
  std::printf("wrote panel.csv (%zu rows) and ground_truth.json to %s\n",
              panel.size(), config.out_dir.c_str());
}

void print_headline(const RunReport& report) {
  std::printf("gest psi_hat = %.4f (risk difference, %.2f pp)\n",
              report.gest.psi_hat, 100.0 * report.gest.psi_hat);
  std::printf("iptw/msm risk difference = %.4f (%.2f pp)\n",
              report.msm.risk_difference, 100.0 * report.msm.risk_difference);
  std::printf("triangulation discrepancy = %.2f pp (%.1f%%)\n",
              report.triangulation.discrepancy_pp,
              report.triangulation.discrepancy_pct);
  if (report.bca) {
    std::printf("bootstrap %.0f%% CI [%.4f, %.4f], boot SE %.4f (B=%zu)\n",
                100.0 * report.bca->level, report.bca->ci_lo, report.bca->ci_hi,
                report.bca->boot_se, report.bca->n_resamples);
  }
  std::printf("outputs in %s\n", report.config.out_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Panel causal-effect engine: G-estimation and IPTW/MSM with BCa bootstrap"};
  app.name("causalpanel");
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.set_config("--config", "", "flat key=value configuration file");
  app.require_subcommand(1);

  RunConfig config;
  std::vector<double> grid_spec;

  app.add_option("--input", config.input_path, "panel CSV path");
  app.add_option("--preset", config.preset, "synthetic preset name (facet)");
  app.add_option("--n", config.synth_n, "preset draw size override (0 = preset default)")
      ->capture_default_str();
  app.add_option("--unit", config.unit_column, "unit-id column")->capture_default_str();
  app.add_option("--treatment", config.treatment_column, "treatment column")
      ->capture_default_str();
  app.add_option("--outcome", config.outcome_column, "outcome column")
      ->capture_default_str();
  app.add_option("--covariates", config.covariate_columns,
                 "covariate columns, comma separated")
      ->delimiter(',');
  app.add_option("--grid", grid_spec, "psi grid LO,HI,STEP")->delimiter(',');
  app.add_option("--truncate-pct", config.truncate_pct,
                 "weight truncation percentile in (50,100]")
      ->capture_default_str();
  app.add_flag("--two-sided", config.two_sided_truncation,
               "truncate both weight tails");
  app.add_option("--bootstrap", config.bootstrap_B, "BCa resamples (0 = off)")
      ->capture_default_str();
  app.add_option("--jack-groups", config.jack_groups,
                 "grouped-jackknife group count")
      ->capture_default_str();
  app.add_option("--level", config.level, "confidence level")->capture_default_str();
  app.add_option("--bootstrap-window", config.bootstrap_window,
                 "resample grid half-width around psi_hat")
      ->capture_default_str();
  app.add_flag("--bootstrap-full-grid", config.bootstrap_full_grid,
               "resamples re-run the complete grid");
  app.add_option("--seed", config.seed, "RNG seed")->capture_default_str();
  app.add_option("--threads", config.threads, "bootstrap worker threads")
      ->capture_default_str();
  app.add_option("--out", config.out_dir, "output directory")->required();

  auto* simulate = app.add_subcommand(
      "simulate", "draw a synthetic confounded panel; writes panel.csv + ground_truth.json");
  auto* diagnose = app.add_subcommand(
      "diagnose", "identification diagnostics only; writes diagnostics.json + sample_flow.json");
  auto* estimate = app.add_subcommand(
      "estimate", "G-estimation + IPTW/MSM without bootstrap; writes the full report");
  auto* bootstrap_cmd = app.add_subcommand(
      "bootstrap", "estimate plus BCa bootstrap (default B = 1000)");
  auto* report_cmd = app.add_subcommand(
      "report", "full pipeline honouring --bootstrap (default off)");
  for (auto* sub : {simulate, diagnose, estimate, bootstrap_cmd, report_cmd}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (!grid_spec.empty()) {
      if (grid_spec.size() != 3) {
        raise(ErrorKind::invalid_config, "--grid needs exactly LO,HI,STEP");
      }
      config.grid_lo = grid_spec[0];
      config.grid_hi = grid_spec[1];
      config.grid_step = grid_spec[2];
    }

    if (simulate->parsed()) {
      run_simulate(config);
    } else if (diagnose->parsed()) {
      run_diagnose(config);
      std::printf("wrote diagnostics.json and sample_flow.json to %s\n",
                  config.out_dir.c_str());
    } else if (estimate->parsed()) {
      config.bootstrap_B = 0;
      print_headline(run_pipeline(config));
    } else if (bootstrap_cmd->parsed()) {
      if (config.bootstrap_B == 0) config.bootstrap_B = 1000;
      print_headline(run_pipeline(config));
    } else {
      print_headline(run_pipeline(config));
    }
  } catch (const Error& e) {
    std::cerr << "causalpanel: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "causalpanel: unexpected: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
