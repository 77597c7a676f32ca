#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace causalpanel {

// One unit of the analysis panel: binary treatment, binary fixed-horizon
// outcome, and a fixed-length covariate vector.
struct PanelRow {
  std::string unit_id;
  int treatment = 0;  // 0 or 1
  int outcome = 0;    // 0 or 1
  std::vector<double> covariates;
};

class Panel {
 public:
  Panel() = default;
  // Validates binary flags, finite covariates, schema-length agreement and
  // unit-id uniqueness.
  Panel(std::vector<std::string> schema, std::vector<PanelRow> rows,
        std::string provenance);

  const std::vector<std::string>& schema() const { return schema_; }
  const std::vector<PanelRow>& rows() const { return rows_; }
  const std::string& provenance() const { return provenance_; }

  std::size_t size() const { return rows_.size(); }
  std::size_t n_covariates() const { return schema_.size(); }
  std::size_t n_treated() const { return n_treated_; }
  std::size_t n_control() const { return rows_.size() - n_treated_; }

  // Index of a covariate by name; throws SchemaMismatch when absent.
  std::size_t covariate_index(const std::string& name) const;

  // Throws SingleArm unless both arms are populated.
  void require_both_arms() const;

 private:
  std::vector<std::string> schema_;
  std::vector<PanelRow> rows_;
  std::string provenance_;
  std::size_t n_treated_ = 0;
};

struct CsvMapping {
  std::string unit_column;
  std::string treatment_column;
  std::string outcome_column;
  std::vector<std::string> covariate_columns;
  // When set, rows with missing or non-finite values are dropped (and
  // counted); otherwise the first such value is an error.
  bool drop_missing = false;
};

struct LoadStats {
  std::size_t rows_read = 0;
  std::size_t rows_dropped_missing = 0;
};

Panel load_panel(const std::string& path, const CsvMapping& mapping,
                 LoadStats* stats = nullptr);

struct WriteColumns {
  std::string unit_column = "unit_id";
  std::string treatment_column = "treatment";
  std::string outcome_column = "outcome";
};

// Writes the panel as a header-first CSV. Numeric values use shortest
// round-trip formatting so a reload reproduces them bit for bit.
void write_panel(const Panel& panel, const std::string& path,
                 const WriteColumns& columns = {});

struct SampleFlowStage {
  std::string stage;
  std::size_t n_units = 0;
  std::size_t n_rows = 0;
  std::string reason;
};

struct SampleFlow {
  std::vector<SampleFlowStage> stages;
};

struct PanelFilter {
  std::string name;
  std::function<bool(const PanelRow&)> keep;
  std::string reason;
};

// Applies filters in order, recording counts after each stage. The first
// stage reports the raw input counts under `input_label`. Throws EmptyResult
// if a stage leaves zero rows.
std::pair<Panel, SampleFlow> sample_flow(const Panel& raw,
                                         const std::vector<PanelFilter>& filters,
                                         const std::string& input_label = "input");

struct ArmSummary {
  std::size_t n = 0;
  double outcome_rate = 0.0;
  std::vector<double> covariate_means;
};

struct GroupSummary {
  ArmSummary treated;
  ArmSummary control;
  std::size_t n_total = 0;
  double outcome_rate_overall = 0.0;
  double unadjusted_risk_difference = 0.0;
};

// Per-arm counts, outcome rates and covariate means. Throws SingleArm if
// either arm is empty.
GroupSummary summarize_groups(const Panel& panel);

}  // namespace causalpanel
