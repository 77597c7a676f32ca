#include "causalpanel/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "causalpanel/errors.hpp"

namespace causalpanel {

namespace {

std::string row_context(std::size_t row_index) {
  // row_index is the 1-based data-row number (header excluded).
  return " (data row " + std::to_string(row_index) + ")";
}

// Splits one CSV record honoring double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

bool parse_double(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

int parse_binary(const std::string& text, std::size_t row_index, ErrorKind kind,
                 const char* what) {
  double v;
  if (!parse_double(text, v)) {
    raise(kind, std::string(what) + " value '" + text + "' is not numeric" +
                    row_context(row_index));
  }
  if (v == 0.0) return 0;
  if (v == 1.0) return 1;
  raise(kind, std::string(what) + " value " + text + " outside {0,1}" +
                  row_context(row_index));
}

}  // namespace

Panel::Panel(std::vector<std::string> schema, std::vector<PanelRow> rows,
             std::string provenance)
    : schema_(std::move(schema)),
      rows_(std::move(rows)),
      provenance_(std::move(provenance)) {
  std::unordered_set<std::string> seen;
  seen.reserve(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const PanelRow& row = rows_[i];
    if (row.treatment != 0 && row.treatment != 1) {
      raise(ErrorKind::non_binary_treatment,
            "treatment outside {0,1}" + row_context(i + 1));
    }
    if (row.outcome != 0 && row.outcome != 1) {
      raise(ErrorKind::non_binary_outcome,
            "outcome outside {0,1}" + row_context(i + 1));
    }
    if (row.covariates.size() != schema_.size()) {
      raise(ErrorKind::schema_mismatch,
            "covariate count " + std::to_string(row.covariates.size()) +
                " does not match schema length " + std::to_string(schema_.size()) +
                row_context(i + 1));
    }
    for (double v : row.covariates) {
      if (!std::isfinite(v)) {
        raise(ErrorKind::missing_value,
              "non-finite covariate" + row_context(i + 1));
      }
    }
    if (!seen.insert(row.unit_id).second) {
      raise(ErrorKind::duplicate_unit_id,
            "unit_id '" + row.unit_id + "' appears more than once");
    }
    n_treated_ += static_cast<std::size_t>(row.treatment);
  }
}

std::size_t Panel::covariate_index(const std::string& name) const {
  const auto it = std::find(schema_.begin(), schema_.end(), name);
  if (it == schema_.end()) {
    raise(ErrorKind::schema_mismatch, "covariate '" + name + "' not in schema");
  }
  return static_cast<std::size_t>(it - schema_.begin());
}

void Panel::require_both_arms() const {
  if (rows_.empty() || n_treated_ == 0 || n_treated_ == rows_.size()) {
    raise(ErrorKind::single_arm,
          "estimation needs at least one treated and one control row");
  }
}

Panel load_panel(const std::string& path, const CsvMapping& mapping,
                 LoadStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    raise(ErrorKind::file_unreadable, "cannot open '" + path + "'");
  }

  std::string line;
  if (!std::getline(in, line)) {
    raise(ErrorKind::schema_mismatch, "'" + path + "' has no header row");
  }
  const std::vector<std::string> header = split_csv_line(line);

  std::unordered_map<std::string, std::size_t> column_index;
  for (std::size_t i = 0; i < header.size(); ++i) column_index[header[i]] = i;

  auto require_column = [&](const std::string& name) -> std::size_t {
    const auto it = column_index.find(name);
    if (it == column_index.end()) {
      raise(ErrorKind::schema_mismatch,
            "column '" + name + "' absent from '" + path + "'");
    }
    return it->second;
  };

  const std::size_t unit_idx = require_column(mapping.unit_column);
  const std::size_t treat_idx = require_column(mapping.treatment_column);
  const std::size_t outcome_idx = require_column(mapping.outcome_column);
  std::vector<std::size_t> cov_idx;
  cov_idx.reserve(mapping.covariate_columns.size());
  for (const auto& name : mapping.covariate_columns) {
    cov_idx.push_back(require_column(name));
  }

  std::vector<PanelRow> rows;
  LoadStats local;
  std::size_t row_index = 0;
  while (std::getline(in, line)) {
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    ++row_index;
    ++local.rows_read;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      raise(ErrorKind::schema_mismatch,
            "expected " + std::to_string(header.size()) + " fields, found " +
                std::to_string(fields.size()) + row_context(row_index));
    }

    bool missing = false;
    auto field_missing = [&](std::size_t idx) { return fields[idx].empty(); };
    missing = field_missing(unit_idx) || field_missing(treat_idx) ||
              field_missing(outcome_idx);
    PanelRow row;
    row.covariates.reserve(cov_idx.size());
    if (!missing) {
      for (std::size_t ci : cov_idx) {
        double v = 0.0;
        if (field_missing(ci) || !parse_double(fields[ci], v) || !std::isfinite(v)) {
          missing = true;
          break;
        }
        row.covariates.push_back(v);
      }
    }
    if (missing) {
      if (mapping.drop_missing) {
        ++local.rows_dropped_missing;
        continue;
      }
      raise(ErrorKind::missing_value,
            "missing or non-finite value" + row_context(row_index));
    }

    row.unit_id = fields[unit_idx];
    row.treatment = parse_binary(fields[treat_idx], row_index,
                                 ErrorKind::non_binary_treatment, "treatment");
    row.outcome = parse_binary(fields[outcome_idx], row_index,
                               ErrorKind::non_binary_outcome, "outcome");
    rows.push_back(std::move(row));
  }

  if (stats) *stats = local;
  return Panel(mapping.covariate_columns, std::move(rows), path);
}

void write_panel(const Panel& panel, const std::string& path,
                 const WriteColumns& columns) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    raise(ErrorKind::io_failure, "cannot write '" + path + "'");
  }
  out << columns.unit_column << ',' << columns.treatment_column << ','
      << columns.outcome_column;
  for (const auto& name : panel.schema()) out << ',' << name;
  out << '\n';
  for (const PanelRow& row : panel.rows()) {
    out << row.unit_id << ',' << row.treatment << ',' << row.outcome;
    for (double v : row.covariates) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out.flush()) {
    raise(ErrorKind::io_failure, "write to '" + path + "' failed");
  }
}

std::pair<Panel, SampleFlow> sample_flow(const Panel& raw,
                                         const std::vector<PanelFilter>& filters,
                                         const std::string& input_label) {
  SampleFlow flow;
  std::vector<PanelRow> current = raw.rows();

  auto count_units = [](const std::vector<PanelRow>& rows) {
    std::unordered_set<std::string> ids;
    ids.reserve(rows.size());
    for (const PanelRow& r : rows) ids.insert(r.unit_id);
    return ids.size();
  };

  flow.stages.push_back({input_label, count_units(current), current.size(), ""});

  for (const PanelFilter& filter : filters) {
    std::vector<PanelRow> kept;
    kept.reserve(current.size());
    for (PanelRow& row : current) {
      if (filter.keep(row)) kept.push_back(std::move(row));
    }
    current = std::move(kept);
    if (current.empty()) {
      raise(ErrorKind::empty_result,
            "stage '" + filter.name + "' left zero rows");
    }
    flow.stages.push_back(
        {filter.name, count_units(current), current.size(), filter.reason});
  }

  Panel result(raw.schema(), std::move(current),
               raw.provenance() + " | filtered");
  return {std::move(result), std::move(flow)};
}

GroupSummary summarize_groups(const Panel& panel) {
  panel.require_both_arms();
  const std::size_t p = panel.n_covariates();

  GroupSummary summary;
  summary.treated.covariate_means.assign(p, 0.0);
  summary.control.covariate_means.assign(p, 0.0);

  std::size_t treated_outcomes = 0, control_outcomes = 0;
  for (const PanelRow& row : panel.rows()) {
    ArmSummary& arm = row.treatment ? summary.treated : summary.control;
    ++arm.n;
    (row.treatment ? treated_outcomes : control_outcomes) +=
        static_cast<std::size_t>(row.outcome);
    for (std::size_t j = 0; j < p; ++j) arm.covariate_means[j] += row.covariates[j];
  }

  for (std::size_t j = 0; j < p; ++j) {
    summary.treated.covariate_means[j] /= static_cast<double>(summary.treated.n);
    summary.control.covariate_means[j] /= static_cast<double>(summary.control.n);
  }
  summary.treated.outcome_rate =
      static_cast<double>(treated_outcomes) / static_cast<double>(summary.treated.n);
  summary.control.outcome_rate =
      static_cast<double>(control_outcomes) / static_cast<double>(summary.control.n);
  summary.n_total = panel.size();
  summary.outcome_rate_overall =
      static_cast<double>(treated_outcomes + control_outcomes) /
      static_cast<double>(summary.n_total);
  summary.unadjusted_risk_difference =
      summary.treated.outcome_rate - summary.control.outcome_rate;
  return summary;
}

}  // namespace causalpanel
