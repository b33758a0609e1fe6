#include "pitr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "pitr/csv.hpp"

namespace pitr {

std::size_t CovariateEncoding::encoded_dim() const {
  std::size_t d = 0;
  for (const ColumnEncoding& col : columns) d += col.width();
  return d;
}

std::vector<double> CovariateEncoding::encode(std::span<const std::string> cells,
                                              std::size_t* unseen_count) const {
  if (cells.size() != columns.size())
    throw ValidationError("row has " + std::to_string(cells.size()) + " covariate cells, expected " +
                          std::to_string(columns.size()));
  std::vector<double> out;
  out.reserve(encoded_dim());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const ColumnEncoding& col = columns[c];
    if (col.categorical) {
      const auto it = std::find(col.categories.begin(), col.categories.end(), cells[c]);
      std::size_t level = 0;
      if (it == col.categories.end()) {
        if (unseen_count) ++(*unseen_count);  // unseen -> reference block
      } else {
        level = static_cast<std::size_t>(it - col.categories.begin());
      }
      for (std::size_t k = 1; k < col.categories.size(); ++k)
        out.push_back(level == k ? 1.0 : 0.0);
    } else {
      bool ok = false;
      double v = parse_double(cells[c], ok);
      if (!ok || !std::isfinite(v))
        throw ValidationError("column '" + col.name + "': unparseable numeric cell '" + cells[c] +
                              "'");
      if (col.standardized) v = (v - col.mean) / col.sd;
      out.push_back(v);
    }
  }
  return out;
}

std::vector<double> CovariateEncoding::encode_numeric(std::span<const double> values) const {
  if (values.size() != columns.size())
    throw ValidationError("numeric row width does not match encoding");
  std::vector<double> out;
  out.reserve(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const ColumnEncoding& col = columns[c];
    if (col.categorical)
      throw ValidationError("encode_numeric on categorical column '" + col.name + "'");
    double v = values[c];
    if (!std::isfinite(v)) throw ValidationError("non-finite covariate value");
    if (col.standardized) v = (v - col.mean) / col.sd;
    out.push_back(v);
  }
  return out;
}

CovariateEncoding CovariateEncoding::numeric(const std::vector<std::string>& names) {
  CovariateEncoding enc;
  enc.columns.reserve(names.size());
  for (const std::string& name : names) {
    ColumnEncoding col;
    col.name = name;
    enc.columns.push_back(std::move(col));
  }
  return enc;
}

std::size_t TrialDataset::covariate_dim() const {
  if (!control.empty()) return control.front().covariates.size();
  if (!experimental.empty()) return experimental.front().covariates.size();
  return 0;
}

std::size_t TrialDataset::outcome_dim() const {
  if (!control.empty()) return control.front().outcomes.size();
  if (!experimental.empty()) return experimental.front().outcomes.size();
  return 0;
}

const Subject& TrialDataset::pooled(std::size_t index) const {
  return index < control.size() ? control[index] : experimental[index - control.size()];
}

void TrialDataset::validate() const {
  if (control.empty()) throw ValidationError("control arm is empty");
  if (experimental.empty()) throw ValidationError("experimental arm is empty");
  const std::size_t d = covariate_dim();
  const std::size_t q = outcome_dim();
  for (std::size_t i = 0; i < pooled_size(); ++i) {
    const Subject& s = pooled(i);
    if (s.covariates.size() != d || s.outcomes.size() != q)
      throw ValidationError("subjects have inconsistent dimensions");
    for (double v : s.covariates)
      if (!std::isfinite(v)) throw ValidationError("non-finite covariate");
    for (double v : s.outcomes)
      if (!std::isfinite(v)) throw ValidationError("non-finite outcome");
  }
}

namespace {

struct RawColumn {
  std::size_t csv_index = 0;
  bool categorical = false;
};

}  // namespace

TrialDataset ingest_csv(const std::string& path, const CsvSchema& schema, IngestReport* report) {
  if (schema.arm_column.empty()) throw ValidationError("schema: arm column not set");
  if (schema.outcome_columns.empty()) throw ValidationError("schema: no outcome columns");
  if (schema.covariate_columns.empty()) throw ValidationError("schema: no covariate columns");

  const CsvTable table = read_csv(path);
  const auto require_column = [&](const std::string& name) -> std::size_t {
    const auto idx = table.column_index(name);
    if (!idx) throw ValidationError(path + ": unknown column '" + name + "'");
    return *idx;
  };

  const std::size_t arm_idx = require_column(schema.arm_column);
  std::vector<std::size_t> outcome_idx;
  for (const std::string& name : schema.outcome_columns) outcome_idx.push_back(require_column(name));
  std::vector<RawColumn> cov_cols;
  for (const std::string& name : schema.covariate_columns) {
    RawColumn rc;
    rc.csv_index = require_column(name);
    rc.categorical =
        std::find(schema.categorical.begin(), schema.categorical.end(), name) != schema.categorical.end();
    cov_cols.push_back(rc);
  }
  for (const std::string& name : schema.categorical)
    if (std::find(schema.covariate_columns.begin(), schema.covariate_columns.end(), name) ==
        schema.covariate_columns.end())
      throw ValidationError("schema: categorical column '" + name + "' is not a covariate column");

  // First pass: drop rows with missing cells, auto-detect categorical columns.
  std::vector<std::size_t> kept;
  std::vector<std::size_t> dropped;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::vector<std::string>& row = table.rows[r];
    bool missing = is_missing_cell(row[arm_idx]);
    for (std::size_t k = 0; !missing && k < outcome_idx.size(); ++k)
      missing = is_missing_cell(row[outcome_idx[k]]);
    for (std::size_t k = 0; !missing && k < cov_cols.size(); ++k)
      missing = is_missing_cell(row[cov_cols[k].csv_index]);
    if (missing) {
      dropped.push_back(r + 1);  // 1-based data row number
      continue;
    }
    kept.push_back(r);
  }
  if (report) report->dropped_rows = dropped;

  for (RawColumn& rc : cov_cols) {
    if (rc.categorical) continue;
    for (std::size_t r : kept) {
      bool ok = false;
      parse_double(table.rows[r][rc.csv_index], ok);
      if (!ok) {
        rc.categorical = true;
        break;
      }
    }
  }

  // Build the encoding from the kept rows (both arms pooled).
  CovariateEncoding encoding;
  for (std::size_t k = 0; k < cov_cols.size(); ++k) {
    ColumnEncoding col;
    col.name = schema.covariate_columns[k];
    col.categorical = cov_cols[k].categorical;
    if (col.categorical) {
      std::set<std::string> levels;
      for (std::size_t r : kept) levels.insert(table.rows[r][cov_cols[k].csv_index]);
      col.categories.assign(levels.begin(), levels.end());
      if (col.categories.empty()) throw ValidationError("column '" + col.name + "' has no values");
    } else if (schema.standardize) {
      double sum = 0.0, sum2 = 0.0;
      for (std::size_t r : kept) {
        bool ok = false;
        const double v = parse_double(table.rows[r][cov_cols[k].csv_index], ok);
        if (!ok || !std::isfinite(v))
          throw ValidationError(path + ": column '" + col.name + "', data row " +
                                std::to_string(r + 1) + ": unparseable numeric cell");
        sum += v;
        sum2 += v * v;
      }
      const double nkept = static_cast<double>(kept.size());
      const double mean = sum / nkept;
      const double var = kept.size() > 1 ? (sum2 - nkept * mean * mean) / (nkept - 1.0) : 0.0;
      const double sd = var > 0.0 ? std::sqrt(var) : 0.0;
      if (sd > 0.0) {  // constant columns carried unstandardized
        col.standardized = true;
        col.mean = mean;
        col.sd = sd;
      }
    }
    encoding.columns.push_back(std::move(col));
  }

  TrialDataset data;
  data.encoding = encoding;
  std::vector<std::string> cells(cov_cols.size());
  for (std::size_t r : kept) {
    const std::vector<std::string>& row = table.rows[r];
    const std::string& arm_cell = row[arm_idx];
    Arm arm;
    if (arm_cell == "0") {
      arm = Arm::control;
    } else if (arm_cell == "1") {
      arm = Arm::experimental;
    } else {
      throw ValidationError(path + ": data row " + std::to_string(r + 1) + ": arm value '" +
                            arm_cell + "' is not 0 or 1");
    }
    Subject subj;
    subj.arm = arm;
    for (std::size_t k = 0; k < outcome_idx.size(); ++k) {
      bool ok = false;
      const double v = parse_double(row[outcome_idx[k]], ok);
      if (!ok || !std::isfinite(v))
        throw ValidationError(path + ": data row " + std::to_string(r + 1) + ": outcome column '" +
                              schema.outcome_columns[k] + "': unparseable cell '" +
                              row[outcome_idx[k]] + "'");
      subj.outcomes.push_back(v);
    }
    for (std::size_t k = 0; k < cov_cols.size(); ++k) cells[k] = row[cov_cols[k].csv_index];
    try {
      subj.covariates = encoding.encode(cells);
    } catch (const ValidationError& e) {
      throw ValidationError(path + ": data row " + std::to_string(r + 1) + ": " + e.what());
    }
    (arm == Arm::control ? data.control : data.experimental).push_back(std::move(subj));
  }

  if (data.control.empty()) throw ValidationError(path + ": control arm empty");
  if (data.experimental.empty()) throw ValidationError(path + ": experimental arm empty");
  return data;
}

namespace {

void check_pair_budget(std::size_t m, std::size_t n, std::size_t budget) {
  if (m != 0 && n > budget / m)
    throw ResourceError("pair set of " + std::to_string(m) + "x" + std::to_string(n) +
                        " records exceeds the pair budget of " + std::to_string(budget) +
                        "; use the bagged pipeline (--method bagged) or raise the budget");
}

void check_outcome_dims(const TrialDataset& data, const ScoreSpec& spec) {
  if (data.outcome_dim() != spec.dim())
    throw ValidationError("outcome dimension " + std::to_string(data.outcome_dim()) +
                          " does not match score spec levels " + std::to_string(spec.dim()));
}

}  // namespace

std::vector<PairRecord> build_pairs(const TrialDataset& data, const ScoreSpec& spec,
                                    std::size_t pair_budget) {
  check_outcome_dims(data, spec);
  check_pair_budget(data.m(), data.n(), pair_budget);
  std::vector<PairRecord> pairs;
  pairs.reserve(data.m() * data.n());
  for (const Subject& ci : data.control) {
    for (const Subject& ej : data.experimental) {
      PairRecord rec;
      rec.x = ci.covariates;
      rec.u = ej.covariates;
      rec.s = score(spec, ci.outcomes, ej.outcomes);
      pairs.push_back(std::move(rec));
    }
  }
  return pairs;
}

PairMatrix build_pair_matrix(const TrialDataset& data, const ScoreSpec& spec,
                             std::size_t pair_budget) {
  check_outcome_dims(data, spec);
  check_pair_budget(data.m(), data.n(), pair_budget);
  const std::size_t m = data.m(), n = data.n(), d = data.covariate_dim();
  PairMatrix out;
  out.features = FeatureMatrix(m * n, 2 * d);
  out.labels.resize(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const Subject& ci = data.control[i];
    for (std::size_t j = 0; j < n; ++j) {
      const Subject& ej = data.experimental[j];
      const std::size_t row = i * n + j;
      for (std::size_t k = 0; k < d; ++k) {
        out.features.set(row, k, ci.covariates[k]);
        out.features.set(row, d + k, ej.covariates[k]);
      }
      out.labels[row] = static_cast<std::int8_t>(score(spec, ci.outcomes, ej.outcomes));
    }
  }
  return out;
}

double net_benefit(const TrialDataset& data, const ScoreSpec& spec) {
  check_outcome_dims(data, spec);
  if (data.m() == 0 || data.n() == 0) throw ValidationError("both arms must be nonempty");
  std::int64_t sum = 0;
  for (const Subject& ci : data.control)
    for (const Subject& ej : data.experimental) sum += score(spec, ci.outcomes, ej.outcomes);
  return static_cast<double>(sum) / (static_cast<double>(data.m()) * static_cast<double>(data.n()));
}

}  // namespace pitr
