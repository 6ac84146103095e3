#pragma once

// CSV ingestion, train/test splitting, standardisation and stratified IID
// partitioning into per-client datasets.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fedswitch/core.hpp"
#include "fedswitch/rng.hpp"

namespace fedswitch {

class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CategoricalColumn {
  std::string name;
  std::vector<std::string> categories;  // one-hot column order

  friend bool operator==(const CategoricalColumn&, const CategoricalColumn&) = default;
};

struct CsvSchema {
  std::string label_column;
  std::string positive_label = "1";         // label value mapped to class 1
  std::vector<std::string> numeric_columns;  // empty: every unlisted non-label column
  std::vector<CategoricalColumn> categorical_columns;
  std::vector<std::string> ignore_columns;
  std::optional<std::string> protected_column;
  std::vector<std::string> protected_values;  // values of protected_column in the protected group
  std::string missing_token = "?";            // rows containing it are dropped
  bool has_header = true;
  std::vector<std::string> column_names;      // required when has_header is false

  friend bool operator==(const CsvSchema&, const CsvSchema&) = default;
};

struct Table {
  std::vector<std::string> feature_names;
  std::vector<bool> is_numeric;  // per encoded feature column; one-hot columns are false
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> features;  // row-major rows x cols
  std::vector<int> labels;
  std::vector<bool> is_protected;  // empty when the schema has no protected column
  std::size_t dropped_rows = 0;

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(features).subspan(r * cols, cols);
  }

  Table select(std::span<const std::size_t> idx) const {
    Table t;
    t.feature_names = feature_names;
    t.is_numeric = is_numeric;
    t.cols = cols;
    t.rows = idx.size();
    t.features.reserve(idx.size() * cols);
    for (std::size_t r : idx) {
      auto src = row(r);
      t.features.insert(t.features.end(), src.begin(), src.end());
      t.labels.push_back(labels[r]);
      if (!is_protected.empty()) t.is_protected.push_back(is_protected[r]);
    }
    return t;
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace detail

/// Parses CSV text under a schema. source names the input in error messages.
inline Table parse_csv(std::istream& in, const CsvSchema& schema,
                       const std::string& source = "<csv>") {
  auto where = [&source](std::size_t line) { return source + ":" + std::to_string(line); };

  std::vector<std::string> header;
  std::string line;
  std::size_t line_no = 0;
  if (schema.has_header) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!detail::trim(line).empty()) break;
    }
    if (detail::trim(line).empty()) throw data_error(source + ": missing header row");
    header = detail::split_csv_line(line);
  } else {
    if (schema.column_names.empty())
      throw data_error(source + ": schema needs column_names when has_header is false");
    header = schema.column_names;
  }

  auto column_index = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw data_error(source + ": column '" + name + "' not found");
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t label_idx = column_index(schema.label_column);
  std::optional<std::size_t> protected_idx;
  if (schema.protected_column) protected_idx = column_index(*schema.protected_column);

  // Encoded feature plan: (source column, category or empty for numeric).
  struct Encoded {
    std::size_t source;
    std::optional<std::size_t> categorical;  // index into schema.categorical_columns
  };
  std::vector<Encoded> plan;
  Table table;

  std::vector<std::string> numeric = schema.numeric_columns;
  if (numeric.empty()) {
    for (const auto& name : header) {
      const bool is_cat = std::any_of(schema.categorical_columns.begin(), schema.categorical_columns.end(),
                                      [&](const CategoricalColumn& c) { return c.name == name; });
      if (name == schema.label_column || is_cat || detail::contains(schema.ignore_columns, name) ||
          (schema.protected_column && name == *schema.protected_column))
        continue;
      numeric.push_back(name);
    }
  }
  for (const auto& name : numeric) {
    plan.push_back({column_index(name), std::nullopt});
    table.feature_names.push_back(name);
    table.is_numeric.push_back(true);
  }
  for (std::size_t c = 0; c < schema.categorical_columns.size(); ++c) {
    const auto& cat = schema.categorical_columns[c];
    if (cat.categories.empty())
      throw data_error(source + ": categorical column '" + cat.name + "' declares no categories");
    plan.push_back({column_index(cat.name), c});
    for (const auto& value : cat.categories) {
      table.feature_names.push_back(cat.name + "=" + value);
      table.is_numeric.push_back(false);
    }
  }
  table.cols = table.feature_names.size();

  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw data_error(where(line_no) + ": ragged row (" + std::to_string(cells.size()) +
                       " fields, expected " + std::to_string(header.size()) + ")");
    if (!schema.missing_token.empty() &&
        std::find(cells.begin(), cells.end(), schema.missing_token) != cells.end()) {
      ++table.dropped_rows;
      continue;
    }
    for (const auto& enc : plan) {
      const std::string& cell = cells[enc.source];
      if (!enc.categorical) {
        double value = 0.0;
        std::size_t used = 0;
        try {
          value = std::stod(cell, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used == 0 || used != cell.size() || !std::isfinite(value))
          throw data_error(where(line_no) + ", column '" + header[enc.source] +
                           "': cannot parse '" + cell + "' as a number");
        table.features.push_back(value);
      } else {
        const auto& cat = schema.categorical_columns[*enc.categorical];
        const auto it = std::find(cat.categories.begin(), cat.categories.end(), cell);
        if (it == cat.categories.end())
          throw data_error(where(line_no) + ", column '" + cat.name + "': unknown category '" +
                           cell + "'");
        for (std::size_t k = 0; k < cat.categories.size(); ++k)
          table.features.push_back(cat.categories.begin() + static_cast<std::ptrdiff_t>(k) == it ? 1.0
                                                                                                  : 0.0);
      }
    }
    table.labels.push_back(cells[label_idx] == schema.positive_label ? 1 : 0);
    if (protected_idx)
      table.is_protected.push_back(detail::contains(schema.protected_values, cells[*protected_idx]));
    ++table.rows;
  }
  return table;
}

inline Table load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw data_error(path + ": cannot open file");
  return parse_csv(in, schema, path);
}

/// Seeded shuffle then split: the first floor(fraction * rows) shuffled rows
/// form the training set.
inline std::pair<Table, Table> split_train_test(const Table& table, double fraction,
                                                const RngStreamKey& key) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw invalid_argument("split_train_test: fraction must lie in (0, 1)");
  std::vector<std::size_t> perm(table.rows);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  SplitMix64 rng = make_stream(key);
  for (std::size_t i = perm.size(); i > 1; --i)
    std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.below(i))]);
  const auto n_train = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(table.rows)));
  std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {table.select(train), table.select(test)};
}

/// Per-column affine standardisation of the numeric feature columns.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 1 for non-numeric or constant columns

  static Standardizer fit(const Table& t) {
    Standardizer s;
    s.mean.assign(t.cols, 0.0);
    s.scale.assign(t.cols, 1.0);
    if (t.rows == 0) return s;
    for (std::size_t c = 0; c < t.cols; ++c) {
      if (!t.is_numeric[c]) continue;
      double sum = 0.0;
      for (std::size_t r = 0; r < t.rows; ++r) sum += t.features[r * t.cols + c];
      const double mu = sum / static_cast<double>(t.rows);
      double ss = 0.0;
      for (std::size_t r = 0; r < t.rows; ++r) {
        const double d = t.features[r * t.cols + c] - mu;
        ss += d * d;
      }
      const double sd = std::sqrt(ss / static_cast<double>(t.rows));
      s.mean[c] = mu;
      s.scale[c] = sd > 0.0 ? sd : 1.0;
    }
    return s;
  }

  void apply(Table& t) const {
    if (mean.size() != t.cols) throw invalid_argument("Standardizer: column count mismatch");
    for (std::size_t r = 0; r < t.rows; ++r)
      for (std::size_t c = 0; c < t.cols; ++c) {
        double& v = t.features[r * t.cols + c];
        v = (v - mean[c]) / scale[c];
      }
  }
};

struct ClientDataset {
  std::size_t client_id = 0;
  std::size_t cols = 0;
  std::vector<double> features;  // row-major
  std::vector<int> labels;
  std::vector<std::size_t> class0;
  std::vector<std::size_t> class1;
  std::vector<std::size_t> protected_group;
  std::vector<std::size_t> unprotected_group;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(features).subspan(r * cols, cols);
  }
};

enum class Stratum { label, protected_attribute };

/// Builds a client dataset from selected table rows and fills its index sets.
inline ClientDataset make_client(const Table& t, std::span<const std::size_t> rows, std::size_t id) {
  ClientDataset c;
  c.client_id = id;
  c.cols = t.cols;
  for (std::size_t local = 0; local < rows.size(); ++local) {
    const std::size_t r = rows[local];
    auto src = t.row(r);
    c.features.insert(c.features.end(), src.begin(), src.end());
    c.labels.push_back(t.labels[r]);
    (t.labels[r] == 1 ? c.class1 : c.class0).push_back(local);
    if (!t.is_protected.empty())
      (t.is_protected[r] ? c.protected_group : c.unprotected_group).push_back(local);
  }
  return c;
}

/// Stratified IID partition. Rows of each stratum are shuffled and dealt
/// round-robin; the dealing position carries over between strata so client
/// sizes differ by at most one overall as well as within each stratum.
inline std::vector<ClientDataset> iid_partition(const Table& t, std::size_t n,
                                                const RngStreamKey& key,
                                                std::span<const Stratum> stratify_by) {
  if (n == 0) throw invalid_argument("iid_partition: need at least one client");
  const bool by_label = std::find(stratify_by.begin(), stratify_by.end(), Stratum::label) != stratify_by.end();
  const bool by_protected = std::find(stratify_by.begin(), stratify_by.end(), Stratum::protected_attribute) !=
                            stratify_by.end();
  if (by_protected && t.is_protected.empty())
    throw invalid_configuration("iid_partition: stratifying by protected attribute but table has none");

  std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
  for (std::size_t r = 0; r < t.rows; ++r) {
    const int lab = by_label ? t.labels[r] : -1;
    const int prot = by_protected ? static_cast<int>(t.is_protected[r]) : -1;
    strata[{lab, prot}].push_back(r);
  }

  std::vector<std::vector<std::size_t>> assignment(n);
  SplitMix64 rng = make_stream(key);
  std::size_t next = 0;
  for (auto& [id, rows] : strata) {
    if (rows.size() < n) {
      std::string name;
      if (by_label) name += "label=" + std::to_string(id.first);
      if (by_protected) name += std::string(name.empty() ? "" : ",") + "protected=" + std::to_string(id.second);
      if (name.empty()) name = "all";
      throw invalid_configuration("iid_partition: stratum " + name + " has " + std::to_string(rows.size()) +
                                  " samples, fewer than " + std::to_string(n) + " clients");
    }
    for (std::size_t i = rows.size(); i > 1; --i)
      std::swap(rows[i - 1], rows[static_cast<std::size_t>(rng.below(i))]);
    for (std::size_t r : rows) {
      assignment[next].push_back(r);
      next = (next + 1) % n;
    }
  }

  std::vector<ClientDataset> clients;
  clients.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(assignment[i].begin(), assignment[i].end());
    clients.push_back(make_client(t, assignment[i], i));
  }
  return clients;
}

}  // namespace fedswitch
