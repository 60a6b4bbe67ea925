#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace moco {

/// Mean and sample standard deviation (n - 1 denominator; 0 for n < 2).
struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;
};

Summary summarize(std::span<const double> values);

struct Cell {
  std::vector<double> values;  // one per run; absent runs are simply not listed
  Summary summary;

  static Cell of(std::vector<double> values);
  bool empty() const { return values.empty(); }
};

struct Row {
  std::vector<std::string> keys;
  std::vector<Cell> cells;
};

struct Table {
  std::string name;
  std::vector<std::string> key_columns;
  std::vector<std::string> metric_columns;
  std::vector<Row> rows;

  /// Header plus one line per row; cells print as "mean ± std" with two
  /// decimals, or "n/a" when no run contributed.
  std::string csv() const;
  const Row* find(const std::vector<std::string>& keys) const;
};

/// An experiment's output: summary tables plus the raw per-run records they
/// were computed from. A record that feeds a table carries
///   {"table": name, "row": [keys...], "metrics": {column: value | null}}
/// alongside free-form context fields.
struct Report {
  std::string kind;
  std::vector<Table> tables;
  std::vector<nlohmann::json> records;
  std::vector<std::string> skipped;

  const Table& table(const std::string& name) const;
  std::string jsonl() const;
};

/// Builds a table's rows from the records tagged with its name. Rows appear
/// in first-seen order; null metric values are left out of a cell.
Table table_from_records(const std::string& name, const std::vector<std::string>& key_columns,
                         const std::vector<std::string>& metric_columns, const std::vector<nlohmann::json>& records);

/// Recomputes every table from the records and lists each cell whose mean or
/// std differs by more than tol. Empty means consistent.
std::vector<std::string> check_report(const Report& report, double tol = 1e-9);

nlohmann::json make_record(const std::string& table, const std::vector<std::string>& row,
                           const std::vector<std::pair<std::string, std::optional<double>>>& metrics);

}  // namespace moco
