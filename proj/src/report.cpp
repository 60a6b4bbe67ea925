#include "moco/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "moco/error.hpp"

namespace moco {

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

Cell Cell::of(std::vector<double> values) {
  Cell c;
  c.values = std::move(values);
  c.summary = summarize(c.values);
  return c;
}

namespace {

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char ch : text) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string format_cell(const Cell& cell) {
  if (cell.empty()) return "n/a";
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", cell.summary.mean, cell.summary.std);
  return buf;
}

}  // namespace

std::string Table::csv() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& c : key_columns) {
    out << (first ? "" : ",") << csv_field(c);
    first = false;
  }
  for (const auto& c : metric_columns) {
    out << (first ? "" : ",") << csv_field(c);
    first = false;
  }
  out << '\n';
  for (const Row& row : rows) {
    first = true;
    for (const auto& k : row.keys) {
      out << (first ? "" : ",") << csv_field(k);
      first = false;
    }
    for (const Cell& cell : row.cells) {
      out << (first ? "" : ",") << csv_field(format_cell(cell));
      first = false;
    }
    out << '\n';
  }
  return out.str();
}

const Row* Table::find(const std::vector<std::string>& keys) const {
  for (const Row& row : rows) {
    if (row.keys == keys) return &row;
  }
  return nullptr;
}

const Table& Report::table(const std::string& name) const {
  for (const Table& t : tables) {
    if (t.name == name) return t;
  }
  throw ContractViolation("report " + kind + " has no table named " + name);
}

std::string Report::jsonl() const {
  std::string out;
  for (const nlohmann::json& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

Table table_from_records(const std::string& name, const std::vector<std::string>& key_columns,
                         const std::vector<std::string>& metric_columns, const std::vector<nlohmann::json>& records) {
  Table table{name, key_columns, metric_columns, {}};
  std::vector<std::vector<std::vector<double>>> values;
  for (const nlohmann::json& r : records) {
    if (!r.contains("table") || r["table"] != name) continue;
    const auto keys = r["row"].get<std::vector<std::string>>();
    require(keys.size() == key_columns.size(), "table_from_records: row key count mismatch in " + name);
    std::size_t idx = table.rows.size();
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      if (table.rows[i].keys == keys) {
        idx = i;
        break;
      }
    }
    if (idx == table.rows.size()) {
      table.rows.push_back({keys, {}});
      values.emplace_back(metric_columns.size());
    }
    const nlohmann::json& metrics = r["metrics"];
    for (std::size_t m = 0; m < metric_columns.size(); ++m) {
      auto it = metrics.find(metric_columns[m]);
      if (it != metrics.end() && !it->is_null()) values[idx][m].push_back(it->get<double>());
    }
  }
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (auto& v : values[i]) table.rows[i].cells.push_back(Cell::of(std::move(v)));
  }
  return table;
}

std::vector<std::string> check_report(const Report& report, double tol) {
  std::vector<std::string> problems;
  for (const Table& t : report.tables) {
    const Table again = table_from_records(t.name, t.key_columns, t.metric_columns, report.records);
    if (again.rows.size() != t.rows.size()) {
      problems.push_back(t.name + ": row count differs from records");
      continue;
    }
    for (const Row& row : t.rows) {
      const Row* other = again.find(row.keys);
      if (other == nullptr) {
        problems.push_back(t.name + ": row without records");
        continue;
      }
      for (std::size_t m = 0; m < row.cells.size(); ++m) {
        const Summary& a = row.cells[m].summary;
        const Summary& b = other->cells[m].summary;
        if (a.count != b.count || std::abs(a.mean - b.mean) > tol || std::abs(a.std - b.std) > tol) {
          std::string where;
          for (const auto& k : row.keys) where += k + "/";
          problems.push_back(t.name + ": " + where + t.metric_columns[m]);
        }
      }
    }
  }
  return problems;
}

nlohmann::json make_record(const std::string& table, const std::vector<std::string>& row,
                           const std::vector<std::pair<std::string, std::optional<double>>>& metrics) {
  nlohmann::json r;
  r["table"] = table;
  r["row"] = row;
  nlohmann::json m = nlohmann::json::object();
  for (const auto& [name, value] : metrics) {
    if (value) m[name] = *value;
    else m[name] = nullptr;
  }
  r["metrics"] = std::move(m);
  return r;
}

}  // namespace moco
