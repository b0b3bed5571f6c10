#include "dynborrow/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <stdexcept>

namespace dynborrow {
namespace {

using nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

json cell_to_json(const Cell& c) {
  return std::visit(Overloaded{
                        [](std::monostate) { return json(nullptr); },
                        [](bool b) { return json(b); },
                        [](std::int64_t i) { return json(i); },
                        [](double d) { return std::isfinite(d) ? json(d) : json(nullptr); },
                        [](const std::string& s) { return json(s); },
                    },
                    c);
}

Cell cell_from_json(const json& j) {
  if (j.is_null()) return std::monostate{};
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw std::invalid_argument("report JSON: unsupported value " + j.dump());
}

std::string csv_field(const Cell& c) {
  return std::visit(Overloaded{
                        [](std::monostate) { return std::string(); },
                        [](bool b) { return std::string(b ? "true" : "false"); },
                        [](std::int64_t i) { return std::to_string(i); },
                        [](double d) { return std::isfinite(d) ? format_number(d) : std::string(); },
                        [](const std::string& s) {
                          if (s.find_first_of(",\"\n") == std::string::npos) return s;
                          std::string q = "\"";
                          for (char ch : s) {
                            if (ch == '"') q += '"';
                            q += ch;
                          }
                          return q + "\"";
                        },
                    },
                    c);
}

std::string display_field(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    return std::isfinite(*d) ? fmt::format("{:.3f}", *d) : std::string("-");
  }
  if (std::holds_alternative<std::monostate>(c)) return "-";
  return csv_field(c);
}

}  // namespace

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw std::logic_error("table " + name + ": row has " + std::to_string(row.size()) +
                           " cells for " + std::to_string(columns.size()) + " columns");
  }
  rows.push_back(std::move(row));
}

void Report::set(const std::string& key, Cell value) {
  for (auto& [k, v] : summary) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  summary.emplace_back(key, std::move(value));
}

const Cell& Report::get(const std::string& key) const {
  for (const auto& [k, v] : summary) {
    if (k == key) return v;
  }
  throw std::out_of_range("report has no summary key '" + key + "'");
}

const Table& Report::table(const std::string& name) const {
  for (const auto& t : tables) {
    if (t.name == name) return t;
  }
  throw std::out_of_range("report has no table '" + name + "'");
}

std::string format_number(double x) { return fmt::format("{:.17g}", x); }

std::string to_json_text(const Report& report) {
  json doc;
  doc["command"] = report.command;
  json summary = json::array();
  for (const auto& [k, v] : report.summary) summary.push_back({{"key", k}, {"value", cell_to_json(v)}});
  doc["summary"] = summary;
  json tables = json::array();
  for (const auto& t : report.tables) {
    json rows = json::array();
    for (const auto& row : t.rows) {
      json r = json::array();
      for (const auto& c : row) r.push_back(cell_to_json(c));
      rows.push_back(r);
    }
    tables.push_back({{"name", t.name}, {"columns", t.columns}, {"rows", rows}});
  }
  doc["tables"] = tables;
  doc["warnings"] = report.warnings;
  return doc.dump(2) + "\n";
}

Report report_from_json_text(const std::string& text) {
  const json doc = json::parse(text);
  Report r;
  r.command = doc.at("command").get<std::string>();
  for (const auto& e : doc.at("summary")) {
    r.summary.emplace_back(e.at("key").get<std::string>(), cell_from_json(e.at("value")));
  }
  for (const auto& t : doc.at("tables")) {
    Table table;
    table.name = t.at("name").get<std::string>();
    table.columns = t.at("columns").get<std::vector<std::string>>();
    for (const auto& row : t.at("rows")) {
      std::vector<Cell> cells;
      for (const auto& c : row) cells.push_back(cell_from_json(c));
      table.add_row(std::move(cells));
    }
    r.tables.push_back(std::move(table));
  }
  r.warnings = doc.at("warnings").get<std::vector<std::string>>();
  return r;
}

std::string table_to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ',';
    out += csv_field(table.columns[i]);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_field(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string summary_to_csv(const Report& report) {
  Table t{"summary", {"key", "value"}, {}};
  for (const auto& [k, v] : report.summary) t.add_row({k, v});
  for (const auto& w : report.warnings) t.add_row({std::string("warning"), w});
  return table_to_csv(t);
}

std::vector<std::filesystem::path> write_report(const Report& report, OutputFormat format,
                                                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto write = [&](const std::filesystem::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << body;
    written.push_back(p);
  };
  if (format == OutputFormat::Json) {
    write(dir / (report.command + ".json"), to_json_text(report));
  } else {
    write(dir / (report.command + "_summary.csv"), summary_to_csv(report));
    for (const auto& t : report.tables) {
      write(dir / (report.command + "_" + t.name + ".csv"), table_to_csv(t));
    }
  }
  return written;
}

void print_report(const Report& report, OutputFormat format, std::ostream& out) {
  if (format == OutputFormat::Json) {
    out << to_json_text(report);
    return;
  }
  out << "# summary\n" << summary_to_csv(report);
  for (const auto& t : report.tables) out << "\n# " << t.name << "\n" << table_to_csv(t);
}

void print_display(const Report& report, std::ostream& out) {
  std::size_t width = 0;
  for (const auto& [k, v] : report.summary) width = std::max(width, k.size());
  out << report.command << "\n";
  for (const auto& [k, v] : report.summary) {
    out << "  " << k << std::string(width - k.size() + 2, ' ') << display_field(v) << "\n";
  }
  for (const auto& w : report.warnings) out << "  warning: " << w << "\n";
}

}  // namespace dynborrow
