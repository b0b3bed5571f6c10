#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dynborrow/config.hpp"

namespace dynborrow {

/// A report value. std::monostate is an absent value (e.g. a boundary that
/// was not attained) and is written as an empty CSV field or JSON null.
using Cell = std::variant<std::monostate, bool, std::int64_t, double, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);

  bool operator==(const Table&) const = default;
};

struct Report {
  std::string command;
  std::vector<std::pair<std::string, Cell>> summary;
  std::vector<Table> tables;
  std::vector<std::string> warnings;

  void set(const std::string& key, Cell value);
  const Cell& get(const std::string& key) const;
  const Table& table(const std::string& name) const;

  bool operator==(const Report&) const = default;
};

/// 17 significant digits, enough to round-trip any double.
std::string format_number(double x);

std::string to_json_text(const Report& report);
Report report_from_json_text(const std::string& text);

/// One CSV document per table; the summary is a two-column key,value table.
std::string table_to_csv(const Table& table);
std::string summary_to_csv(const Report& report);

/// Files written: <command>.json, or <command>_summary.csv plus
/// <command>_<table>.csv per table. Returns the paths in write order.
std::vector<std::filesystem::path> write_report(const Report& report, OutputFormat format,
                                                const std::filesystem::path& dir);

/// Whole report to a stream in the requested format.
void print_report(const Report& report, OutputFormat format, std::ostream& out);

/// Summary rounded to 3 decimals for reading at a terminal.
void print_display(const Report& report, std::ostream& out);

}  // namespace dynborrow
