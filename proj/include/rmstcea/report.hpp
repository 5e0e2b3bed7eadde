#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace rmstcea {

enum class CellKind { Number, Text };

struct Column {
  std::string name;
  std::string units;  // "" for dimensionless; "-" for text columns
  CellKind kind = CellKind::Number;

  bool operator==(const Column&) const = default;
};

/// A number or a text value. Numbers compare bitwise so NaN cells round-trip as equal.
struct Cell {
  std::variant<double, std::string> value;

  Cell(double v) : value(v) {}
  Cell(std::string s) : value(std::move(s)) {}
  Cell(const char* s) : value(std::string(s)) {}

  bool is_number() const { return value.index() == 0; }
  double number() const { return std::get<double>(value); }
  const std::string& text() const { return std::get<std::string>(value); }
  bool operator==(const Cell& other) const;
};

struct Table {
  std::string name;
  std::vector<Column> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
  bool operator==(const Table&) const = default;
};

struct Report {
  std::string library_version;
  int format_version = 0;
  std::string command;
  std::string status = "ok";  // ok | failed
  std::string error;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<Table> tables;
  std::vector<std::string> warnings;

  Report();
  const Table* table(const std::string& name) const;
  bool operator==(const Report&) const = default;
};

enum class ReportFormat { Human, Jsonl };

ReportFormat parse_format(const std::string& name);

struct EmitOptions {
  int precision = 6;  // significant digits in the human format
};

/// Human format prints numbers with `precision` significant digits; the line-delimited
/// structured format is lossless (shortest round-trip doubles) and version-tagged.
std::string emit_report(const Report& report, ReportFormat format, const EmitOptions& opts = {});
void write_report(const Report& report, const std::string& path, ReportFormat format, const EmitOptions& opts = {});

/// Parses the structured format back into a Report.
Report parse_report(const std::string& jsonl);

}  // namespace rmstcea
