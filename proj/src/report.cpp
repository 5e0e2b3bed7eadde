#include "rmstcea/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rmstcea/error.hpp"
#include "rmstcea/version.hpp"

namespace rmstcea {

namespace {

using nlohmann::json;

constexpr const char* kFormatTag = "rmstcea-report";

json number_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  throw PreconditionError("report: unexpected numeric token '" + s + "'");
}

std::string human_number(double v, int precision) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

}  // namespace

bool Cell::operator==(const Cell& other) const {
  if (value.index() != other.value.index()) return false;
  if (is_number()) {
    const double a = number(), b = other.number();
    return std::memcmp(&a, &b, sizeof a) == 0 || (std::isnan(a) && std::isnan(b)) || a == b;
  }
  return text() == other.text();
}

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw InvariantError("table '" + name + "': row width mismatch");
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (row[k].is_number() != (columns[k].kind == CellKind::Number)) {
      throw InvariantError("table '" + name + "': cell type mismatch in column '" + columns[k].name + "'");
    }
  }
  rows.push_back(std::move(row));
}

Report::Report() : library_version(kVersion), format_version(kReportFormatVersion) {}

const Table* Report::table(const std::string& name) const {
  for (const auto& t : tables)
    if (t.name == name) return &t;
  return nullptr;
}

ReportFormat parse_format(const std::string& name) {
  if (name == "human" || name == "text") return ReportFormat::Human;
  if (name == "jsonl" || name == "json") return ReportFormat::Jsonl;
  throw PreconditionError("unknown report format '" + name + "' (expected human or jsonl)");
}

std::string emit_report(const Report& report, ReportFormat format, const EmitOptions& opts) {
  std::ostringstream os;
  if (format == ReportFormat::Jsonl) {
    json head = {{"type", "header"},
                 {"format", kFormatTag},
                 {"format_version", report.format_version},
                 {"library_version", report.library_version},
                 {"command", report.command},
                 {"status", report.status},
                 {"error", report.error}};
    os << head.dump() << '\n';
    json cfg = json::array();
    for (const auto& [k, v] : report.config) cfg.push_back(json::array({k, v}));
    os << json{{"type", "config"}, {"entries", cfg}}.dump() << '\n';
    for (const auto& t : report.tables) {
      json cols = json::array();
      for (const auto& c : t.columns) {
        cols.push_back({{"name", c.name}, {"units", c.units}, {"kind", c.kind == CellKind::Number ? "number" : "text"}});
      }
      json rows = json::array();
      for (const auto& r : t.rows) {
        json jr = json::array();
        for (const auto& c : r) jr.push_back(c.is_number() ? number_to_json(c.number()) : json(c.text()));
        rows.push_back(std::move(jr));
      }
      os << json{{"type", "table"}, {"name", t.name}, {"columns", cols}, {"rows", rows}}.dump() << '\n';
    }
    for (const auto& w : report.warnings) os << json{{"type", "warning"}, {"message", w}}.dump() << '\n';
    return os.str();
  }

  os << "rmstcea " << report.library_version << " report (format " << report.format_version << ")\n";
  os << "command: " << report.command << "\n";
  os << "status: " << report.status << "\n";
  if (!report.error.empty()) os << "error: " << report.error << "\n";
  if (!report.config.empty()) {
    os << "\n[config]\n";
    std::size_t w = 0;
    for (const auto& kv : report.config) w = std::max(w, kv.first.size());
    for (const auto& [k, v] : report.config) os << "  " << k << std::string(w - k.size(), ' ') << " = " << v << "\n";
  }
  for (const auto& t : report.tables) {
    os << "\n[" << t.name << "]\n";
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> head, units;
    for (const auto& c : t.columns) {
      head.push_back(c.name);
      units.push_back(c.kind == CellKind::Text ? "" : (c.units.empty() ? "1" : c.units));
    }
    for (const auto& r : t.rows) {
      std::vector<std::string> line;
      for (const auto& c : r) line.push_back(c.is_number() ? human_number(c.number(), opts.precision) : c.text());
      cells.push_back(std::move(line));
    }
    std::vector<std::size_t> width(head.size());
    for (std::size_t k = 0; k < head.size(); ++k) {
      width[k] = std::max(head[k].size(), units[k].size() + 2);
      for (const auto& line : cells) width[k] = std::max(width[k], line[k].size());
    }
    auto emit_line = [&](const std::vector<std::string>& line, bool brackets) {
      std::string s = " ";
      for (std::size_t k = 0; k < line.size(); ++k) {
        std::string v = brackets && !line[k].empty() ? "(" + line[k] + ")" : line[k];
        s += " " + std::string(width[k] - v.size(), ' ') + v;
      }
      os << s << "\n";
    };
    emit_line(head, false);
    emit_line(units, true);
    for (const auto& line : cells) emit_line(line, false);
  }
  if (!report.warnings.empty()) {
    os << "\n[warnings]\n";
    for (const auto& w : report.warnings) os << "  - " << w << "\n";
  }
  return os.str();
}

void write_report(const Report& report, const std::string& path, ReportFormat format, const EmitOptions& opts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PreconditionError("cannot write report to '" + path + "'");
  out << emit_report(report, format, opts);
  if (!out) throw PreconditionError("failed writing report to '" + path + "'");
}

Report parse_report(const std::string& jsonl) {
  Report rep;
  std::istringstream in(jsonl);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string type = j.at("type").get<std::string>();
    if (type == "header") {
      if (j.at("format").get<std::string>() != kFormatTag) throw PreconditionError("not an rmstcea report");
      rep.format_version = j.at("format_version").get<int>();
      rep.library_version = j.at("library_version").get<std::string>();
      rep.command = j.at("command").get<std::string>();
      rep.status = j.at("status").get<std::string>();
      rep.error = j.at("error").get<std::string>();
      header = true;
    } else if (type == "config") {
      for (const auto& e : j.at("entries")) rep.config.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    } else if (type == "table") {
      Table t;
      t.name = j.at("name").get<std::string>();
      for (const auto& c : j.at("columns")) {
        t.columns.push_back({c.at("name").get<std::string>(), c.at("units").get<std::string>(),
                             c.at("kind").get<std::string>() == "number" ? CellKind::Number : CellKind::Text});
      }
      for (const auto& r : j.at("rows")) {
        std::vector<Cell> row;
        for (std::size_t k = 0; k < r.size(); ++k) {
          if (t.columns.at(k).kind == CellKind::Number) row.emplace_back(number_from_json(r[k]));
          else row.emplace_back(r[k].get<std::string>());
        }
        t.add_row(std::move(row));
      }
      rep.tables.push_back(std::move(t));
    } else if (type == "warning") {
      rep.warnings.push_back(j.at("message").get<std::string>());
    } else {
      throw PreconditionError("report: unknown record type '" + type + "'");
    }
  }
  if (!header) throw PreconditionError("report: missing header line");
  return rep;
}

}  // namespace rmstcea
