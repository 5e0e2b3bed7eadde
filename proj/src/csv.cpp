#include "rmstcea/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "rmstcea/error.hpp"

namespace rmstcea {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool is_missing(const std::string& s) {
  const std::string t = lower(trim(s));
  return t.empty() || t == "na" || t == "nan" || t == "null";
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<CsvRow> parse_csv(std::istream& in) {
  std::vector<CsvRow> rows;
  std::string field;
  CsvRow row;
  std::size_t line = 1;
  row.line = 1;
  bool quoted = false, field_started = false, any = false;
  char c;
  auto end_field = [&] {
    row.fields.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    const bool blank = row.fields.size() == 1 && row.fields[0].empty();
    if (!blank) rows.push_back(std::move(row));
    row = CsvRow{};
    row.line = line;
  };
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      if (in.peek() == '\n') continue;
      ++line;
      end_row();
    } else if (c == '\n') {
      ++line;
      end_row();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) throw RowError("unterminated quoted field", row.line);
  if (any && (!field.empty() || !row.fields.empty())) end_row();
  return rows;
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* b = t.data();
  const char* e = t.data() + t.size();
  if (*b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

IngestResult ingest_csv(std::istream& in, const ColumnMapping& mapping, const IngestOptions& opts) {
  const std::vector<CsvRow> rows = parse_csv(in);
  if (rows.empty()) throw RowError("input is empty (a header row is required)", 1);
  const CsvRow& header = rows.front();
  std::map<std::string, std::size_t> col;
  for (std::size_t k = 0; k < header.fields.size(); ++k) {
    const std::string name = trim(header.fields[k]);
    if (!col.emplace(name, k).second) throw RowError("duplicate column '" + name + "'", header.line);
  }
  auto has = [&](const std::string& n) { return col.count(n) > 0; };
  auto need = [&](const std::string& n) {
    auto it = col.find(n);
    if (it == col.end()) throw RowError("missing column '" + n + "'", header.line);
    return it->second;
  };

  IngestResult res;
  res.shape = opts.shape;
  if (res.shape == InputShape::Auto) {
    res.shape = has(mapping.entry) && has(mapping.exit) ? InputShape::CountingProcess : InputShape::RawHistory;
  }
  const bool counting = res.shape == InputShape::CountingProcess;

  const std::size_t c_id = need(mapping.id);
  const std::size_t c_event = need(mapping.event);
  std::size_t c_entry = 0, c_exit = 0, c_group = 0, c_time = 0, c_delay = 0;
  const bool has_delay = has(mapping.delay);
  const bool has_group = has(mapping.group);
  if (counting) {
    c_entry = need(mapping.entry);
    c_exit = need(mapping.exit);
    c_group = need(mapping.group);
  } else {
    c_time = need(mapping.time);
  }
  if (has_delay) c_delay = col.at(mapping.delay);
  else if (!counting) need(mapping.delay);

  std::vector<std::size_t> c_cov;
  if (mapping.covariates_given) {
    for (const auto& n : mapping.covariates) c_cov.push_back(need(n));
    res.covariate_names = mapping.covariates;
  } else {
    std::vector<std::string> mapped = {mapping.id, mapping.event, mapping.delay};
    if (counting) {
      mapped.insert(mapped.end(), {mapping.entry, mapping.exit, mapping.group});
    } else {
      mapped.insert(mapped.end(), {mapping.time});
      if (has_group) mapped.push_back(mapping.group);
    }
    for (std::size_t k = 0; k < header.fields.size(); ++k) {
      const std::string name = trim(header.fields[k]);
      if (std::find(mapped.begin(), mapped.end(), name) != mapped.end()) continue;
      c_cov.push_back(k);
      res.covariate_names.push_back(name);
    }
  }

  res.dataset.p = c_cov.size();
  res.dataset.eta = opts.eta;
  std::vector<std::pair<std::size_t, std::string>> issues;

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    ++res.rows;
    if (row.fields.size() != header.fields.size()) {
      issues.emplace_back(row.line, "expected " + std::to_string(header.fields.size()) + " fields, found " +
                                        std::to_string(row.fields.size()));
      continue;
    }
    std::string problem;
    auto num = [&](std::size_t k, const std::string& name) {
      double v = 0.0;
      if (!parse_double(row.fields[k], v)) {
        if (problem.empty()) problem = "column '" + name + "': cannot parse '" + row.fields[k] + "' as a number";
      }
      return v;
    };
    auto flag = [&](std::size_t k, const std::string& name) {
      const std::string t = lower(trim(row.fields[k]));
      if (t == "1") return true;
      if (t == "0") return false;
      if (!opts.strict) {
        if (t == "true" || t == "yes") return true;
        if (t == "false" || t == "no") return false;
      }
      if (problem.empty()) problem = "column '" + name + "': event must be 0 or 1, found '" + row.fields[k] + "'";
      return false;
    };

    const std::string id = trim(row.fields[c_id]);
    if (id.empty()) problem = "empty subject id";
    const bool event = flag(c_event, mapping.event);
    std::vector<double> x;
    for (std::size_t q = 0; q < c_cov.size(); ++q) x.push_back(num(c_cov[q], res.covariate_names[q]));

    if (counting) {
      SubjectRecord rec;
      rec.subject_id = id;
      rec.entry = num(c_entry, mapping.entry);
      rec.exit = num(c_exit, mapping.exit);
      rec.event = event;
      const double g = num(c_group, mapping.group);
      rec.stratum = static_cast<int>(g);
      if (problem.empty() && (g != static_cast<double>(rec.stratum) || rec.stratum < 1)) {
        problem = "column '" + mapping.group + "': group must be a positive integer";
      }
      rec.delay = has_delay && !is_missing(row.fields[c_delay]) ? num(c_delay, mapping.delay) : 0.0;
      rec.covariates = std::move(x);
      if (problem.empty()) res.dataset.records.push_back(std::move(rec));
    } else {
      RawSubject raw;
      raw.subject_id = id;
      raw.followup_end = num(c_time, mapping.time);
      raw.died = event;
      if (!is_missing(row.fields[c_delay])) raw.switch_time = num(c_delay, mapping.delay);
      raw.covariates = std::move(x);
      if (problem.empty()) {
        try {
          for (auto& rec : split_switcher_history(raw)) res.dataset.records.push_back(std::move(rec));
        } catch (const PreconditionError& e) {
          problem = e.what();
        }
      }
    }
    if (!problem.empty()) issues.emplace_back(row.line, problem);
  }

  if (!issues.empty()) {
    std::ostringstream os;
    os << issues.size() << " malformed row(s):";
    const std::size_t shown = std::min<std::size_t>(issues.size(), 20);
    for (std::size_t k = 0; k < shown; ++k) os << "\n  line " << issues[k].first << ": " << issues[k].second;
    if (shown < issues.size()) os << "\n  ...";
    throw RowError(os.str(), issues.front().first);
  }
  if (res.dataset.records.empty()) throw RowError("input has a header but no data rows", header.line);
  return res;
}

IngestResult ingest_csv(const std::string& path, const ColumnMapping& mapping, const IngestOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot open input file '" + path + "'");
  return ingest_csv(in, mapping, opts);
}

void write_csv(std::ostream& out, const Dataset& dataset, const std::vector<std::string>& covariate_names) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  out << "id,entry,exit,event,group,delay";
  for (const auto& n : covariate_names) out << ',' << quote(n);
  out << '\n';
  for (const auto& r : dataset.records) {
    out << quote(r.subject_id) << ',' << fmt17(r.entry) << ',' << fmt17(r.exit) << ',' << (r.event ? 1 : 0) << ','
        << r.stratum << ',' << fmt17(r.delay);
    for (double v : r.covariates) out << ',' << fmt17(v);
    out << '\n';
  }
}

}  // namespace rmstcea
