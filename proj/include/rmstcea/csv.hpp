#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rmstcea/data_model.hpp"

namespace rmstcea {

enum class InputShape { Auto, CountingProcess, RawHistory };

/// Header names for each role. Covariates default to every unmapped column.
struct ColumnMapping {
  std::string id = "id";
  std::string entry = "entry";
  std::string exit = "exit";
  std::string event = "event";
  std::string group = "group";
  std::string delay = "delay";
  std::string time = "time";  // raw-history follow-up end
  std::vector<std::string> covariates;
  bool covariates_given = false;
};

struct IngestOptions {
  InputShape shape = InputShape::Auto;
  bool strict = true;  // event must be 0/1; lenient also takes true/false/yes/no
  double eta = 0.0;
};

struct IngestResult {
  Dataset dataset;
  InputShape shape = InputShape::CountingProcess;
  std::vector<std::string> covariate_names;
  std::size_t rows = 0;
};

/// RFC 4180 records: quoted fields, doubled quotes, embedded separators and newlines.
/// Each row carries the 1-based line number it started on.
struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

std::vector<CsvRow> parse_csv(std::istream& in);

/// Locale-independent decimal parse of the whole field; false on trailing junk.
bool parse_double(const std::string& text, double& out);

/// Reads a counting-process or raw-history CSV. Every malformed row is reported in
/// one RowError whose line() is the first offending line.
IngestResult ingest_csv(std::istream& in, const ColumnMapping& mapping, const IngestOptions& opts = {});
IngestResult ingest_csv(const std::string& path, const ColumnMapping& mapping, const IngestOptions& opts = {});

/// Writes counting-process form with 17 significant digits.
void write_csv(std::ostream& out, const Dataset& dataset, const std::vector<std::string>& covariate_names);

}  // namespace rmstcea
