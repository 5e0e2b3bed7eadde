#include "helpers.hpp"

#include <sstream>

#include "rmstcea/csv.hpp"
#include "rmstcea/error.hpp"
#include "rmstcea/report.hpp"

using namespace rmstcea;

TEST_SUITE("io") {

TEST_CASE("RFC 4180 quoting") {
  std::istringstream in("a,b,c\r\n\"x,1\",\"say \"\"hi\"\"\",\"two\nlines\"\n3,,4\n");
  const auto rows = parse_csv(in);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].fields == std::vector<std::string>{"x,1", "say \"hi\"", "two\nlines"});
  CHECK(rows[1].line == 2);
  CHECK(rows[2].line == 4);
  CHECK(rows[2].fields == std::vector<std::string>{"3", "", "4"});
  std::istringstream bad("a\n\"open\n");
  CHECK_THROWS_AS(parse_csv(bad), RowError);
}

TEST_CASE("decimal parsing is strict") {
  double v = 0.0;
  CHECK(parse_double(" 1.5 ", v));
  CHECK(v == 1.5);
  CHECK(parse_double("+2e-3", v));
  CHECK(v == 0.002);
  CHECK_FALSE(parse_double("1.5x", v));
  CHECK_FALSE(parse_double("", v));
  CHECK_FALSE(parse_double("1,5", v));
}

TEST_CASE("counting-process ingestion with default covariates") {
  std::istringstream in("id,entry,exit,event,group,delay,age,score\n"
                        "a,0,1.5,1,1,0,60,0.2\n"
                        "b,0,0.4,0,1,0,55,1.1\n"
                        "b,0.4,2,1,2,0.4,55,1.1\n");
  const IngestResult r = ingest_csv(in, ColumnMapping{});
  CHECK(r.shape == InputShape::CountingProcess);
  CHECK(r.covariate_names == std::vector<std::string>{"age", "score"});
  REQUIRE(r.dataset.records.size() == 3);
  CHECK(r.dataset.records[2].stratum == 2);
  CHECK(r.dataset.records[2].delay == 0.4);
  CHECK(r.dataset.subject_count() == 2);
}

TEST_CASE("raw-history ingestion splits switchers") {
  std::istringstream in("id,time,event,delay,x\n"
                        "a,2.0,1,,0.5\n"
                        "b,3.0,0,0.7,1\n"
                        "c,1.0,yes,0,1\n");
  IngestOptions lenient;
  lenient.strict = false;
  const IngestResult r = ingest_csv(in, ColumnMapping{}, lenient);
  CHECK(r.shape == InputShape::RawHistory);
  REQUIRE(r.dataset.records.size() == 4);
  CHECK(r.dataset.records[1].exit == 0.7);
  CHECK(r.dataset.records[2].entry == 0.7);
  CHECK(r.dataset.records[3].stratum == 2);
  CHECK(r.dataset.records[3].event);
}

TEST_CASE("all malformed rows are reported with the first line number") {
  std::istringstream in("id,entry,exit,event,group,x\n"
                        "a,0,1,1,1,0\n"
                        "b,0,abc,1,1,0\n"
                        "c,0,1,2,1,0\n"
                        "d,0,1\n");
  try {
    ingest_csv(in, ColumnMapping{});
    FAIL("expected RowError");
  } catch (const RowError& e) {
    CHECK(e.line() == 3);
    const std::string msg = e.what();
    CHECK(msg.find("3 malformed") != std::string::npos);
    CHECK(msg.find("line 4") != std::string::npos);
    CHECK(msg.find("line 5") != std::string::npos);
  }
}

TEST_CASE("missing columns and strict events") {
  std::istringstream no_event("id,entry,exit,group\na,0,1,1\n");
  CHECK_THROWS_AS(ingest_csv(no_event, ColumnMapping{}), RowError);
  std::istringstream words("id,entry,exit,event,group\na,0,1,true,1\n");
  CHECK_THROWS_AS(ingest_csv(words, ColumnMapping{}), RowError);
  ColumnMapping m;
  m.covariates = {"nope"};
  m.covariates_given = true;
  std::istringstream ok("id,entry,exit,event,group\na,0,1,1,1\n");
  CHECK_THROWS_AS(ingest_csv(ok, m), RowError);
}

TEST_CASE("write then read round-trips a dataset exactly") {
  const Dataset d = testing::random_dataset(71, 50);
  std::ostringstream out;
  write_csv(out, d, {"x1", "x,2"});
  std::istringstream in(out.str());
  const IngestResult r = ingest_csv(in, ColumnMapping{});
  REQUIRE(r.dataset.records.size() == d.records.size());
  CHECK(r.covariate_names == std::vector<std::string>{"x1", "x,2"});
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    CHECK(r.dataset.records[i].exit == d.records[i].exit);
    CHECK(r.dataset.records[i].delay == d.records[i].delay);
    CHECK(r.dataset.records[i].covariates == d.records[i].covariates);
  }
}

TEST_CASE("structured report round-trips including non-finite numbers") {
  Report rep;
  rep.command = "rmst";
  rep.config = {{"scenario", "dly"}, {"a", "0.5"}};
  Table t;
  t.name = "rmst";
  t.columns = {{"group", "", CellKind::Text}, {"value", "years", CellKind::Number}};
  t.add_row({Cell("1"), Cell(1.0 / 3.0)});
  t.add_row({Cell("2"), Cell(std::nan(""))});
  t.add_row({Cell("3"), Cell(-HUGE_VAL)});
  rep.tables.push_back(t);
  rep.warnings = {"EmptyGrid: none"};
  const std::string text = emit_report(rep, ReportFormat::Jsonl);
  const Report back = parse_report(text);
  CHECK(back == rep);
  CHECK(emit_report(back, ReportFormat::Jsonl) == text);
  CHECK_THROWS_AS(t.add_row({Cell(1.0), Cell(2.0)}), InvariantError);
  CHECK_THROWS_AS(t.add_row({Cell("x")}), InvariantError);
}

TEST_CASE("human report layout") {
  Report rep;
  rep.command = "fit";
  Table t;
  t.name = "coefficients";
  t.columns = {{"term", "", CellKind::Text}, {"estimate", "", CellKind::Number}};
  t.add_row({Cell("x"), Cell(-1.23456789)});
  rep.tables.push_back(t);
  EmitOptions o;
  o.precision = 4;
  const std::string s = emit_report(rep, ReportFormat::Human, o);
  CHECK(s.find("[coefficients]") != std::string::npos);
  CHECK(s.find("-1.235") != std::string::npos);
  CHECK(s.find("(1)") != std::string::npos);
  CHECK(s.find("[warnings]") == std::string::npos);
  CHECK(parse_format("jsonl") == ReportFormat::Jsonl);
  CHECK_THROWS_AS(parse_format("xml"), PreconditionError);
}

}
