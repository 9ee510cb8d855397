#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "icsdetect/io.hpp"
#include "icsdetect/random.hpp"

using namespace ics;

namespace {

std::filesystem::path scratch(const std::string& name) {
  std::filesystem::path dir = std::filesystem::temp_directory_path() / "icsdetect_io_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("csv round trip preserves every value") {
  rng::Engine eng = rng::make_engine(101);
  Matrix x = rng::normal_matrix(40, 5, eng);
  x(0, 0) = 1e-17;
  x(1, 1) = -123456789.123456789;
  std::filesystem::path path = scratch("roundtrip.csv");
  io::write_csv(path, x);
  io::CsvData back = io::read_csv(path);
  CHECK(back.header.empty());
  REQUIRE(back.values.rows() == 40);
  REQUIRE(back.values.cols() == 5);
  CHECK(back.values == x);
}

TEST_CASE("header rows are detected and preserved") {
  std::filesystem::path path = scratch("header.csv");
  write_file(path, "alpha,beta,gamma\n1,2,3\n4,5,6\n");
  io::CsvData data = io::read_csv(path);
  REQUIRE(data.header.size() == 3);
  CHECK(data.header[1] == "beta");
  CHECK(data.values(1, 2) == 6.0);
}

TEST_CASE("malformed csv reports the offending line") {
  std::filesystem::path ragged = scratch("ragged.csv");
  write_file(ragged, "1,2,3\n4,5\n7,8,9\n");
  try {
    io::read_csv(ragged);
    FAIL("expected input_error");
  } catch (const input_error& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }

  std::filesystem::path bad_cell = scratch("badcell.csv");
  write_file(bad_cell, "1,2\n3,x\n");
  try {
    io::read_csv(bad_cell);
    FAIL("expected input_error");
  } catch (const input_error& e) {
    std::string msg = e.what();
    CHECK(msg.find(":2") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
  }

  std::filesystem::path missing = scratch("missing.csv");
  write_file(missing, "1,2\n3,\n");
  CHECK_THROWS_AS(io::read_csv(missing), input_error);

  CHECK_THROWS_AS(io::read_csv(scratch("does_not_exist.csv")), input_error);
}

TEST_CASE("pa table json round trip") {
  PaTable table;
  table.n = 1000;
  table.p = 3;
  table.pair = "cov-cov4";
  table.alpha = 0.05;
  table.reps = 500;
  table.seed = 424242;
  table.cutoffs = Vector{{1.31, 1.22, 1.18}};
  table.redraws = 1;

  auto j = io::to_json(table);
  PaTable back = io::pa_table_from_json(j);
  CHECK(back.n == table.n);
  CHECK(back.pair == table.pair);
  CHECK(back.cutoffs == table.cutoffs);
  CHECK(back.seed == table.seed);
  CHECK(back.redraws == 1);

  auto corrupted = j;
  corrupted["schema"] = "something-else";
  CHECK_THROWS_AS(io::pa_table_from_json(corrupted), input_error);
}

TEST_CASE("cutoff table json round trip through disk") {
  CutoffTable table;
  table.n = 500;
  table.p = 4;
  table.pair = "mcd-cov";
  table.k = 2;
  table.gamma = 0.02;
  table.reps = 200;
  table.seed = 7;
  table.cutoff = 11.75;

  std::filesystem::path path = scratch("cutoff.json");
  io::save_cutoff_table(path, table);
  auto back = io::load_cutoff_table(path);
  REQUIRE(back.has_value());
  CHECK(back->cutoff == table.cutoff);
  CHECK(back->pair == "mcd-cov");

  CHECK(!io::load_cutoff_table(scratch("nope.json")).has_value());
  write_file(scratch("garbage.json"), "{not json");
  CHECK(!io::load_cutoff_table(scratch("garbage.json")).has_value());
}

TEST_CASE("detection report serialization is deterministic") {
  DetectionReport report;
  report.method = "ics";
  report.pair = "cov-cov4";
  report.n = 3;
  report.p = 2;
  report.k_used = 1;
  report.cutoff = 9.5;
  report.distances_sq = Vector{{1.0, 12.0, 0.5}};
  report.flags = {false, true, false};
  report.eigenvalues = Vector{{1.9, 1.1}};
  SelectionOutcome sel;
  sel.k = 1;
  sel.method = SelectionMethod::Pa;
  sel.components.push_back({1, 1.9, 1.4, 0.05, true});
  sel.components.push_back({2, 1.1, 1.3, 0.025, false});
  report.selection = sel;

  std::string a = io::to_json(report).dump(2);
  std::string b = io::to_json(report).dump(2);
  CHECK(a == b);
  CHECK(a.find("\"flag_count\": 1") != std::string::npos);
  CHECK(a.find("\"schema\": \"icsdetect/detection-report/1\"") != std::string::npos);

  std::filesystem::path path = scratch("report.json");
  io::write_report_json(path, report);
  CHECK(read_file(path).find("cov-cov4") != std::string::npos);
  CHECK(!std::filesystem::exists(scratch("report.json.tmp")));

  std::filesystem::path dcsv = scratch("distances.csv");
  io::write_distances_csv(dcsv, report);
  std::string text = read_file(dcsv);
  CHECK(text.find("index,distance_sq,flagged") == 0);
  CHECK(text.find("1,12,1") != std::string::npos);
}

TEST_CASE("experiment csv blanks inapplicable fields") {
  simgen::CellResult clean;
  clean.case_id = 0;
  clean.p = 6;
  clean.pair = "cov-cov4";
  clean.method = "ics:pa";
  clean.mean_k = 0.08;
  clean.fp = 0.11;
  clean.reps = 100;
  clean.seed = 1;

  simgen::CellResult contaminated = clean;
  contaminated.case_id = 1;
  contaminated.tp = 96.5;
  contaminated.mean_k = 1.6;

  simgen::CellResult md;
  md.case_id = 1;
  md.p = 6;
  md.method = "md";
  md.tp = 94.0;
  md.fp = 1.2;
  md.reps = 100;
  md.seed = 1;

  std::string csv = io::experiment_csv({clean, contaminated, md});
  CHECK(csv.find("case,p,pair,method,mean_k,TP,FP,reps,seed\n") == 0);
  CHECK(csv.find("0,6,cov-cov4,ics:pa,0.08,,0.11,100,1\n") != std::string::npos);
  CHECK(csv.find("1,6,cov-cov4,ics:pa,1.6,96.5,0.11,100,1\n") != std::string::npos);
  CHECK(csv.find("1,6,,md,,94,1.2,100,1\n") != std::string::npos);
}

TEST_CASE("scree csv format") {
  std::string csv = io::scree_csv(Vector{{3.0, 1.5, 1.0}});
  CHECK(csv == "rank,eigenvalue\n1,3\n2,1.5\n3,1\n");
}

TEST_CASE("format_double round trips through parsing") {
  rng::Engine eng = rng::make_engine(103);
  for (int i = 0; i < 200; ++i) {
    double v = rng::standard_normal(eng) * std::pow(10.0, static_cast<double>(i % 20) - 10.0);
    CHECK(std::stod(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.0) == "0");
  CHECK(io::format_double(1.5) == "1.5");
}

}  // TEST_SUITE
