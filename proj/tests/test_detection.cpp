#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "icsdetect/detection.hpp"
#include "icsdetect/distributions.hpp"
#include "icsdetect/random.hpp"
#include "icsdetect/simgen.hpp"

using namespace ics;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  std::filesystem::path dir = std::filesystem::temp_directory_path() / ("icsdetect_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void check_flag_consistency(const DetectionReport& report) {
  REQUIRE(report.flags.size() == static_cast<std::size_t>(report.distances_sq.size()));
  for (Index i = 0; i < report.distances_sq.size(); ++i) {
    bool expected = report.cutoff ? report.distances_sq[i] > *report.cutoff : false;
    CHECK(report.flags[static_cast<std::size_t>(i)] == expected);
  }
}

}  // namespace

TEST_SUITE("detection") {

TEST_CASE("selection rule parsing") {
  CHECK(SelectionRule::parse("pa").kind == SelectionRule::Kind::Pa);
  CHECK(SelectionRule::parse("da").test == NormalityTest::DAgostino);
  CHECK(SelectionRule::parse("bs").test == NormalityTest::BonettSeier);
  SelectionRule fixed = SelectionRule::parse("fixed:3");
  CHECK(fixed.kind == SelectionRule::Kind::Fixed);
  CHECK(fixed.fixed_k == 3);
  CHECK(fixed.tag() == "fixed:3");
  CHECK(SelectionRule::parse("none").kind == SelectionRule::Kind::None);
  CHECK_THROWS_AS(SelectionRule::parse("fixed:x"), input_error);
  CHECK_THROWS_AS(SelectionRule::parse("quantum"), input_error);
}

TEST_CASE("ics_cutoff is deterministic and grows with k") {
  ScatterPair pair = parse_pair("cov-cov4");
  CutoffTable a = ics_cutoff(200, 4, pair, 1, 0.02, 100, 3);
  CutoffTable b = ics_cutoff(200, 4, pair, 1, 0.02, 100, 3);
  CHECK(a.cutoff == b.cutoff);

  CutoffTable k3 = ics_cutoff(200, 4, pair, 3, 0.02, 100, 3);
  CutoffTable k4 = ics_cutoff(200, 4, pair, 4, 0.02, 100, 3);
  CHECK(a.cutoff < k3.cutoff);
  CHECK(k3.cutoff < k4.cutoff);
  CHECK(a.cutoff > 0);

  CutoffTable threaded = ics_cutoff(200, 4, pair, 1, 0.02, 100, 3, 3);
  CHECK(threaded.cutoff == a.cutoff);
}

TEST_CASE("null data is flagged at roughly the nominal rate") {
  ScatterPair pair = parse_pair("cov-cov4");
  CutoffTable table = ics_cutoff(500, 4, pair, 2, 0.02, 200, 17);
  rng::Engine eng = rng::make_engine(18);
  int flagged = 0, total = 0;
  for (int rep = 0; rep < 40; ++rep) {
    Matrix x = rng::normal_matrix(500, 4, eng);
    IcsResult res = invariant_coordinates(x, pair);
    Vector d = ics_distance_sq(res, 2);
    for (Index i = 0; i < d.size(); ++i) {
      ++total;
      if (d[i] > table.cutoff) ++flagged;
    }
  }
  double rate = static_cast<double>(flagged) / total;
  CHECK(rate > 0.012);
  CHECK(rate < 0.028);
}

TEST_CASE("detect_ics pipeline on a planted mean-shift cluster") {
  simgen::CaseParams params{1, 600, 6, 0.02};
  simgen::LabeledData data = simgen::generate_case(params, 71);

  TableStore tables;
  DetectOptions opts;
  opts.pa_reps = 200;
  opts.cutoff_reps = 100;
  opts.seed = 4;
  DetectionReport report = detect_ics(data.x, parse_pair("cov-cov4"), SelectionRule::parse("pa"),
                                      opts, tables);

  CHECK(report.method == "ics");
  CHECK(report.k_used.value_or(0) >= 1);
  check_flag_consistency(report);
  simgen::TpFp rates = simgen::tp_fp(report.flags, data.labels);
  CHECK(*rates.tp_percent >= 90.0);
  CHECK(rates.fp_percent <= 2.0);
  REQUIRE(report.selection.has_value());
  CHECK(report.selection->k == *report.k_used);
  CHECK(report.component_correlations.rows() == *report.k_used);
  CHECK(report.component_correlations.cols() == 6);
  // the leading invariant component tracks the shifted first variable
  CHECK(std::abs(report.component_correlations(0, 0)) > 0.5);
}

TEST_CASE("detect_ics reports no cutoff when nothing is selected") {
  rng::Engine eng = rng::make_engine(72);
  Matrix x = rng::normal_matrix(500, 4, eng);
  TableStore tables;
  DetectOptions opts;
  opts.pa_reps = 300;
  opts.cutoff_reps = 100;
  DetectionReport report =
      detect_ics(x, parse_pair("cov-cov4"), SelectionRule::parse("pa"), opts, tables);
  if (report.k_used.value_or(0) == 0) {
    CHECK(!report.cutoff.has_value());
    CHECK(report.flag_count() == 0);
    CHECK(report.distances_sq.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("fixed full-dimension ICS matches the Mahalanobis detector") {
  rng::Engine eng = rng::make_engine(73);
  Matrix x = rng::normal_matrix(400, 5, eng);
  x.col(2) = x.col(2).array() * 2.0 + 1.0;

  TableStore tables;
  DetectOptions opts;
  opts.cutoff_reps = 100;
  DetectionReport ics_full =
      detect_ics(x, parse_pair("cov-cov4"), SelectionRule::parse("none"), opts, tables);
  DetectionReport md = detect_md(x, 0.02);

  REQUIRE(ics_full.k_used.value_or(0) == 5);
  double worst = 0;
  for (Index i = 0; i < 400; ++i)
    worst = std::max(worst, std::abs(ics_full.distances_sq[i] - md.distances_sq[i]) /
                                std::max(md.distances_sq[i], 1e-12));
  CHECK(worst <= 1e-8);

  // same flags once the chi-square cutoff convention is forced on both
  for (Index i = 0; i < 400; ++i)
    CHECK((ics_full.distances_sq[i] > *md.cutoff) ==
          (md.distances_sq[i] > *md.cutoff));
}

TEST_CASE("detect_md basics") {
  rng::Engine eng = rng::make_engine(74);
  Matrix x = rng::normal_matrix(2000, 6, eng);
  // plant the exact column means as an observation; it can never be flagged
  x.row(0) = x.bottomRows(1999).colwise().mean();
  DetectionReport report = detect_md(x, 0.02);
  CHECK(report.flags[0] == false);
  check_flag_consistency(report);
  double rate = static_cast<double>(report.flag_count()) / 2000.0;
  CHECK(rate > 0.005);
  CHECK(rate < 0.05);
}

TEST_CASE("detect_rd resists the shifted cluster") {
  simgen::CaseParams params{1, 600, 6, 0.02};
  simgen::LabeledData data = simgen::generate_case(params, 75);
  DetectionReport report = detect_rd(data.x, 0.02, ScatterSpec::mcd(9));
  simgen::TpFp rates = simgen::tp_fp(report.flags, data.labels);
  CHECK(*rates.tp_percent >= 90.0);
  CHECK(rates.fp_percent < 5.0);
  check_flag_consistency(report);
}

TEST_CASE("detect_pca on data confined to a subspace flags through scores only") {
  rng::Engine eng = rng::make_engine(76);
  const Index n = 300, p = 4;
  Matrix basis = rng::normal_matrix(p, p - 1, eng);
  Matrix latent = rng::normal_matrix(n, p - 1, eng);
  latent.row(0) *= 8.0;  // one extreme observation inside the subspace
  Matrix x = latent * basis.transpose();

  DetectionReport report = detect_pca(x, p - 1, false);
  CHECK(report.pca_orth_dist.maxCoeff() < 1e-8);
  for (std::size_t i = 0; i < report.flags.size(); ++i)
    if (report.flags[i])
      CHECK(report.pca_score_dist[static_cast<Index>(i)] > *report.pca_sd_cutoff);
  CHECK(report.flags[0]);
}

TEST_CASE("standardization changes PCA flags on anisotropic data") {
  simgen::CaseParams params{1, 500, 6, 0.02};
  simgen::LabeledData data = simgen::generate_case(params, 77);
  Matrix scaled = data.x;
  scaled.col(5) *= 120.0;  // one variable dominates the unstandardized analysis

  DetectionReport plain = detect_pca(scaled, 1, false);
  DetectionReport standardized = detect_pca(scaled, 1, true);
  CHECK(plain.flags != standardized.flags);

  Matrix constant = scaled;
  constant.col(2).setZero();
  CHECK_THROWS_AS(detect_pca(constant, 1, true), numeric_error);
  CHECK_THROWS_AS(detect_pca(scaled, 0, false), std::invalid_argument);
  CHECK_THROWS_AS(detect_pca(scaled, 6, false), std::invalid_argument);
}

TEST_CASE("best_selection follows the lexicographic rule") {
  std::vector<bool> labels{true, true, false, false, false};

  auto detector = [&](Index k) {
    DetectionReport r;
    r.method = "synthetic";
    r.n = 5;
    r.distances_sq = Vector::Zero(5);
    r.cutoff = 1.0;
    switch (k) {
      case 1: r.flags = {true, true, true, false, false}; break;   // ntp 2, nfp 1
      case 2: r.flags = {true, true, false, false, false}; break;  // ntp 2, nfp 0  <- best
      case 3: r.flags = {true, true, false, true, false}; break;   // ntp 2, nfp 1
      default: r.flags = {true, false, false, false, false}; break;
    }
    r.k_used = k;
    return r;
  };

  BestSelection best = best_selection(labels, 4, detector);
  CHECK(best.k == 2);
  CHECK(best.ntp == 2);
  CHECK(best.nfp == 0);

  // perfect at k=1 wins immediately and ties prefer the smaller k
  auto perfect = [&](Index k) {
    DetectionReport r;
    r.n = 5;
    r.distances_sq = Vector::Zero(5);
    r.flags = {true, true, false, false, false};
    r.k_used = k;
    return r;
  };
  CHECK(best_selection(labels, 4, perfect).k == 1);
}

TEST_CASE("best_selection recovers the planted dimension on two-cluster data") {
  TableStore tables;
  int in_range = 0;
  const int runs = 10;
  for (int run = 0; run < runs; ++run) {
    simgen::LabeledData data = simgen::generate_case({3, 600, 6, 0.02}, 900 + run);
    const Matrix& x = data.x;
    ScatterPair pair = parse_pair("cov-cov4");
    IcsResult res = invariant_coordinates(x, pair);
    auto detector = [&](Index k) {
      CutoffTable table = tables.cutoff(600, 6, pair, k, 0.02, 100, 71);
      DetectionReport r;
      r.method = "ics";
      r.n = 600;
      r.p = 6;
      r.k_used = k;
      r.cutoff = table.cutoff;
      r.distances_sq = ics_distance_sq(res, k);
      r.flags.resize(600);
      for (Index i = 0; i < 600; ++i) r.flags[static_cast<std::size_t>(i)] = r.distances_sq[i] > table.cutoff;
      return r;
    };
    BestSelection best = best_selection(data.labels, 6, detector);
    if (best.k == 2 || best.k == 3) ++in_range;
  }
  CHECK(in_range >= 9);  // ground truth q = 2
}

TEST_CASE("table store caches, persists and refuses mismatched keys") {
  std::filesystem::path dir = fresh_dir("tables");
  ScatterPair pair = parse_pair("cov-cov4");
  {
    TableStore store(dir);
    PaTable first = store.pa(300, 4, pair, 0.05, 120, 3);
    CHECK(store.builds() == 1);
    PaTable again = store.pa(300, 4, pair, 0.05, 120, 3);
    CHECK(store.hits() == 1);
    CHECK(first.cutoffs == again.cutoffs);
    store.cutoff(300, 4, pair, 2, 0.02, 100, 3);
    CHECK(store.builds() == 2);
  }
  {
    TableStore reloaded(dir);
    CHECK(reloaded.pa(300, 4, pair, 0.05, 120, 3).n == 300);
    CHECK(reloaded.builds() == 0);
    CHECK(reloaded.hits() == 1);
    // different n must trigger a rebuild, never reuse
    reloaded.pa(301, 4, pair, 0.05, 120, 3);
    CHECK(reloaded.builds() == 1);
  }
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
