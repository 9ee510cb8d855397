#include <doctest.h>

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "icsdetect/distributions.hpp"
#include "icsdetect/random.hpp"
#include "icsdetect/scatter.hpp"
#include "icsdetect/simgen.hpp"

using namespace ics;

namespace {

Matrix random_full_rank(Index p, rng::Engine& eng) {
  while (true) {
    Matrix a = rng::normal_matrix(p, p, eng);
    if (spd_failure_index(a.transpose() * a) < 0) return a;
  }
}

// Defining sum evaluated through an explicit inverse, as a second route.
Matrix cov4_brute_force(const Matrix& x) {
  const Index n = x.rows(), p = x.cols();
  Vector mean = x.colwise().mean().transpose();
  Matrix centered = x.rowwise() - mean.transpose();
  Matrix c = centered.transpose() * centered / static_cast<double>(n - 1);
  Matrix cinv = c.inverse();
  Matrix acc = Matrix::Zero(p, p);
  for (Index i = 0; i < n; ++i) {
    Vector d = centered.row(i).transpose();
    double r2 = d.dot(cinv * d);
    acc += r2 * d * d.transpose();
  }
  return acc / (static_cast<double>(p + 2) * static_cast<double>(n));
}

}  // namespace

TEST_SUITE("scatter") {

TEST_CASE("cov of two points in one dimension") {
  Matrix x(2, 1);
  x << 0, 2;
  ScatterEstimate est = cov(x);
  CHECK(est.location[0] == doctest::Approx(1.0));
  CHECK(est.scatter(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("cov of three planar points") {
  Matrix x(3, 2);
  x << 0, 0, 1, 0, 0, 1;
  ScatterEstimate est = cov(x);
  CHECK(est.location[0] == doctest::Approx(1.0 / 3));
  CHECK(est.location[1] == doctest::Approx(1.0 / 3));
  CHECK(est.scatter(0, 0) == doctest::Approx(1.0 / 3));
  CHECK(est.scatter(1, 1) == doctest::Approx(1.0 / 3));
  CHECK(est.scatter(0, 1) == doctest::Approx(-1.0 / 6));
  CHECK(est.scatter(1, 0) == doctest::Approx(-1.0 / 6));
}

TEST_CASE("cov consistency at the standard normal") {
  rng::Engine eng = rng::make_engine(31);
  Matrix x = rng::normal_matrix(100000, 6, eng);
  ScatterEstimate est = cov(x);
  CHECK((est.scatter - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 0.05);
  CHECK(est.location.cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("cov rejects collinear columns and names the culprit") {
  rng::Engine eng = rng::make_engine(32);
  Matrix x(50, 3);
  x.col(0) = rng::normal_vector(50, eng);
  x.col(1) = 2.0 * x.col(0);
  x.col(2) = rng::normal_vector(50, eng);
  bool threw = false;
  try {
    cov(x);
  } catch (const numeric_error& e) {
    threw = true;
    CHECK(std::string(e.what()).find("column 1") != std::string::npos);
  }
  CHECK(threw);
  CHECK_THROWS_AS(cov(Matrix::Random(3, 3)), std::invalid_argument);  // n < p+1
}

TEST_CASE("cov4 of the alternating one-dimensional sample") {
  Matrix x(4, 1);
  x << -1, 1, -1, 1;
  ScatterEstimate est = cov4(x);
  CHECK(est.scatter(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(est.location[0] == doctest::Approx(0.0));
}

TEST_CASE("cov4 equals the brute-force defining sum") {
  rng::Engine eng = rng::make_engine(33);
  for (Index n : {12, 30, 50}) {
    for (Index p : {2, 4}) {
      Matrix x = rng::normal_matrix(n, p, eng);
      ScatterEstimate est = cov4(x);
      Matrix brute = cov4_brute_force(x);
      CHECK((est.scatter - brute).cwiseAbs().maxCoeff() <= 1e-12 * brute.norm());
    }
  }
}

TEST_CASE("cov4 is consistent with cov at the Gaussian") {
  rng::Engine eng = rng::make_engine(34);
  Matrix x = rng::normal_matrix(100000, 4, eng);
  ScatterEstimate c = cov(x);
  ScatterEstimate c4 = cov4(x);
  CHECK((c.scatter - c4.scatter).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("cov and cov4 affine equivariance") {
  rng::Engine eng = rng::make_engine(35);
  Matrix x = rng::normal_matrix(300, 4, eng);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix a = random_full_rank(4, eng);
    Vector b = rng::normal_vector(4, eng);
    Matrix y = (x * a.transpose()).rowwise() + b.transpose();
    for (auto* estimator : {&cov, &cov4}) {
      ScatterEstimate base = (*estimator)(x);
      ScatterEstimate image = (*estimator)(y);
      Matrix expected = a * base.scatter * a.transpose();
      CHECK((image.scatter - expected).norm() <= 1e-8 * expected.norm());
      Vector expected_loc = a * base.location + b;
      CHECK((image.location - expected_loc).norm() <= 1e-8 * (1.0 + expected_loc.norm()));
    }
  }
}

TEST_CASE("mlt centers symmetric data at zero") {
  rng::Engine eng = rng::make_engine(36);
  Matrix half = rng::normal_matrix(400, 3, eng);
  Matrix x(800, 3);
  x << half, -half;
  ScatterEstimate est = mlt(x);
  CHECK(est.location.cwiseAbs().maxCoeff() < 1e-6);
  CHECK(est.diagnostics.converged);
}

TEST_CASE("mlt satisfies its fixed-point equations on heavy-tailed data") {
  rng::Engine eng = rng::make_engine(37);
  const Index n = 10000, p = 3;
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    double denom = std::abs(rng::standard_normal(eng));
    x.row(i) = (rng::normal_vector(p, eng) / std::max(denom, 1e-6)).transpose();
  }
  ScatterEstimate est = mlt(x);
  CHECK(est.diagnostics.converged);
  CHECK(est.diagnostics.iterations <= 200);

  Vector r2 = mahalanobis_sq_rows(x, est.location, est.scatter);
  Vector w = static_cast<double>(p + 1) * (r2.array() + 1.0).inverse();
  Vector m_fix = (x.transpose() * w) / w.sum();
  Matrix centered = x.rowwise() - m_fix.transpose();
  Matrix v_fix = centered.transpose() * w.asDiagonal() * centered / static_cast<double>(n);
  CHECK((m_fix - est.location).norm() <= 1e-4 * (1.0 + est.location.norm()));
  CHECK((v_fix - est.scatter).norm() <= 1e-4 * est.scatter.norm());
}

TEST_CASE("mlt non-convergence carries the last iterate") {
  rng::Engine eng = rng::make_engine(44);
  Matrix x = rng::normal_matrix(100, 4, eng);
  ScatterSpec starved = ScatterSpec::mlt();
  starved.mlt_max_iter = 1;
  starved.mlt_tol = 1e-15;
  try {
    mlt(x, starved);
    FAIL("expected mlt_convergence_error");
  } catch (const mlt_convergence_error& e) {
    CHECK(e.last_iterate.location.size() == 4);
    CHECK(e.last_iterate.scatter.rows() == 4);
    CHECK(!e.last_iterate.diagnostics.converged);
    CHECK(e.last_iterate.diagnostics.iterations == 1);
  }
}

TEST_CASE("mlt affine equivariance") {
  rng::Engine eng = rng::make_engine(38);
  Matrix x = rng::normal_matrix(500, 3, eng);
  Matrix a = random_full_rank(3, eng);
  Vector b = rng::normal_vector(3, eng);
  ScatterSpec spec = ScatterSpec::mlt();
  spec.mlt_tol = 1e-9;  // equivariance only holds to the fixed-point tolerance
  ScatterEstimate base = mlt(x, spec);
  ScatterEstimate image = mlt((x * a.transpose()).rowwise() + b.transpose(), spec);
  Matrix expected = a * base.scatter * a.transpose();
  CHECK((image.scatter - expected).norm() <= 1e-6 * expected.norm());
}

TEST_CASE("mcd on clean Gaussian data stays near the identity") {
  rng::Engine eng = rng::make_engine(39);
  Matrix x = rng::normal_matrix(1000, 6, eng);
  ScatterEstimate est = mcd(x, ScatterSpec::mcd(101));
  CHECK((est.scatter - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 0.12);
  CHECK(est.location.cwiseAbs().maxCoeff() < 0.12);
  CHECK(est.diagnostics.best_subset.size() == 750);
}

TEST_CASE("mcd flags the shifted cluster in mean-shift data") {
  const double threshold = chisq_quantile(0.98, 6.0);
  int exceed = 0, total = 0;
  for (int run = 0; run < 10; ++run) {
    simgen::CaseParams params{1, 1000, 6, 0.02};
    simgen::LabeledData data = simgen::generate_case(params, 4000 + run);
    ScatterEstimate est = mcd(data.x, ScatterSpec::mcd(500 + run));
    Vector d = mahalanobis_sq_rows(data.x, est.location, est.scatter);
    for (Index i = 0; i < data.x.rows(); ++i) {
      if (!data.labels[static_cast<std::size_t>(i)]) continue;
      ++total;
      if (d[i] > threshold) ++exceed;
    }
  }
  CHECK(total == 200);
  CHECK(static_cast<double>(exceed) / total >= 0.9);
}

TEST_CASE("mcd with the full subset reduces to cov") {
  rng::Engine eng = rng::make_engine(40);
  Matrix x = rng::normal_matrix(200, 4, eng);
  ScatterEstimate full = mcd(x, ScatterSpec::mcd(7, 1.0));
  ScatterEstimate c = cov(x);
  CHECK((full.diagnostics.raw_scatter - c.scatter).norm() <= 1e-12 * c.scatter.norm());
  CHECK((full.diagnostics.raw_location - c.location).norm() <= 1e-12);
  // after reweighting the estimate stays close to cov
  CHECK((full.scatter - c.scatter).norm() <= 0.1 * c.scatter.norm());
}

TEST_CASE("mcd is deterministic under its seed") {
  rng::Engine eng = rng::make_engine(41);
  Matrix x = rng::normal_matrix(300, 4, eng);
  ScatterEstimate a = mcd(x, ScatterSpec::mcd(42));
  ScatterEstimate b = mcd(x, ScatterSpec::mcd(42));
  CHECK(a.scatter == b.scatter);
  CHECK(a.location == b.location);
  CHECK(a.diagnostics.best_subset == b.diagnostics.best_subset);
}

TEST_CASE("mcd affine equivariance with identical subset seed") {
  rng::Engine eng = rng::make_engine(42);
  Matrix x = rng::normal_matrix(400, 3, eng);
  Matrix a = random_full_rank(3, eng);
  Vector b = rng::normal_vector(3, eng);
  ScatterSpec spec = ScatterSpec::mcd(77);
  ScatterEstimate base = mcd(x, spec);
  ScatterEstimate image = mcd((x * a.transpose()).rowwise() + b.transpose(), spec);
  Matrix expected = a * base.scatter * a.transpose();
  CHECK((image.scatter - expected).norm() <= 1e-6 * expected.norm());
}

TEST_CASE("mcd reports exact-fit degeneracy") {
  rng::Engine eng = rng::make_engine(43);
  Matrix x(40, 2);
  x.col(0) = rng::normal_vector(40, eng);
  x.col(1) = 3.0 * x.col(0);  // all mass on a line
  bool threw = false;
  try {
    mcd(x, ScatterSpec::mcd(5));
  } catch (const numeric_error& e) {
    threw = true;
    CHECK(std::string(e.what()).find("exact fit") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("scatter spec validation") {
  ScatterSpec bad = ScatterSpec::mcd(1, 0.3);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  ScatterSpec mlt_bad = ScatterSpec::mlt();
  mlt_bad.mlt_tol = 0;
  CHECK_THROWS_AS(mlt_bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(scatter_kind_from_string("qqq"), input_error);
  CHECK(to_string(ScatterKind::Cov4) == "cov4");
}

}  // TEST_SUITE
