#include "icsdetect/scatter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "icsdetect/distributions.hpp"
#include "icsdetect/random.hpp"

namespace ics {

std::string to_string(ScatterKind kind) {
  switch (kind) {
    case ScatterKind::Cov: return "cov";
    case ScatterKind::Cov4: return "cov4";
    case ScatterKind::Mlt: return "mlt";
    case ScatterKind::Mcd: return "mcd";
  }
  return "?";
}

ScatterKind scatter_kind_from_string(const std::string& tag) {
  if (tag == "cov") return ScatterKind::Cov;
  if (tag == "cov4") return ScatterKind::Cov4;
  if (tag == "mlt") return ScatterKind::Mlt;
  if (tag == "mcd") return ScatterKind::Mcd;
  throw input_error("unknown scatter estimator '" + tag + "'");
}

void ScatterSpec::validate() const {
  if (kind == ScatterKind::Mcd) {
    if (!(mcd_h_fraction >= 0.5 && mcd_h_fraction <= 1.0))
      throw std::invalid_argument("ScatterSpec: MCD h-fraction must lie in [0.5, 1]");
    if (mcd_subsets < 1) throw std::invalid_argument("ScatterSpec: MCD needs at least one subset");
  }
  if (kind == ScatterKind::Mlt) {
    if (!(mlt_tol > 0)) throw std::invalid_argument("ScatterSpec: MLT tolerance must be positive");
    if (mlt_max_iter < 1) throw std::invalid_argument("ScatterSpec: MLT needs at least one iteration");
  }
}

namespace {

void require_data(const Matrix& x, const char* who) {
  if (x.rows() < 1 || x.cols() < 1)
    throw std::invalid_argument(std::string(who) + ": empty data matrix");
  if (!x.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite entries");
}

void ensure_spd(const Matrix& s, const char* who) {
  Index bad = spd_failure_index(s);
  if (bad >= 0)
    throw numeric_error(std::string(who) + ": scatter matrix is singular (column " + std::to_string(bad) +
                        " is collinear with or nearly constant relative to the preceding columns)");
}

// Mean and sample covariance (denominator m-1) of the given rows.
void subset_moments(const Matrix& x, const std::vector<Index>& rows, Vector& m, Matrix& v) {
  const Index p = x.cols();
  const auto k = static_cast<Index>(rows.size());
  m = Vector::Zero(p);
  for (Index r : rows) m += x.row(r).transpose();
  m /= static_cast<double>(k);
  v = Matrix::Zero(p, p);
  for (Index r : rows) {
    Vector d = x.row(r).transpose() - m;
    v.noalias() += d * d.transpose();
  }
  v /= static_cast<double>(k - 1);
}

std::optional<double> log_det_spd(const Matrix& v) {
  if (spd_failure_index(v) >= 0) return std::nullopt;
  Matrix l = cholesky_lower(v);
  return 2.0 * l.diagonal().array().log().sum();
}

// Indices of the h smallest squared distances, ties broken by index.
std::vector<Index> h_smallest(const Vector& dist_sq, Index h) {
  std::vector<Index> order(static_cast<std::size_t>(dist_sq.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return dist_sq[a] != dist_sq[b] ? dist_sq[a] < dist_sq[b] : a < b;
  });
  order.resize(static_cast<std::size_t>(h));
  return order;
}

std::string degenerate_directions_message(const Matrix& v) {
  SymEigen eig = sym_eigen(0.5 * (v + v.transpose()));
  double top = std::max(eig.values[0], 0.0);
  std::string msg;
  for (Index j = v.rows() - 1; j >= 0; --j) {
    if (eig.values[j] > 1e-12 * std::max(top, 1e-300)) break;
    Index var = 0;
    eig.vectors.col(j).cwiseAbs().maxCoeff(&var);
    if (!msg.empty()) msg += ", ";
    msg += "direction " + std::to_string(j) + " (dominated by column " + std::to_string(var) + ")";
  }
  return msg.empty() ? "unknown" : msg;
}

}  // namespace

ScatterEstimate cov(const Matrix& x) {
  require_data(x, "cov");
  const Index n = x.rows(), p = x.cols();
  if (n < p + 1)
    throw std::invalid_argument("cov: need n >= p+1 observations, got n=" + std::to_string(n) +
                                ", p=" + std::to_string(p));
  ScatterEstimate est;
  est.kind = ScatterKind::Cov;
  est.location = x.colwise().mean().transpose();
  Matrix centered = x.rowwise() - est.location.transpose();
  est.scatter = centered.transpose() * centered / static_cast<double>(n - 1);
  ensure_spd(est.scatter, "cov");
  return est;
}

ScatterEstimate cov4(const Matrix& x) {
  ScatterEstimate base = cov(x);
  const Index n = x.rows(), p = x.cols();
  Vector r2 = mahalanobis_sq_rows(x, base.location, base.scatter);
  Matrix centered = x.rowwise() - base.location.transpose();
  ScatterEstimate est;
  est.kind = ScatterKind::Cov4;
  est.location = base.location;
  est.scatter = centered.transpose() * r2.asDiagonal() * centered /
                (static_cast<double>(p + 2) * static_cast<double>(n));
  ensure_spd(est.scatter, "cov4");
  return est;
}

namespace {

// Scale c making the weighted square identity (1/n) sum w(r^2/c) r^2/c = p
// hold exactly for the given distances. Monotone in c; safeguarded Newton.
double mlt_scale_root(const Vector& r2, Index p) {
  const Index n = r2.size();
  const double wscale = static_cast<double>(p + 1);
  auto value = [&](double c) {
    double acc = 0;
    for (Index i = 0; i < n; ++i) {
      double t = r2[i] / c;
      acc += wscale * t / (1.0 + t);
    }
    return acc / (static_cast<double>(n) * static_cast<double>(p)) - 1.0;
  };
  double lo = 1e-8, hi = 1.0;
  while (value(hi) > 0) hi *= 2.0;
  while (value(lo) < 0) lo *= 0.5;
  double c = std::clamp(1.0, lo, hi);
  for (int iter = 0; iter < 100; ++iter) {
    double f = value(c);
    if (f > 0)
      lo = c;
    else
      hi = c;
    double df = 0;
    for (Index i = 0; i < n; ++i) {
      double t = r2[i] / c;
      double u = 1.0 + t;
      df -= wscale * t / (u * u * c);
    }
    df /= static_cast<double>(n) * static_cast<double>(p);
    double next = df < 0 ? c - f / df : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - c) <= 1e-14 * c) return next;
    c = next;
  }
  return c;
}

}  // namespace

ScatterEstimate mlt(const Matrix& x, const ScatterSpec& spec) {
  spec.validate();
  require_data(x, "mlt");
  const Index n = x.rows(), p = x.cols();
  if (n < p + 1)
    throw std::invalid_argument("mlt: need n >= p+1 observations");

  ScatterEstimate start = cov(x);
  Vector m = start.location;
  Matrix v = start.scatter;
  const double wscale = static_cast<double>(p + 1);

  ScatterEstimate est;
  est.kind = ScatterKind::Mlt;
  for (int iter = 1; iter <= spec.mlt_max_iter; ++iter) {
    Vector r2;
    try {
      r2 = mahalanobis_sq_rows(x, m, v);
    } catch (const numeric_error&) {
      throw numeric_error("mlt: singular scatter iterate at iteration " + std::to_string(iter));
    }
    // fix the scale of the iterate first; the alternating update alone
    // contracts that mode at only p/(p+1) per sweep
    double c = mlt_scale_root(r2, p);
    v *= c;
    r2 /= c;
    Vector w = wscale * (r2.array() + 1.0).inverse();
    double wsum = w.sum();
    Vector m_next = (x.transpose() * w) / wsum;
    Matrix centered = x.rowwise() - m_next.transpose();
    Matrix v_next = centered.transpose() * w.asDiagonal() * centered / static_cast<double>(n);
    double change = (v_next - v).norm() / v.norm();
    m = m_next;
    v = v_next;
    est.diagnostics.iterations = iter;
    if (change < spec.mlt_tol) {
      est.diagnostics.converged = true;
      est.location = m;
      est.scatter = v;
      ensure_spd(est.scatter, "mlt");
      return est;
    }
  }
  est.diagnostics.converged = false;
  est.location = m;
  est.scatter = v;
  throw mlt_convergence_error("mlt: no convergence within " + std::to_string(spec.mlt_max_iter) +
                                  " iterations (relative change still above " +
                                  std::to_string(spec.mlt_tol) + ")",
                              std::move(est));
}

ScatterEstimate mcd(const Matrix& x, const ScatterSpec& spec) {
  spec.validate();
  require_data(x, "mcd");
  const Index n = x.rows(), p = x.cols();
  if (n < 2 * p)
    throw std::invalid_argument("mcd: need n >= 2p observations, got n=" + std::to_string(n) +
                                ", p=" + std::to_string(p));
  const Index h = std::clamp<Index>(static_cast<Index>(std::floor(spec.mcd_h_fraction * static_cast<double>(n))),
                                    p + 1, n);
  if (h < p + 1) throw std::invalid_argument("mcd: h*n must be at least p+1");

  struct Candidate {
    double log_det;
    int start;
    std::vector<Index> subset;
    Vector m;
    Matrix v;
  };

  auto c_step = [&](const Vector& m, const Matrix& v) {
    Vector r2 = mahalanobis_sq_rows(x, m, v);
    return h_smallest(r2, h);
  };

  std::vector<Candidate> candidates;
  std::string degenerate_note;

  if (h == n) {
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    Vector m;
    Matrix v;
    subset_moments(x, all, m, v);
    auto ld = log_det_spd(v);
    if (!ld) throw numeric_error("mcd: exact fit, the data lie on " + degenerate_directions_message(v));
    candidates.push_back({*ld, 0, std::move(all), std::move(m), std::move(v)});
  } else {
    for (int s = 0; s < spec.mcd_subsets; ++s) {
      rng::Engine eng = rng::substream(spec.mcd_seed, static_cast<std::uint64_t>(s) + 1);
      std::vector<Index> perm = rng::sample_without_replacement(n, n, eng);
      auto size = static_cast<std::size_t>(p + 1);
      std::vector<Index> subset(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(size));
      Vector m;
      Matrix v;
      subset_moments(x, subset, m, v);
      // grow degenerate elemental subsets until their covariance factorizes
      while (spd_failure_index(v) >= 0 && size < static_cast<std::size_t>(n)) {
        subset.push_back(perm[size++]);
        subset_moments(x, subset, m, v);
      }
      if (spd_failure_index(v) >= 0) {
        if (degenerate_note.empty()) degenerate_note = degenerate_directions_message(v);
        continue;
      }
      bool ok = true;
      for (int step = 0; step < 2 && ok; ++step) {
        std::vector<Index> next = c_step(m, v);
        subset_moments(x, next, m, v);
        subset = std::move(next);
        if (spd_failure_index(v) >= 0) ok = false;
      }
      if (!ok) {
        if (degenerate_note.empty()) degenerate_note = degenerate_directions_message(v);
        continue;
      }
      auto ld = log_det_spd(v);
      if (!ld) continue;
      candidates.push_back({*ld, s, std::move(subset), std::move(m), std::move(v)});
    }
  }

  if (candidates.empty())
    throw numeric_error("mcd: exact fit, every h-subset covariance is singular along " +
                        (degenerate_note.empty() ? std::string("unknown directions") : degenerate_note));

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.log_det != b.log_det ? a.log_det < b.log_det : a.start < b.start;
  });
  if (candidates.size() > 10) candidates.resize(10);

  int refine_steps = 0;
  for (auto& cand : candidates) {
    for (int iter = 0; iter < 100; ++iter) {
      std::vector<Index> next = c_step(cand.m, cand.v);
      if (next == cand.subset) break;
      Vector m;
      Matrix v;
      subset_moments(x, next, m, v);
      auto ld = log_det_spd(v);
      if (!ld) {
        throw numeric_error("mcd: exact fit during refinement, the h-subset lies on " +
                            degenerate_directions_message(v));
      }
      ++refine_steps;
      if (*ld > cand.log_det - 1e-12) {
        if (*ld < cand.log_det) {
          cand.subset = std::move(next);
          cand.m = std::move(m);
          cand.v = std::move(v);
          cand.log_det = *ld;
        }
        break;
      }
      cand.subset = std::move(next);
      cand.m = std::move(m);
      cand.v = std::move(v);
      cand.log_det = *ld;
    }
  }

  const Candidate& best = *std::min_element(candidates.begin(), candidates.end(),
                                            [](const Candidate& a, const Candidate& b) {
                                              return a.log_det != b.log_det ? a.log_det < b.log_det
                                                                            : a.start < b.start;
                                            });

  const double frac = static_cast<double>(h) / static_cast<double>(n);
  const double dp = static_cast<double>(p);
  double c_raw = h == n ? 1.0 : frac / chisq_cdf(chisq_quantile(frac, dp), dp + 2.0);

  ScatterEstimate est;
  est.kind = ScatterKind::Mcd;
  est.diagnostics.best_subset = best.subset;
  std::sort(est.diagnostics.best_subset.begin(), est.diagnostics.best_subset.end());
  est.diagnostics.iterations = refine_steps;
  est.diagnostics.converged = true;
  est.diagnostics.raw_location = best.m;
  est.diagnostics.raw_scatter = best.v * c_raw;

  // One reweighting step against the chi-square 0.975 threshold.
  Vector r2 = mahalanobis_sq_rows(x, est.diagnostics.raw_location, est.diagnostics.raw_scatter);
  const double threshold = chisq_quantile(0.975, dp);
  std::vector<Index> kept;
  for (Index i = 0; i < n; ++i)
    if (r2[i] <= threshold) kept.push_back(i);
  if (static_cast<Index>(kept.size()) < p + 1)
    throw numeric_error("mcd: reweighting kept only " + std::to_string(kept.size()) +
                        " observations, fewer than p+1");
  Vector m_rw;
  Matrix v_rw;
  subset_moments(x, kept, m_rw, v_rw);
  const double c_rw = 0.975 / chisq_cdf(threshold, dp + 2.0);
  est.location = m_rw;
  est.scatter = v_rw * c_rw;
  ensure_spd(est.scatter, "mcd");
  return est;
}

ScatterEstimate estimate_scatter(const Matrix& x, const ScatterSpec& spec) {
  switch (spec.kind) {
    case ScatterKind::Cov: return cov(x);
    case ScatterKind::Cov4: return cov4(x);
    case ScatterKind::Mlt: return mlt(x, spec);
    case ScatterKind::Mcd: return mcd(x, spec);
  }
  throw std::invalid_argument("estimate_scatter: unknown estimator kind");
}

}  // namespace ics
