#include "icsdetect/detection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "icsdetect/distributions.hpp"
#include "icsdetect/io.hpp"
#include "icsdetect/random.hpp"

namespace ics {

std::string SelectionRule::tag() const {
  switch (kind) {
    case Kind::Pa: return "pa";
    case Kind::Normality: return to_string(test);
    case Kind::Fixed: return "fixed:" + std::to_string(fixed_k);
    case Kind::None: return "none";
  }
  return "?";
}

SelectionRule SelectionRule::parse(const std::string& text) {
  SelectionRule rule;
  if (text == "pa") {
    rule.kind = Kind::Pa;
  } else if (text == "none") {
    rule.kind = Kind::None;
  } else if (text.rfind("fixed:", 0) == 0) {
    rule.kind = Kind::Fixed;
    try {
      rule.fixed_k = std::stol(text.substr(6));
    } catch (const std::exception&) {
      throw input_error("bad fixed selection '" + text + "', expected fixed:K");
    }
    if (rule.fixed_k < 1) throw input_error("fixed selection needs K >= 1");
  } else {
    rule.kind = Kind::Normality;
    rule.test = normality_test_from_string(text);
  }
  return rule;
}

std::size_t DetectionReport::flag_count() const {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
}

CutoffTable ics_cutoff(Index n, Index p, const ScatterPair& pair, Index k, double gamma,
                       int reps, std::uint64_t seed, int threads) {
  if (k < 1 || k > p) throw std::invalid_argument("ics_cutoff: k must lie in [1, p]");
  if (reps < 100) throw std::invalid_argument("ics_cutoff: need at least 100 replicates");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("ics_cutoff: gamma outside (0,1)");
  if (n < 2 * p) throw std::invalid_argument("ics_cutoff: need n >= 2p");

  std::vector<double> pooled(static_cast<std::size_t>(reps) * static_cast<std::size_t>(n));
  std::vector<int> attempts(static_cast<std::size_t>(reps), 0);
  const int max_attempts = 1 + std::max(1, reps / 10);

  rng::parallel_for_index(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
      attempts[r] = attempt + 1;
      std::uint64_t rep_seed =
          rng::derive_seed(seed, {static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(attempt)});
      rng::Engine eng = rng::make_engine(rep_seed);
      Matrix x = rng::normal_matrix(n, p, eng);
      ScatterPair local = pair;
      local.v1.mcd_seed = rng::derive_seed(rep_seed, {1});
      local.v2.mcd_seed = rng::derive_seed(rep_seed, {2});
      try {
        IcsResult res = invariant_coordinates(x, local);
        Vector d = ics_distance_sq(res, k);
        std::copy(d.data(), d.data() + n, pooled.begin() + static_cast<std::ptrdiff_t>(r * static_cast<std::size_t>(n)));
        return;
      } catch (const numeric_error&) {
      }
    }
    attempts[r] = -1;
  });

  int redraws = 0;
  for (int a : attempts) {
    if (a < 0) throw numeric_error("ics_cutoff: a replicate failed repeatedly");
    redraws += a - 1;
  }
  if (redraws > reps / 10)
    throw numeric_error("ics_cutoff: redraw rate above 10% (" + std::to_string(redraws) + " of " +
                        std::to_string(reps) + ")");

  CutoffTable table;
  table.n = n;
  table.p = p;
  table.pair = pair_tag(pair);
  table.k = k;
  table.gamma = gamma;
  table.reps = reps;
  table.seed = seed;
  table.redraws = redraws;
  table.cutoff = empirical_quantile(std::move(pooled), 1.0 - gamma);
  return table;
}

namespace {

std::string format_level(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

TableStore::TableStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

PaTable TableStore::pa(Index n, Index p, const ScatterPair& pair, double alpha, int reps,
                       std::uint64_t seed, int threads) {
  std::string key = "pa_n" + std::to_string(n) + "_p" + std::to_string(p) + "_" + pair_tag(pair) +
                    "_a" + format_level(alpha);
  // Builds run under the lock so concurrent callers wait for the first
  // builder instead of duplicating the Monte-Carlo work.
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = pa_cache_.find(key);
  if (it != pa_cache_.end()) {
    ++hits_;
    return it->second;
  }
  if (!dir_.empty()) {
    auto loaded = load_pa_table(dir_ / (key + ".json"));
    if (loaded && loaded->n == n && loaded->p == p && loaded->pair == pair_tag(pair) &&
        loaded->alpha == alpha) {
      ++hits_;
      pa_cache_.emplace(key, *loaded);
      return *loaded;
    }
  }
  PaTable table = pa_table(n, p, pair, alpha, reps, seed, threads);
  ++builds_;
  pa_cache_.emplace(key, table);
  if (!dir_.empty()) save_pa_table(dir_ / (key + ".json"), table);
  return table;
}

CutoffTable TableStore::cutoff(Index n, Index p, const ScatterPair& pair, Index k, double gamma,
                               int reps, std::uint64_t seed, int threads) {
  std::string key = "cutoff_n" + std::to_string(n) + "_p" + std::to_string(p) + "_" +
                    pair_tag(pair) + "_k" + std::to_string(k) + "_g" + format_level(gamma);
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = cutoff_cache_.find(key);
  if (it != cutoff_cache_.end()) {
    ++hits_;
    return it->second;
  }
  if (!dir_.empty()) {
    auto loaded = load_cutoff_table(dir_ / (key + ".json"));
    if (loaded && loaded->n == n && loaded->p == p && loaded->pair == pair_tag(pair) &&
        loaded->k == k && loaded->gamma == gamma) {
      ++hits_;
      cutoff_cache_.emplace(key, *loaded);
      return *loaded;
    }
  }
  CutoffTable table = ics_cutoff(n, p, pair, k, gamma, reps, seed, threads);
  ++builds_;
  cutoff_cache_.emplace(key, table);
  if (!dir_.empty()) save_cutoff_table(dir_ / (key + ".json"), table);
  return table;
}

namespace {

Matrix score_variable_correlations(const Matrix& x, const Matrix& scores, Index k) {
  const Index n = x.rows(), p = x.cols();
  Matrix corr(k, p);
  Matrix xc = x.rowwise() - x.colwise().mean();
  Matrix zc = scores.rowwise() - scores.colwise().mean();
  Vector xsd = (xc.colwise().squaredNorm() / static_cast<double>(n - 1)).cwiseSqrt();
  Vector zsd = (zc.colwise().squaredNorm() / static_cast<double>(n - 1)).cwiseSqrt();
  for (Index j = 0; j < k; ++j)
    for (Index v = 0; v < p; ++v) {
      double cov_jv = zc.col(j).dot(xc.col(v)) / static_cast<double>(n - 1);
      double denom = zsd[j] * xsd[v];
      corr(j, v) = denom > 0 ? cov_jv / denom : 0.0;
    }
  return corr;
}

}  // namespace

DetectionReport detect_ics(const Matrix& x, const ScatterPair& pair, const SelectionRule& rule,
                           const DetectOptions& opts, TableStore& tables) {
  const Index n = x.rows(), p = x.cols();
  IcsResult res = invariant_coordinates(x, pair);

  SelectionOutcome sel;
  switch (rule.kind) {
    case SelectionRule::Kind::Pa: {
      PaTable table = tables.pa(n, p, pair, opts.alpha, opts.pa_reps,
                                rng::derive_seed(opts.seed, {0x7041}), opts.threads);
      sel = select_pa(res.eigenvalues, table);
      break;
    }
    case SelectionRule::Kind::Normality:
      sel = select_normality(res.scores, rule.test, opts.alpha);
      break;
    case SelectionRule::Kind::Fixed:
      sel.method = SelectionMethod::Fixed;
      sel.k = std::min<Index>(rule.fixed_k, p);
      break;
    case SelectionRule::Kind::None:
      sel.method = SelectionMethod::Fixed;
      sel.k = p;
      break;
  }

  DetectionReport report;
  report.method = "ics";
  report.pair = res.pair;
  report.n = n;
  report.p = p;
  report.gamma = opts.gamma;
  report.alpha = opts.alpha;
  report.seed = opts.seed;
  report.selection = sel;
  report.k_used = sel.k;
  report.eigenvalues = res.eigenvalues;
  report.component_correlations = score_variable_correlations(x, res.scores, sel.k);

  if (sel.k == 0) {
    report.distances_sq = Vector::Zero(n);
    report.flags.assign(static_cast<std::size_t>(n), false);
    return report;
  }

  CutoffTable table = tables.cutoff(n, p, pair, sel.k, opts.gamma, opts.cutoff_reps,
                                    rng::derive_seed(opts.seed, {0xC07}), opts.threads);
  report.cutoff = table.cutoff;
  report.distances_sq = ics_distance_sq(res, sel.k);
  report.flags.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) report.flags[static_cast<std::size_t>(i)] = report.distances_sq[i] > table.cutoff;
  return report;
}

DetectionReport detect_md(const Matrix& x, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("detect_md: gamma outside (0,1)");
  ScatterEstimate est = cov(x);
  DetectionReport report;
  report.method = "md";
  report.n = x.rows();
  report.p = x.cols();
  report.gamma = gamma;
  report.distances_sq = mahalanobis_sq_rows(x, est.location, est.scatter);
  report.cutoff = chisq_quantile(1.0 - gamma, static_cast<double>(x.cols()));
  report.flags.resize(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i)
    report.flags[static_cast<std::size_t>(i)] = report.distances_sq[i] > *report.cutoff;
  return report;
}

DetectionReport detect_rd(const Matrix& x, double gamma, const ScatterSpec& mcd_spec) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("detect_rd: gamma outside (0,1)");
  if (mcd_spec.kind != ScatterKind::Mcd) throw std::invalid_argument("detect_rd: spec must be MCD");
  ScatterEstimate est = mcd(x, mcd_spec);
  DetectionReport report;
  report.method = "rd";
  report.n = x.rows();
  report.p = x.cols();
  report.gamma = gamma;
  report.seed = mcd_spec.mcd_seed;
  report.distances_sq = mahalanobis_sq_rows(x, est.location, est.scatter);
  report.cutoff = chisq_quantile(1.0 - gamma, static_cast<double>(x.cols()));
  report.flags.resize(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i)
    report.flags[static_cast<std::size_t>(i)] = report.distances_sq[i] > *report.cutoff;
  return report;
}

DetectionReport detect_pca(const Matrix& x, Index k, bool standardized, double flag_level) {
  const Index n = x.rows(), p = x.cols();
  if (k < 1 || k >= p) throw std::invalid_argument("detect_pca: k must lie in [1, p-1]");
  if (!(flag_level > 0.0 && flag_level < 1.0))
    throw std::invalid_argument("detect_pca: flag level outside (0,1)");

  Matrix centered = x.rowwise() - x.colwise().mean();
  if (standardized) {
    Vector var = centered.colwise().squaredNorm().transpose() / static_cast<double>(n - 1);
    for (Index j = 0; j < p; ++j) {
      if (!(var[j] > 0))
        throw numeric_error("detect_pca: column " + std::to_string(j) +
                            " has zero variance, cannot standardize");
      centered.col(j) /= std::sqrt(var[j]);
    }
  }
  Matrix s = centered.transpose() * centered / static_cast<double>(n - 1);
  SymEigen eig = sym_eigen(s);
  if (!(eig.values[k - 1] > 1e-12 * std::max(eig.values[0], 0.0)))
    throw numeric_error("detect_pca: component " + std::to_string(k) +
                        " has numerically zero variance");

  Matrix basis = eig.vectors.leftCols(k);
  Matrix scores = centered * basis;                      // n x k
  Matrix resid = centered - scores * basis.transpose();  // n x p

  Vector sd(n), od(n);
  for (Index i = 0; i < n; ++i) {
    double acc = 0;
    for (Index j = 0; j < k; ++j) acc += scores(i, j) * scores(i, j) / eig.values[j];
    sd[i] = std::sqrt(acc);
    od[i] = resid.row(i).norm();
  }

  const double sd_cutoff = std::sqrt(chisq_quantile(flag_level, static_cast<double>(k)));

  // Wilson-Hilferty: OD^(2/3) is treated as normal.
  Vector od23 = od.array().pow(2.0 / 3.0);
  double od23_mean = od23.mean();
  double od23_sd = std::sqrt((od23.array() - od23_mean).square().sum() / static_cast<double>(n - 1));
  double od_cutoff = std::pow(std::max(od23_mean + od23_sd * normal_quantile(flag_level), 0.0), 1.5);
  // Data lying exactly in the k-subspace: no orthogonal flags.
  const double od_floor = 1e-10 * std::sqrt(std::max(s.trace(), 0.0));
  bool od_active = od.maxCoeff() > od_floor && od_cutoff > 0;

  DetectionReport report;
  report.method = standardized ? "pca-std" : "pca";
  report.n = n;
  report.p = p;
  report.k_used = k;
  report.gamma = 1.0 - flag_level;
  report.eigenvalues = eig.values;
  report.pca_score_dist = sd;
  report.pca_orth_dist = od;
  report.pca_sd_cutoff = sd_cutoff;
  report.pca_od_cutoff = od_cutoff;
  report.cutoff = 1.0;
  report.distances_sq.resize(n);
  report.flags.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    double ratio_sd = sd[i] / sd_cutoff;
    double ratio_od = od_active ? od[i] / od_cutoff : 0.0;
    report.distances_sq[i] = std::max(ratio_sd * ratio_sd, ratio_od * ratio_od);
    report.flags[static_cast<std::size_t>(i)] = report.distances_sq[i] > 1.0;
  }
  return report;
}

BestSelection best_selection(const std::vector<bool>& labels, Index k_max,
                             const std::function<DetectionReport(Index)>& detector_at_k) {
  if (k_max < 1) throw std::invalid_argument("best_selection: k_max must be at least 1");
  BestSelection best;
  bool have = false;
  for (Index k = 1; k <= k_max; ++k) {
    DetectionReport report = detector_at_k(k);
    if (report.flags.size() != labels.size())
      throw std::invalid_argument("best_selection: label/flag length mismatch");
    int ntp = 0, nfp = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (report.flags[i] && labels[i]) ++ntp;
      if (report.flags[i] && !labels[i]) ++nfp;
    }
    bool better = !have || ntp > best.ntp || (ntp == best.ntp && nfp < best.nfp);
    if (better) {
      best = {k, std::move(report), ntp, nfp};
      have = true;
    }
  }
  return best;
}

}  // namespace ics
