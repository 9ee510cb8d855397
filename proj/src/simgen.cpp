#include "icsdetect/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "icsdetect/distributions.hpp"
#include "icsdetect/random.hpp"

namespace ics::simgen {

Index CaseParams::outlier_count() const {
  if (case_id == 0) return 0;
  return static_cast<Index>(std::llround(epsilon * static_cast<double>(n)));
}

Index CaseParams::subspace_dim() const {
  switch (case_id) {
    case 0: return 0;
    case 1: return 1;
    case 2: return 1;
    case 3: return 2;
    case 4: return 6;
    case 5: return std::min<Index>(6, p);
    default: return 0;
  }
}

void CaseParams::validate() const {
  if (case_id < 0 || case_id > 5)
    throw std::invalid_argument("CaseParams: case must lie in 0..5");
  if (n < 2 * p) throw std::invalid_argument("CaseParams: need n >= 2p");
  if ((case_id == 4 || case_id == 5) && p < 6)
    throw std::invalid_argument("CaseParams: cases 4 and 5 need p >= 6");
  if (case_id != 0) {
    if (!(epsilon > 0.0 && epsilon < 0.5))
      throw std::invalid_argument("CaseParams: epsilon must lie in (0, 0.5)");
    double count = epsilon * static_cast<double>(n);
    if (std::abs(count - std::llround(count)) > 1e-9)
      throw std::invalid_argument("CaseParams: epsilon * n must be an integer outlier count");
    if (outlier_count() < 1)
      throw std::invalid_argument("CaseParams: epsilon * n must be at least 1");
  }
}

namespace {

Vector gaussian_row(const Vector& sd, rng::Engine& eng) {
  Vector row(sd.size());
  for (Index j = 0; j < sd.size(); ++j) row[j] = sd[j] * rng::standard_normal(eng);
  return row;
}

double chi_draw(Index df, rng::Engine& eng) { return rng::normal_vector(df, eng).norm(); }

}  // namespace

LabeledData generate_case(const CaseParams& params, std::uint64_t seed) {
  params.validate();
  const Index n = params.n, p = params.p;
  const Index m = params.outlier_count();
  rng::Engine eng = rng::make_engine(seed);

  Vector regular_sd = Vector::Ones(p);
  switch (params.case_id) {
    case 1:
      regular_sd.tail(p - 1).setConstant(2.0);
      break;
    case 2:
      regular_sd[0] = std::sqrt(0.1);
      break;
    case 3:
      regular_sd.tail(p - 2).setConstant(2.0);
      break;
    default:
      break;
  }

  Matrix x(n, p);
  for (Index i = 0; i < n - m; ++i) x.row(i) = gaussian_row(regular_sd, eng).transpose();

  Index next = n - m;
  switch (params.case_id) {
    case 0:
      break;
    case 1:
      for (Index i = 0; i < m; ++i, ++next) {
        Vector row = gaussian_row(regular_sd, eng);
        row[0] += 6.0;
        x.row(next) = row.transpose();
      }
      break;
    case 2: {
      const double noise_sd = std::sqrt(0.2);
      for (Index i = 0; i < m; ++i, ++next) {
        double sign = rng::uniform01(eng) < 0.5 ? -1.0 : 1.0;
        x(next, 0) = sign * chi_draw(5, eng);
        for (Index j = 1; j < p; ++j) x(next, j) = noise_sd * rng::standard_normal(eng);
      }
      break;
    }
    case 3: {
      Index m1 = static_cast<Index>(std::llround(0.6 * static_cast<double>(m)));
      for (Index i = 0; i < m; ++i, ++next) {
        Vector row = gaussian_row(regular_sd, eng);
        if (i < m1)
          row[0] += 6.0;
        else
          row[1] += 6.2;
        x.row(next) = row.transpose();
      }
      break;
    }
    case 4: {
      Index base = m / 6, extra = m % 6;
      for (Index cluster = 0; cluster < 6; ++cluster) {
        Index size = base + (cluster < extra ? 1 : 0);
        double shift = 6.0 + 0.1 * static_cast<double>(cluster);
        for (Index i = 0; i < size; ++i, ++next) {
          Vector row = gaussian_row(regular_sd, eng);
          row[cluster] += shift;
          x.row(next) = row.transpose();
        }
      }
      break;
    }
    case 5: {
      const Index q = std::min<Index>(6, p);
      Vector outlier_sd = Vector::Ones(p);
      outlier_sd.head(q).setConstant(std::sqrt(5.0));
      Vector col_min = x.topRows(n - m).leftCols(q).colwise().minCoeff().transpose();
      Vector col_max = x.topRows(n - m).leftCols(q).colwise().maxCoeff().transpose();
      long draws = 0;
      const long cap = 1000000;
      for (Index i = 0; i < m;) {
        if (++draws > cap)
          throw numeric_error("generate_case: case 5 rejection sampling exceeded " +
                              std::to_string(cap) + " draws");
        Vector row = gaussian_row(outlier_sd, eng);
        bool extreme = false;
        for (Index j = 0; j < q && !extreme; ++j)
          extreme = row[j] > col_max[j] || row[j] < col_min[j];
        if (!extreme) continue;
        x.row(next) = row.transpose();
        ++next;
        ++i;
      }
      break;
    }
    default:
      break;
  }

  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  rng::shuffle(perm, eng);

  LabeledData data;
  data.x.resize(n, p);
  data.labels.assign(static_cast<std::size_t>(n), false);
  for (Index i = 0; i < n; ++i) {
    data.x.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    data.labels[static_cast<std::size_t>(i)] = perm[static_cast<std::size_t>(i)] >= n - m;
  }
  data.q = params.subspace_dim();
  data.seed = seed;
  return data;
}

TpFp tp_fp(const std::vector<bool>& flags, const std::vector<bool>& labels) {
  if (flags.size() != labels.size())
    throw std::invalid_argument("tp_fp: flag and label vectors differ in length");
  long true_pos = 0, false_pos = 0, outliers = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (labels[i]) {
      ++outliers;
      if (flags[i]) ++true_pos;
    } else if (flags[i]) {
      ++false_pos;
    }
  }
  long regulars = static_cast<long>(flags.size()) - outliers;
  TpFp out;
  if (outliers > 0)
    out.tp_percent = 100.0 * static_cast<double>(true_pos) / static_cast<double>(outliers);
  out.fp_percent =
      regulars > 0 ? 100.0 * static_cast<double>(false_pos) / static_cast<double>(regulars) : 0.0;
  return out;
}

Matrix AffineTransform::apply(const Matrix& x) const {
  return (x * a.transpose()).rowwise() + b.transpose();
}

AffineTransform make_masking_transform(Index p, std::uint64_t seed) {
  for (int attempt = 0; attempt < 16; ++attempt) {
    rng::Engine eng = rng::substream(seed, static_cast<std::uint64_t>(attempt));
    AffineTransform t;
    t.a = rng::normal_matrix(p, p, eng);
    t.b = rng::normal_vector(p, eng);
    if (spd_failure_index(t.a.transpose() * t.a) < 0) return t;
  }
  throw numeric_error("make_masking_transform: could not draw a full-rank matrix");
}

std::string MethodSpec::tag() const {
  switch (family) {
    case Family::Ics: return "ics:" + rule.tag();
    case Family::Md: return "md";
    case Family::Rd: return "rd";
    case Family::Pca: return "pca";
    case Family::PcaStd: return "pca-std";
    case Family::TrueSubspace: return "true-subspace";
  }
  return "?";
}

MethodSpec MethodSpec::parse(const std::string& text) {
  MethodSpec spec;
  if (text == "md") {
    spec.family = Family::Md;
  } else if (text == "rd") {
    spec.family = Family::Rd;
  } else if (text == "pca") {
    spec.family = Family::Pca;
  } else if (text == "pca-std") {
    spec.family = Family::PcaStd;
  } else if (text == "true-subspace") {
    spec.family = Family::TrueSubspace;
  } else if (text.rfind("ics:", 0) == 0) {
    spec.family = Family::Ics;
    spec.rule = SelectionRule::parse(text.substr(4));
  } else {
    throw input_error("unknown method '" + text + "'");
  }
  return spec;
}

namespace {

struct ReplicateOutcome {
  bool failed = false;
  std::optional<double> k;
  std::optional<double> tp;
  double fp = 0;
};

// Cutoff for the known-subspace comparator: pooled Mahalanobis distances of
// null Gaussian samples projected on the first q coordinates.
double true_subspace_cutoff(Index n, Index q, double gamma, std::uint64_t seed) {
  int reps = std::max<int>(100, static_cast<int>((100000 + n - 1) / n));
  std::vector<double> pooled;
  pooled.reserve(static_cast<std::size_t>(reps) * static_cast<std::size_t>(n));
  for (int r = 0; r < reps; ++r) {
    rng::Engine eng = rng::substream(seed, static_cast<std::uint64_t>(r));
    Matrix x = rng::normal_matrix(n, q, eng);
    ScatterEstimate est = cov(x);
    Vector d = mahalanobis_sq_rows(x, est.location, est.scatter);
    pooled.insert(pooled.end(), d.data(), d.data() + n);
  }
  return empirical_quantile(std::move(pooled), 1.0 - gamma);
}

std::vector<bool> detect_true_subspace(const Matrix& x, Index q, double cutoff) {
  Matrix proj = x.leftCols(q);
  ScatterEstimate est = cov(proj);
  Vector d = mahalanobis_sq_rows(proj, est.location, est.scatter);
  std::vector<bool> flags(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) flags[static_cast<std::size_t>(i)] = d[i] > cutoff;
  return flags;
}

}  // namespace

std::vector<CellResult> run_experiment(const ExperimentConfig& config, TableStore& tables) {
  if (config.reps < 1) throw std::invalid_argument("run_experiment: need at least one replicate");
  if (config.methods.empty()) throw std::invalid_argument("run_experiment: no methods configured");

  std::vector<CellResult> results;

  for (int case_id : config.cases) {
    for (Index p : config.dims) {
      CaseParams params{case_id, config.n, p, 0.02};
      params.validate();
      std::optional<AffineTransform> mask;
      if (config.mask_affine)
        mask = make_masking_transform(
            p, rng::derive_seed(config.seed, {0xAFF1u, static_cast<std::uint64_t>(case_id),
                                              static_cast<std::uint64_t>(p)}));

      std::optional<double> subspace_cutoff;
      if (params.subspace_dim() > 0)
        for (const MethodSpec& method : config.methods)
          if (method.family == MethodSpec::Family::TrueSubspace && !subspace_cutoff)
            subspace_cutoff = true_subspace_cutoff(
                config.n, params.subspace_dim(), config.gamma,
                rng::derive_seed(config.seed, {0x5B5Cu, static_cast<std::uint64_t>(params.subspace_dim())}));

      for (const MethodSpec& method : config.methods) {
        if (method.family == MethodSpec::Family::TrueSubspace && params.subspace_dim() == 0)
          continue;
        std::vector<std::string> pair_tags =
            method.family == MethodSpec::Family::Ics ? config.pairs : std::vector<std::string>{""};

        for (const std::string& tag : pair_tags) {
          std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(config.reps));

          rng::parallel_for_index(
              static_cast<std::size_t>(config.reps), config.threads, [&](std::size_t r) {
                ReplicateOutcome& out = outcomes[r];
                std::uint64_t data_seed = rng::derive_seed(
                    config.seed, {static_cast<std::uint64_t>(case_id), static_cast<std::uint64_t>(p),
                                  static_cast<std::uint64_t>(r)});
                try {
                  LabeledData data = generate_case(params, data_seed);
                  if (mask) data.x = mask->apply(data.x);
                  std::vector<bool> flags;
                  switch (method.family) {
                    case MethodSpec::Family::Ics: {
                      ScatterPair pair = parse_pair(tag);
                      pair.v1.mcd_seed = rng::derive_seed(data_seed, {1});
                      pair.v2.mcd_seed = rng::derive_seed(data_seed, {2});
                      DetectOptions opts;
                      opts.alpha = config.alpha;
                      opts.gamma = config.gamma;
                      opts.pa_reps = config.pa_reps;
                      opts.cutoff_reps = config.cutoff_reps;
                      opts.seed = config.seed;
                      opts.threads = 1;
                      DetectionReport rep = detect_ics(data.x, pair, method.rule, opts, tables);
                      flags = rep.flags;
                      out.k = static_cast<double>(rep.k_used.value_or(0));
                      break;
                    }
                    case MethodSpec::Family::Md:
                      flags = detect_md(data.x, config.gamma).flags;
                      break;
                    case MethodSpec::Family::Rd: {
                      ScatterSpec spec = ScatterSpec::mcd(rng::derive_seed(data_seed, {7}));
                      flags = detect_rd(data.x, config.gamma, spec).flags;
                      break;
                    }
                    case MethodSpec::Family::Pca:
                    case MethodSpec::Family::PcaStd: {
                      bool standardized = method.family == MethodSpec::Family::PcaStd;
                      const Matrix& x = data.x;
                      BestSelection best =
                          best_selection(data.labels, p - 1, [&](Index k) {
                            return detect_pca(x, k, standardized);
                          });
                      flags = best.report.flags;
                      out.k = static_cast<double>(best.k);
                      break;
                    }
                    case MethodSpec::Family::TrueSubspace:
                      flags = detect_true_subspace(data.x, data.q, *subspace_cutoff);
                      break;
                  }
                  TpFp rates = tp_fp(flags, data.labels);
                  out.tp = rates.tp_percent;
                  out.fp = rates.fp_percent;
                } catch (const numeric_error&) {
                  out.failed = true;
                }
              });

          CellResult cell;
          cell.case_id = case_id;
          cell.p = p;
          cell.pair = tag;
          cell.method = method.tag();
          cell.reps = config.reps;
          cell.seed = config.seed;
          double k_sum = 0, tp_sum = 0, fp_sum = 0;
          int k_count = 0, tp_count = 0, ok = 0;
          for (const ReplicateOutcome& out : outcomes) {
            if (out.failed) {
              ++cell.failures;
              continue;
            }
            ++ok;
            fp_sum += out.fp;
            if (out.k) {
              k_sum += *out.k;
              ++k_count;
            }
            if (out.tp) {
              tp_sum += *out.tp;
              ++tp_count;
            }
          }
          cell.marked = cell.failures * 10 > config.reps;
          if (!cell.marked && ok > 0) {
            cell.fp = fp_sum / ok;
            if (tp_count > 0) cell.tp = tp_sum / tp_count;
            if (k_count > 0) cell.mean_k = k_sum / k_count;
          }
          results.push_back(std::move(cell));
        }
      }
    }
  }
  return results;
}

std::vector<Prop1Row> prop1_diagnostic(const std::vector<Index>& p_grid, int reps,
                                       std::uint64_t seed, double shift) {
  if (reps < 100) throw std::invalid_argument("prop1_diagnostic: need at least 100 replicates");
  std::vector<Prop1Row> rows;
  for (Index p : p_grid) {
    if (p < 1) throw std::invalid_argument("prop1_diagnostic: p must be positive");
    rng::Engine eng = rng::substream(seed, static_cast<std::uint64_t>(p));
    Vector diffs(reps);
    for (int r = 0; r < reps; ++r) {
      double d_out = 0, d_clean = 0;
      for (Index j = 0; j < p; ++j) {
        double zo = rng::standard_normal(eng) + (j == 0 ? shift : 0.0);
        double zn = rng::standard_normal(eng);
        d_out += zo * zo;
        d_clean += zn * zn;
      }
      diffs[r] = d_out - d_clean;
    }
    Prop1Row row;
    row.p = p;
    row.mean_diff = diffs.mean();
    row.variance = (diffs.array() - row.mean_diff).square().sum() / static_cast<double>(reps - 1);
    double theo_mean = shift * shift;
    double theo_var = 4.0 * static_cast<double>(p) + 4.0 * shift * shift;
    Vector standardized = (diffs.array() - theo_mean) / std::sqrt(theo_var);
    row.ks_statistic = kolmogorov_statistic(standardized);
    row.normality_p = kolmogorov_pvalue(row.ks_statistic, reps);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ics::simgen
