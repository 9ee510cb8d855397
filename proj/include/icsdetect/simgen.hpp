#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "icsdetect/detection.hpp"

namespace ics::simgen {

/// Contamination benchmark parameters. Cases follow the fixed catalogue:
///   0  clean standard Gaussian
///   1  mean shift 6 e1, within-covariance diag(1,4,...,4)
///   2  barrow wheel: signed chi_5 radial first coordinate, 0.2 I noise
///   3  two mean-shift clusters (6 e1, 6.2 e2), diag(1,1,4,...,4)
///   4  six mean-shift clusters (6 + 0.1 (i-1)) e_i
///   5  scale shift: outliers from diag(5 x 6, 1, ...) kept only beyond the
///      regular sample's componentwise extremes
struct CaseParams {
  int case_id = 0;
  Index n = 1000;
  Index p = 6;
  double epsilon = 0.02;

  Index outlier_count() const;
  Index subspace_dim() const;
  void validate() const;
};

struct LabeledData {
  Matrix x;
  std::vector<bool> labels;  // true = outlier
  Index q = 0;
  std::uint64_t seed = 0;
};

/// Deterministic labeled sample of the requested case: exact outlier counts,
/// rows shuffled.
LabeledData generate_case(const CaseParams& params, std::uint64_t seed);

struct TpFp {
  std::optional<double> tp_percent;  // absent when there are no outliers
  double fp_percent = 0;
};

TpFp tp_fp(const std::vector<bool>& flags, const std::vector<bool>& labels);

/// Random full-rank affine transform used to mask the outlier structure;
/// scale dependent methods react, affine invariant ones do not.
struct AffineTransform {
  Matrix a;  // p x p, full rank
  Vector b;
  Matrix apply(const Matrix& x) const;
};

AffineTransform make_masking_transform(Index p, std::uint64_t seed);

struct MethodSpec {
  enum class Family { Ics, Md, Rd, Pca, PcaStd, TrueSubspace };
  Family family = Family::Ics;
  SelectionRule rule;  // Ics family only

  std::string tag() const;
  /// "ics:pa", "ics:da", ..., "ics:fixed:K", "md", "rd", "pca", "pca-std",
  /// "true-subspace"
  static MethodSpec parse(const std::string& text);
};

struct ExperimentConfig {
  std::vector<int> cases{0, 1, 2, 3, 4, 5};
  std::vector<Index> dims{6};
  Index n = 1000;
  std::vector<std::string> pairs{"cov-cov4"};  // applied to ICS rows
  std::vector<MethodSpec> methods;
  int reps = 100;
  double alpha = 0.05;
  double gamma = 0.02;
  int pa_reps = 1000;
  int cutoff_reps = 100;
  bool mask_affine = false;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct CellResult {
  int case_id = 0;
  Index p = 0;
  std::string pair;    // empty for pair-free methods
  std::string method;
  std::optional<double> mean_k;
  std::optional<double> tp;
  std::optional<double> fp;
  int reps = 0;
  std::uint64_t seed = 0;
  int failures = 0;
  bool marked = false;  // more than 10% replicate failures
};

/// Per-cell mean TP, FP and selected dimension over seeded replicates; all
/// methods of a cell see the same generated samples.
std::vector<CellResult> run_experiment(const ExperimentConfig& config, TableStore& tables);

struct Prop1Row {
  Index p = 0;
  double mean_diff = 0;
  double variance = 0;
  double ks_statistic = 0;
  double normality_p = 0;
};

/// Simulates the difference of squared robust distances between a shifted
/// and a clean observation under an identity-covariance mean-shift model;
/// reports its mean, variance and a Kolmogorov-Smirnov normality p-value of
/// the theoretically standardized differences.
std::vector<Prop1Row> prop1_diagnostic(const std::vector<Index>& p_grid, int reps,
                                       std::uint64_t seed, double shift = 2.0);

}  // namespace ics::simgen
