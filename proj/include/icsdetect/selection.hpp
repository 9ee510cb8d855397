#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "icsdetect/ics.hpp"

namespace ics {

enum class NormalityTest { DAgostino, AnscombeGlynn, BonettSeier, JarqueBera };

std::string to_string(NormalityTest t);
NormalityTest normality_test_from_string(const std::string& tag);

struct TestResult {
  double statistic = 0;
  double p_value = 1;
};

/// D'Agostino (1970) transformed skewness test; two-sided.
TestResult dagostino_skewness(const Vector& x);
/// Anscombe-Glynn (1983) transformed kurtosis test; two-sided.
TestResult anscombe_glynn_kurtosis(const Vector& x);
/// Bonett-Seier (2002) test of Geary's kurtosis; two-sided.
TestResult bonett_seier_geary(const Vector& x);
/// Jarque-Bera omnibus statistic against chi-square(2).
TestResult jarque_bera(const Vector& x);

TestResult run_normality_test(const Vector& x, NormalityTest test);

enum class SelectionMethod { Pa, DAgostino, AnscombeGlynn, BonettSeier, JarqueBera, ScreeData, Fixed };

std::string to_string(SelectionMethod m);

struct ComponentDecision {
  Index component = 0;   // 1-based rank
  double statistic = 0;  // eigenvalue (PA) or test statistic
  double threshold = 0;  // PA cutoff or p-value
  double level = 0;      // Bonferroni level alpha / component
  bool selected = false;
};

struct SelectionOutcome {
  Index k = 0;
  SelectionMethod method = SelectionMethod::Fixed;
  std::vector<ComponentDecision> components;
};

/// Monte-Carlo eigenvalue cutoffs under a standard Gaussian null. The rank-j
/// cutoff is the empirical (1 - alpha/j) quantile of the j-th eigenvalue
/// across replicates.
struct PaTable {
  Index n = 0;
  Index p = 0;
  std::string pair;
  double alpha = 0.05;
  int reps = 0;
  std::uint64_t seed = 0;
  Vector cutoffs;
  int redraws = 0;
};

PaTable pa_table(Index n, Index p, const ScatterPair& pair, double alpha, int reps,
                 std::uint64_t seed, int threads = 1);

/// Sequential comparison of eigenvalues against PA cutoffs; stops at the
/// first rank below its cutoff.
SelectionOutcome select_pa(const Vector& eigenvalues, const PaTable& table);

/// Sequential univariate normality testing of score columns at Bonferroni
/// levels alpha/j; stops at the first non-rejection.
SelectionOutcome select_normality(const Matrix& scores, NormalityTest test, double alpha);

/// (rank, eigenvalue) rows for external scree plotting.
std::vector<std::pair<Index, double>> scree_data(const Vector& eigenvalues);

/// Order-statistic quantile with linear interpolation (R type 7).
double empirical_quantile(std::vector<double> values, double q);

}  // namespace ics
