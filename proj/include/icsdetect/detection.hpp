#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "icsdetect/selection.hpp"

namespace ics {

/// How many invariant components to keep before computing ICS distances.
struct SelectionRule {
  enum class Kind { Pa, Normality, Fixed, None };
  Kind kind = Kind::Pa;
  NormalityTest test = NormalityTest::DAgostino;  // Kind::Normality
  Index fixed_k = 1;                              // Kind::Fixed

  std::string tag() const;
  /// Accepts "pa", "da", "ag", "bs", "jb", "fixed:K" and "none"
  /// (none keeps all p components).
  static SelectionRule parse(const std::string& text);
};

/// Monte-Carlo ICS distance cutoff for a fixed component count k: pooled
/// squared distances over all null replicates, cut at the (1-gamma) quantile.
struct CutoffTable {
  Index n = 0;
  Index p = 0;
  std::string pair;
  Index k = 0;
  double gamma = 0.02;
  int reps = 0;
  std::uint64_t seed = 0;
  double cutoff = 0;
  int redraws = 0;
};

CutoffTable ics_cutoff(Index n, Index p, const ScatterPair& pair, Index k, double gamma,
                       int reps, std::uint64_t seed, int threads = 1);

struct DetectionReport {
  std::string method;  // "ics", "md", "rd", "pca", "pca-std"
  std::string pair;    // ics only
  Index n = 0;
  Index p = 0;
  Vector distances_sq;
  std::optional<double> cutoff;  // absent when no component is selected
  std::vector<bool> flags;
  std::optional<Index> k_used;
  double gamma = 0.02;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::optional<SelectionOutcome> selection;
  Vector eigenvalues;              // ics: generalized eigenvalues; pca: variances
  Matrix component_correlations;   // ics: k x p, corr(component, variable)
  // PCA diagnostics; distances_sq holds max of the squared standardized
  // score/orthogonal distances and cutoff is 1.
  Vector pca_score_dist;
  Vector pca_orth_dist;
  std::optional<double> pca_sd_cutoff;
  std::optional<double> pca_od_cutoff;

  std::size_t flag_count() const;
};

/// Cache of PA and cutoff tables, keyed by their defining parameters,
/// optionally persisted as JSON files in a directory.
class TableStore {
 public:
  TableStore() = default;
  explicit TableStore(std::filesystem::path dir);

  PaTable pa(Index n, Index p, const ScatterPair& pair, double alpha, int reps,
             std::uint64_t seed, int threads = 1);
  CutoffTable cutoff(Index n, Index p, const ScatterPair& pair, Index k, double gamma,
                     int reps, std::uint64_t seed, int threads = 1);

  const std::filesystem::path& directory() const { return dir_; }
  int builds() const { return builds_; }
  int hits() const { return hits_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, PaTable> pa_cache_;
  std::map<std::string, CutoffTable> cutoff_cache_;
  std::mutex mutex_;
  int builds_ = 0;
  int hits_ = 0;
};

struct DetectOptions {
  double alpha = 0.05;
  double gamma = 0.02;
  int pa_reps = 1000;
  int cutoff_reps = 100;
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Full ICS pipeline: invariant coordinates, component selection, distances
/// over the selected components, Monte-Carlo cutoff, flags.
DetectionReport detect_ics(const Matrix& x, const ScatterPair& pair, const SelectionRule& rule,
                           const DetectOptions& opts, TableStore& tables);

/// Classical Mahalanobis detector with the chi-square(p) cutoff at 1-gamma.
DetectionReport detect_md(const Matrix& x, double gamma);

/// Robust distances under the reweighted MCD, chi-square(p) cutoff.
DetectionReport detect_rd(const Matrix& x, double gamma, const ScatterSpec& mcd_spec = ScatterSpec::mcd());

/// PCA detector with k components: score distances against the chi-square(k)
/// quantile, orthogonal distances against a Wilson-Hilferty cutoff; an
/// observation is flagged when either distance exceeds its cutoff.
DetectionReport detect_pca(const Matrix& x, Index k, bool standardized, double flag_level = 0.99);

struct BestSelection {
  Index k = 0;
  DetectionReport report;
  int ntp = 0;
  int nfp = 0;
};

/// Scans k = 1..k_max and keeps the dimension with the most true positives,
/// ties broken by fewer false positives, then by smaller k.
BestSelection best_selection(const std::vector<bool>& labels, Index k_max,
                             const std::function<DetectionReport(Index)>& detector_at_k);

}  // namespace ics
