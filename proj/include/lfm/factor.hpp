#pragma once

#include <vector>

#include "lfm/covariance.hpp"
#include "lfm/panel.hpp"

namespace lfm {

/// Estimated factor model. Identification: loadings scaled so that
/// loadings^T loadings / N = I_r, eigenvalues descending, each loading column
/// signed so its largest-magnitude entry is positive. Periods where the
/// cross-sectional regression is rank-deficient carry factor_ok = false and
/// NaN factor rows.
struct FactorModel {
  Matrix loadings;    // N x r
  Matrix factors;     // T x r
  Vector eigenvalues; // r, descending, eigenvalues of Sigma/N
  int rank = 0;
  bool weighted = false;
  std::vector<char> factor_ok; // length T

  Index units() const { return loadings.rows(); }
  Index periods() const { return factors.rows(); }
  Index ok_count() const;

  /// Common component at a single entry: loadings.row(i) * factors.row(t)^T.
  double common(Index i, Index t) const { return loadings.row(i).dot(factors.row(t)); }
  /// Full N x T common-component matrix.
  Matrix common_matrix() const { return loadings * factors.transpose(); }
};

struct LoadingEstimate {
  Matrix loadings;    // N x r, sqrt(N)-scaled top eigenvectors of Sigma/N
  Vector eigenvalues; // descending
};

/// PCA step: sqrt(N) times the top-r eigenvectors of Sigma/N.
LoadingEstimate estimate_loadings(const ReweightedCovariance& cov, int rank);

struct FactorEstimate {
  Matrix factors;      // T x r, NaN rows where not identified
  std::vector<char> ok;
};

/// Reciprocal-condition-number floor below which a period's r x r Gram matrix
/// is treated as singular and the period flagged instead of solved.
inline constexpr double kGramRcondTol = 1e-10;

/// Per-period cross-sectional OLS of observed outcomes on the loadings.
FactorEstimate estimate_factors(const MaskedPanel& panel, const Matrix& loadings);

/// Weighted variant with weights W_it / p_it. `probs` is N x T; observed
/// entries with probs below p_floor throw PropensityUnderflow.
FactorEstimate estimate_factors_weighted(const MaskedPanel& panel, const Matrix& loadings,
                                         const Matrix& probs, double p_floor = 0.01);

struct FitOptions {
  int min_overlap = -1;  // <= 0 selects default_min_overlap(T)
  bool demean = false;
  bool weighted = false;
  const Matrix* propensity = nullptr; // required when weighted
  double p_floor = 0.01;
};

/// Full pipeline: overlap counts -> reweighted covariance -> PCA loadings ->
/// per-period factor regression.
FactorModel fit(const MaskedPanel& panel, int rank, const FitOptions& options = {});

struct ImputedPanel {
  Matrix completed; // observed entries copied, missing entries = common
  Matrix common;    // common component everywhere
  Matrix residuals; // values - common where observed, NaN elsewhere
};

ImputedPanel impute(const MaskedPanel& panel, const FactorModel& model);

struct RankSelection {
  int rank = 0;
  Vector ratios;        // ratios[k] = lambda_{k+1}/lambda_{k+2}, k = 0..r_max-1
  bool decisive = false; // false when no ratio clearly dominates
};

/// Eigenvalue-ratio rank choice: argmax_{k <= r_max} lambda_k / lambda_{k+1}.
/// Throws SpectrumDegenerate when all ratios coincide to within 1e-8.
RankSelection select_rank(const ReweightedCovariance& cov, int r_max);

/// Repeats { complete the panel with the current common component at missing
/// entries; re-fit full-panel PCA } n_iter times. Observed entries are never
/// altered. Point estimation only: no inferential theory attaches to the
/// refined model under general observation patterns.
FactorModel iterate_refine(const MaskedPanel& panel, const FactorModel& model, int n_iter);

}  // namespace lfm
