#pragma once

#include <string>
#include <vector>

#include "lfm/factor.hpp"
#include "lfm/panel.hpp"

namespace lfm {

enum class ColumnKind { Discrete, Continuous };

/// Time-invariant per-unit covariates S (N x K). Discrete columns may take at
/// most 64 distinct levels.
struct CovariateVector {
  Matrix values; // N x K
  std::vector<ColumnKind> kinds;
  std::vector<std::string> names;

  Index units() const { return values.rows(); }
  Index cols() const { return values.cols(); }

  static CovariateVector make(Matrix values, std::vector<ColumnKind> kinds,
                              std::vector<std::string> names = {});
};

enum class PropensityModel { Constant, DiscreteFreq, LogitPooled, LogitPerT };

struct PropensityDiagnostics {
  std::vector<int> iterations;   // per fit (one entry pooled, T entries per-t)
  std::vector<long> cell_counts; // discrete-frequency cell sizes
  std::vector<Index> fallback_periods; // per-t fits that fell back / were degenerate
};

/// Estimated observation probabilities, clamped into [p_floor, 1].
struct PropensityEstimate {
  Matrix probs; // N x T
  PropensityModel model = PropensityModel::Constant;
  PropensityDiagnostics diagnostics;

  static PropensityEstimate constant(Index n, Index T, double p = 1.0);
};

struct PropensityOptions {
  double p_floor = 0.01;
  long min_cell = 10;    // smallest admissible discrete-level population
  int max_iter = 50;     // Newton iterations for the logit MLE
  double grad_tol = 1e-8;
};

/// Per-period frequency estimator for discrete covariates:
/// p(t, s) = #{observed units at t with level s} / #{units with level s}.
PropensityEstimate estimate_discrete_freq(const MaskedPanel& panel, const CovariateVector& S,
                                          const PropensityOptions& options = {});

/// One logistic regression of all W_it on S_i (time-invariant probability).
PropensityEstimate estimate_logit_pooled(const MaskedPanel& panel, const CovariateVector& S,
                                         const PropensityOptions& options = {});

/// One logistic regression per period. Periods where every unit is observed
/// get p = 1; separated periods fall back to the frequency estimator when all
/// covariates are discrete and are flagged otherwise.
PropensityEstimate estimate_logit_per_t(const MaskedPanel& panel, const CovariateVector& S,
                                        const PropensityOptions& options = {});

/// The fitted loadings as continuous covariates (the loading estimate does not
/// depend on the propensity weights, so this is not circular).
CovariateVector use_loadings_as_covariates(const FactorModel& model);

/// Weighted factor regression taking a PropensityEstimate directly.
inline FactorEstimate estimate_factors_weighted(const MaskedPanel& panel,
                                                const Matrix& loadings,
                                                const PropensityEstimate& prop,
                                                double p_floor = 0.01) {
  return estimate_factors_weighted(panel, loadings, prop.probs, p_floor);
}

}  // namespace lfm
