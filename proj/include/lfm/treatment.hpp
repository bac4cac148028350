#pragma once

#include <optional>
#include <vector>

#include "lfm/inference.hpp"
#include "lfm/propensity.hpp"

namespace lfm {

/// Outcome panel with an absorbing adoption schedule. adopt_time[i] is the
/// first treated period (0-based); adopt_time[i] == T means never treated.
/// Entry (i,t) is treated iff t >= adopt_time[i]. Control observations are
/// the untreated entries; treated entries are modeled as missing when the
/// control factor model is estimated.
struct TreatmentPanel {
  Matrix outcomes; // N x T, observed outcome (treated or control)
  std::vector<Index> adopt_time;
  std::optional<CovariateVector> covariates;

  Index units() const { return outcomes.rows(); }
  Index periods() const { return outcomes.cols(); }
  bool treated(Index i, Index t) const { return t >= adopt_time[static_cast<std::size_t>(i)]; }
  bool ever_treated(Index i) const { return adopt_time[static_cast<std::size_t>(i)] < periods(); }

  static TreatmentPanel make(Matrix outcomes, std::vector<Index> adopt_time,
                             std::optional<CovariateVector> covariates = std::nullopt);
};

/// The control observations as a masked panel (treated entries missing).
MaskedPanel control_panel(const TreatmentPanel& tp);

/// Factor model estimated from the incomplete control panel; the factors span
/// both regimes.
FactorModel fit_control(const TreatmentPanel& tp, int rank, const FitOptions& options = {});

/// Time-series OLS of a unit's outcomes on the fitted factors over an
/// arbitrary period set (identifiable periods only).
Vector regress_loading_on_periods(const FactorModel& model, const Vector& outcomes,
                                  const std::vector<Index>& periods);

/// Treated-regime loadings, one OLS per ever-treated unit over its treated
/// periods. Rows of never-treated units are NaN.
Matrix estimate_treated_loadings(const TreatmentPanel& tp, const FactorModel& model);

enum class Alternative { TwoSided, Greater, Less };

struct EffectTestResult {
  Vector estimate;
  Vector se;
  Vector z_stat;
  Vector p_value;
  bool null_imposed = true;
  Matrix variance; // of the estimate itself (rates folded in)
  std::vector<VarComponent> components;

  double scalar_estimate() const { return estimate(0); }
};

struct TestOptions {
  bool null_imposed = true;
  Alternative alternative = Alternative::TwoSided;
};

/// Everything the tests need that depends only on (panel, model): moments and
/// omega weights of the control mask plus the treated-loading matrix. Building
/// it once amortizes repeated tests on the same fit.
struct TreatmentContext {
  MomentEstimates moments;
  OmegaWeights omega;
  Matrix treated_loadings;
};

TreatmentContext make_treatment_context(const TreatmentPanel& tp, const FactorModel& model);

/// Individual effect tau_it = C1_it - C0_it at a treated (i,t).
EffectTestResult test_individual(const TreatmentPanel& tp, const FactorModel& model,
                                 const TreatmentContext& ctx, Index i, Index t,
                                 const TestOptions& options = {});
EffectTestResult test_individual(const TreatmentPanel& tp, const FactorModel& model, Index i,
                                 Index t, const TestOptions& options = {});

/// Z-weighted effect beta1_i - beta0_i, Z rows aligned with unit i's treated
/// periods in increasing time order (rows at unidentifiable periods are
/// dropped). Z = ones recovers the time-averaged effect.
EffectTestResult test_weighted(const TreatmentPanel& tp, const FactorModel& model,
                               const TreatmentContext& ctx, Index i, const Matrix& Z,
                               const TestOptions& options = {});
EffectTestResult test_weighted(const TreatmentPanel& tp, const FactorModel& model, Index i,
                               const Matrix& Z, const TestOptions& options = {});

/// Average effect over unit i's treated window (test_weighted with Z = 1).
EffectTestResult test_average(const TreatmentPanel& tp, const FactorModel& model,
                              const TreatmentContext& ctx, Index i,
                              const TestOptions& options = {});
EffectTestResult test_average(const TreatmentPanel& tp, const FactorModel& model, Index i,
                              const TestOptions& options = {});

}  // namespace lfm
