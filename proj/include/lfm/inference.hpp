#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lfm/factor.hpp"
#include "lfm/panel.hpp"

namespace lfm {

/// Plug-in moments of a fitted model, computed over the identifiable periods.
/// sigma_F and xi_F are raw (uncentered) moments of the fitted factors; the
/// variance assemblies consume the centered fourth moment, i.e. the sample
/// covariance of vec(f f'), which equals xi_F - vec(sigma_F) vec(sigma_F)'.
///
/// The overlap profiles drive every correction-term weight. For period s,
///   unit_profile(s, j)   = W_js (1/N) sum_l W_ls / q_lj
///   period_profile(s, t) = (1/(N N_t)) sum_i W_is W_it (sum_l W_ls / q_li)
/// Both average exactly 1 over s on any mask and are identically 1 on a full
/// one. The second moment of unit_profile(., j) is the empirical omega_jj;
/// the period profile is its period-t analogue, restricted to the units the
/// factor regression at t actually uses.
struct MomentEstimates {
  Matrix sigma_F;               // r x r, F'F / T_ok
  Matrix sigma_F_inv;
  Matrix sigma_L;               // r x r, loadings'loadings / N (identity by construction)
  std::vector<Matrix> sigma_Lt; // T entries, (1/N) sum_i W_it L_i L_i'
  Matrix xi_F;                  // r^2 x r^2, (1/T_ok) sum_t vec(ff') vec(ff')'
  double sigma_e2 = 0.0;        // mean squared residual over observed entries

  Matrix unit_profile;          // T x N
  Matrix period_profile;        // T x T

  // carried along for the assemblies
  Matrix loadings;              // N x r
  Matrix factors_ok;            // T_ok x r
  std::vector<Index> ok_times;
  std::vector<char> factor_ok;
  std::vector<Matrix> sigma_LSt; // weighted-mode moments (1/N) sum_i W_it/p^2 L L'; empty if no probs
  Index n_units = 0;
  Index n_periods = 0;

  int rank() const { return static_cast<int>(sigma_F.rows()); }
  double delta() const {
    return static_cast<double>(n_units < n_periods ? n_units : n_periods);
  }
  /// Centered fourth moment of the fitted factors.
  Matrix xi_centered() const;
};

/// `probs` enables the weighted-mode variance terms; pass the matrix used in
/// the propensity-weighted regression.
MomentEstimates estimate_moments(const MaskedPanel& panel, const FactorModel& model,
                                 const Matrix* probs = nullptr);

/// Sample covariance over the identifiable periods of the vector processes
/// (A f_s f_s' u) and (B f_s f_s' v). This is the centered Xi_F plug-in
/// contracted on both sides; every "miss" variance block below is one of
/// these.
Matrix factor_quadratic_cov(const MomentEstimates& m, const Matrix& A, const Vector& u,
                            const Matrix& B, const Vector& v);

/// Sample variance of the scalar process a' f_s f_s' b.
double factor_quadratic_var(const MomentEstimates& m, const Vector& a, const Vector& b);

/// Which entries of the residual covariance are treated as nonzero when
/// assembling the Gamma^obs estimators. Diagonal means cross-sectionally and
/// serially independent residuals (only own-entry terms). UserSets names the
/// nonzero index pairs explicitly; set sizes are capped at O(N) per period and
/// O(NT) in total.
struct ResidualDependenceSpec {
  enum class Mode { Diagonal, UserSets };

  struct SerialPair {
    Index unit_i, time_t, unit_j, time_s;
  };

  Mode mode = Mode::Diagonal;
  std::vector<std::vector<std::pair<Index, Index>>> cross_sets; // per period: (i,j) unit pairs
  std::vector<SerialPair> serial_sets;

  static ResidualDependenceSpec diagonal() { return {}; }
  static ResidualDependenceSpec user(std::vector<std::vector<std::pair<Index, Index>>> cross,
                                     std::vector<SerialPair> serial = {});
};

/// Gamma^obs for the factor at period t:
///   (1/N) sum_{i,j} W_it W_jt L_i L_j' e_it e_jt 1{(i,j) in E_t}.
Matrix gamma_obs_factor(const MaskedPanel& panel, const FactorModel& model,
                        const ResidualDependenceSpec& dep, Index t);

/// Gamma^obs for the loading of unit j:
///   (T/N^2) sum_{i,k} L_i L_i' (1/(|Q_ij||Q_kj|)) sum_{t in Q_ij, s in Q_kj}
///       f_t f_s' L_k L_k' e_jt e_js 1{(j,t),(j,s) in E}.
/// Diagonal mode keeps only t = s. `stats` may be omitted (recomputed).
Matrix gamma_obs_loading(const MaskedPanel& panel, const FactorModel& model,
                         const ResidualDependenceSpec& dep, Index j,
                         const OverlapStats* stats = nullptr);

enum class VarTarget { Loading, Factor, Common };
enum class EstimatorMode { Plain, Weighted };

struct VarComponent {
  std::string label;
  Matrix value; // same scaling as VarianceReport::variance; components sum to it
};

struct VarianceReport {
  VarTarget target = VarTarget::Common;
  Index unit = -1;
  Index period = -1;
  Matrix variance;  // asymptotic variance of the rate-scaled estimator
  Vector se;        // standard error on the estimate's own scale (rates folded in)
  std::vector<VarComponent> components;
  double omega_jj = 1.0, omega_j = 1.0, omega = 1.0; // weights used
  bool psd_projected = false; // true when the assembly was indefinite beyond -1e-10

  double scalar() const { return variance(0, 0); }
};

/// Variance of sqrt(T) (Lhat_j - L_j) in the rotated parameterization:
///   omega_jj * sigma_e2 * SigmaF^-1  +  (omega_jj - 1) * Xi-sandwich(L_j).
VarianceReport var_loading(Index j, const MomentEstimates& m, const OmegaWeights& w);

/// Variance of sqrt(delta) (Fhat_t - F_t), two rate terms reported separately:
///   (delta/N) * obs + (delta/T) (omega - 1) * miss.
VarianceReport var_factor(Index t, const MomentEstimates& m, const OmegaWeights& w,
                          EstimatorMode mode = EstimatorMode::Plain);

/// Variance of sqrt(delta) (Chat_jt - C_jt); rotation-free. Five labeled
/// components: loading obs/miss, factor obs/miss, and the loading-factor
/// covariance term with weight -2 (omega_j - 1).
VarianceReport var_common(Index j, Index t, const MomentEstimates& m, const OmegaWeights& w,
                          EstimatorMode mode = EstimatorMode::Plain);

struct ConfidenceInterval {
  double lower = 0.0, upper = 0.0, level = 0.95;
};

/// point +/- z_{(1+level)/2} * se; the rate scaling is already inside se.
ConfidenceInterval confidence_interval(double point, double se, double level);
ConfidenceInterval confidence_interval(const VarianceReport& report, double point,
                                       double level);

}  // namespace lfm
