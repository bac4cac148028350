#include "lfm/treatment.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

#include "lfm/stats.hpp"

namespace lfm {

namespace {

Matrix invert_spd_or_throw(const Matrix& a, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
  if (es.info() != Eigen::Success || !(hi > 0.0) ||
      es.eigenvalues().minCoeff() < 1e-12 * hi)
    throw SingularMoment(std::string(what) + " is numerically singular");
  return es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

/// Identifiable treated periods of unit i, in increasing time order.
std::vector<Index> treated_ok_periods(const TreatmentPanel& tp, const FactorModel& model,
                                      Index i) {
  std::vector<Index> periods;
  for (Index t = tp.adopt_time[static_cast<std::size_t>(i)]; t < tp.periods(); ++t)
    if (model.factor_ok[static_cast<std::size_t>(t)]) periods.push_back(t);
  return periods;
}

void fill_tail(EffectTestResult& res, Alternative alt) {
  const Index L = res.estimate.size();
  res.z_stat.resize(L);
  res.p_value.resize(L);
  for (Index l = 0; l < L; ++l) {
    const double se = res.se(l);
    const double z = se > 0.0 ? res.estimate(l) / se
                              : (res.estimate(l) == 0.0
                                     ? 0.0
                                     : std::numeric_limits<double>::infinity() *
                                           (res.estimate(l) > 0 ? 1.0 : -1.0));
    res.z_stat(l) = z;
    switch (alt) {
      case Alternative::TwoSided: res.p_value(l) = stats::p_value_two_sided(z); break;
      case Alternative::Greater: res.p_value(l) = stats::normal_cdf(-z); break;
      case Alternative::Less: res.p_value(l) = stats::normal_cdf(z); break;
    }
  }
}

}  // namespace

TreatmentPanel TreatmentPanel::make(Matrix outcomes, std::vector<Index> adopt_time,
                                    std::optional<CovariateVector> covariates) {
  const Index n = outcomes.rows(), T = outcomes.cols();
  if (static_cast<Index>(adopt_time.size()) != n)
    throw DimensionMismatch("one adoption time per unit required");
  for (Index i = 0; i < n; ++i) {
    const Index a = adopt_time[static_cast<std::size_t>(i)];
    if (a < 1 || a > T)
      throw ConfigError("unit " + std::to_string(i) +
                        " needs at least one pre-period (adopt_time in [1, T])");
  }
  if (covariates && covariates->units() != n)
    throw DimensionMismatch("covariates do not match panel");
  return TreatmentPanel{std::move(outcomes), std::move(adopt_time), std::move(covariates)};
}

MaskedPanel control_panel(const TreatmentPanel& tp) {
  const Index n = tp.units(), T = tp.periods();
  MaskMatrix mask(n, T);
  for (Index i = 0; i < n; ++i)
    for (Index t = 0; t < T; ++t) mask(i, t) = tp.treated(i, t) ? 0 : 1;
  return MaskedPanel::make(tp.outcomes, std::move(mask));
}

FactorModel fit_control(const TreatmentPanel& tp, int rank, const FitOptions& options) {
  return fit(control_panel(tp), rank, options);
}

Vector regress_loading_on_periods(const FactorModel& model, const Vector& outcomes,
                                  const std::vector<Index>& periods) {
  const int r = model.rank;
  Matrix gram = Matrix::Zero(r, r);
  Vector moment = Vector::Zero(r);
  for (Index t : periods) {
    if (!model.factor_ok[static_cast<std::size_t>(t)]) continue;
    const auto f = model.factors.row(t);
    gram.noalias() += f.transpose() * f;
    moment.noalias() += f.transpose() * outcomes(t);
  }
  return invert_spd_or_throw(gram, "treated-window factor Gram matrix") * moment;
}

Matrix estimate_treated_loadings(const TreatmentPanel& tp, const FactorModel& model) {
  const Index n = tp.units();
  if (model.units() != n || model.periods() != tp.periods())
    throw DimensionMismatch("model does not match treatment panel");

  Matrix out = Matrix::Constant(n, model.rank, std::numeric_limits<double>::quiet_NaN());
  for (Index i = 0; i < n; ++i) {
    if (!tp.ever_treated(i)) continue;
    const std::vector<Index> periods = treated_ok_periods(tp, model, i);
    if (static_cast<int>(periods.size()) < model.rank)
      throw TreatedWindowTooShort(i, static_cast<long>(periods.size()), model.rank);
    out.row(i) =
        regress_loading_on_periods(model, tp.outcomes.row(i).transpose(), periods)
            .transpose();
  }
  return out;
}

TreatmentContext make_treatment_context(const TreatmentPanel& tp, const FactorModel& model) {
  const MaskedPanel control = control_panel(tp);
  TreatmentContext ctx;
  ctx.moments = estimate_moments(control, model);
  ctx.omega = compute_omega_weights(control, compute_overlap(control));
  ctx.treated_loadings = estimate_treated_loadings(tp, model);
  return ctx;
}

namespace {

/// Contraction of the centered factor fourth moment:
/// XiK(u, v) = E_c[(f f' u)(f f' v)'], an r x r covariance block.
Matrix xi_kron(const Matrix& xi_centered, const Vector& u, const Vector& v) {
  const Index r = u.size();
  Matrix out = Matrix::Zero(r, r);
  for (Index b = 0; b < r; ++b)
    for (Index beta = 0; beta < r; ++beta) {
      double acc = 0;
      for (Index c = 0; c < r; ++c)
        for (Index e = 0; e < r; ++e)
          acc += u(c) * v(e) * xi_centered(c * r + b, e * r + beta);
      out(b, beta) = acc;
    }
  return out;
}

struct UnitSetup {
  std::vector<Index> periods; // identifiable treated periods
  Vector lam0, lam1, lam1_var, delta_var; // estimates and the variance versions
  Matrix sigma_F_T;                        // treated-window factor second moment
  double t1 = 0;                           // number of identifiable treated periods
};

UnitSetup unit_setup(const TreatmentPanel& tp, const FactorModel& model,
                     const TreatmentContext& ctx, Index i, bool null_imposed) {
  if (i < 0 || i >= tp.units()) throw DimensionMismatch("unit index out of range");
  if (!tp.ever_treated(i)) throw NotTreatedAt(i, tp.periods() - 1);

  UnitSetup s;
  s.periods = treated_ok_periods(tp, model, i);
  if (static_cast<int>(s.periods.size()) < model.rank)
    throw TreatedWindowTooShort(i, static_cast<long>(s.periods.size()), model.rank);
  s.t1 = static_cast<double>(s.periods.size());

  s.lam0 = model.loadings.row(i).transpose();
  s.lam1 = ctx.treated_loadings.row(i).transpose();
  s.lam1_var = null_imposed ? s.lam0 : s.lam1;
  s.delta_var = null_imposed ? Vector::Zero(model.rank).eval() : (s.lam1 - s.lam0).eval();

  s.sigma_F_T = Matrix::Zero(model.rank, model.rank);
  for (Index t : s.periods) {
    const auto f = model.factors.row(t);
    s.sigma_F_T.noalias() += f.transpose() * f;
  }
  s.sigma_F_T /= s.t1;
  return s;
}

/// Missing-pattern machinery shared by the individual and weighted tests.
/// Three centered error processes add up per period s:
///   + (treated-loading contamination) with the treated-window profile,
///   - (control-loading miss)          with unit i's profile,
///   - (factor miss)                   with the target-period profiles.
/// The factor draws are independent across s, so the variance is the per-s
/// sum of the 3 x 3 covariance grid, each block a contraction of the
/// centered fourth moment.
struct MissMachine {
  Matrix k11, k00, kdd, k10, k1d, k0d; // XiK blocks for (lam1, lam0, delta)
  Matrix p_flat;                       // r^2 x T: column s = vec(P_s), contiguous
  Vector pi0;                          // T: unit-i profile minus one
  double t_all = 0;
  int r = 0;

  MissMachine(const MomentEstimates& m, const UnitSetup& s, Index i) {
    r = m.rank();
    t_all = static_cast<double>(m.n_periods);
    const Matrix xi_c = m.xi_centered();
    k11 = xi_kron(xi_c, s.lam1_var, s.lam1_var);
    k00 = xi_kron(xi_c, s.lam0, s.lam0);
    kdd = xi_kron(xi_c, s.delta_var, s.delta_var);
    k10 = xi_kron(xi_c, s.lam1_var, s.lam0);
    k1d = xi_kron(xi_c, s.lam1_var, s.delta_var);
    k0d = xi_kron(xi_c, s.lam0, s.delta_var);
    pi0 = m.unit_profile.col(i).array() - 1.0;

    // P_s = (1/T1) sum_{u in treated} (period_profile(s,u) - 1) f_u f_u'
    const Index t1 = static_cast<Index>(s.periods.size());
    Matrix ff_flat(t1, r * r);
    Matrix centered_profiles(m.n_periods, t1);
    for (Index k = 0; k < t1; ++k) {
      const Index u = s.periods[static_cast<std::size_t>(k)];
      centered_profiles.col(k) = m.period_profile.col(u).array() - 1.0;
      const Vector f = row_factor(m, u);
      const Matrix ffu = f * f.transpose();
      ff_flat.row(k) = Eigen::Map<const Vector>(ffu.data(), r * r).transpose();
    }
    p_flat = (centered_profiles * ff_flat).transpose() / static_cast<double>(t1);
  }

  Matrix p_at(Index s) const {
    return Eigen::Map<const Matrix>(p_flat.col(s).data(), r, r);
  }

  static Vector row_factor(const MomentEstimates& m, Index t) {
    const auto it = std::lower_bound(m.ok_times.begin(), m.ok_times.end(), t);
    if (it == m.ok_times.end() || *it != t) throw PeriodUnidentified(t);
    return m.factors_ok.row(it - m.ok_times.begin()).transpose();
  }

  /// Sum over s of the covariance grid for per-s contraction rows
  /// B1_s (contamination), B2_s (control loading), B3_s (factor). Each is
  /// L x r; the result is the L x L miss variance (already divided by T^2).
  template <typename B1Fn, typename B2Fn, typename B3Fn>
  Matrix accumulate(Index L, B1Fn b1_at, B2Fn b2_at, B3Fn b3_at) const {
    Matrix acc = Matrix::Zero(L, L);
    const Index T = static_cast<Index>(t_all);
    for (Index s = 0; s < T; ++s) {
      const Matrix b1 = b1_at(s);
      const Matrix b2 = b2_at(s);
      const Matrix b3 = b3_at(s);
      acc.noalias() += b1 * k11 * b1.transpose();
      acc.noalias() += b2 * k00 * b2.transpose();
      acc.noalias() += b3 * kdd * b3.transpose();
      const Matrix c10 = b1 * k10 * b2.transpose();
      acc.noalias() -= c10 + c10.transpose();
      const Matrix c1d = b1 * k1d * b3.transpose();
      acc.noalias() -= c1d + c1d.transpose();
      const Matrix c0d = b2 * k0d * b3.transpose();
      acc.noalias() += c0d + c0d.transpose();
    }
    return acc / (t_all * t_all);
  }
};

}  // namespace

EffectTestResult test_individual(const TreatmentPanel& tp, const FactorModel& model,
                                 const TreatmentContext& ctx, Index i, Index t,
                                 const TestOptions& options) {
  if (i < 0 || i >= tp.units() || t < 0 || t >= tp.periods())
    throw DimensionMismatch("index out of range");
  if (!tp.treated(i, t)) throw NotTreatedAt(i, t);
  if (!model.factor_ok[static_cast<std::size_t>(t)]) throw PeriodUnidentified(t);

  const MomentEstimates& m = ctx.moments;
  const UnitSetup s = unit_setup(tp, model, ctx, i, options.null_imposed);
  const Vector ft = model.factors.row(t).transpose();
  const double n = static_cast<double>(tp.units());
  const double T = static_cast<double>(tp.periods());

  const double om_jj = ctx.omega.omega_jj(i);

  // observation-noise pieces (mutually independent)
  const Matrix sigma_F_T_inv = invert_spd_or_throw(s.sigma_F_T, "sigma_F_T");
  const double reg_noise = m.sigma_e2 * ft.dot(sigma_F_T_inv * ft) / s.t1;
  const double load_obs = om_jj * m.sigma_e2 * ft.dot(m.sigma_F_inv * ft) / T;
  const double fact_obs =
      m.sigma_e2 *
      s.delta_var.dot(
          invert_spd_or_throw(m.sigma_Lt[static_cast<std::size_t>(t)], "sigma_Lt") *
          s.delta_var) /
      n;

  // missing-pattern correction
  const MissMachine mm(m, s, i);
  const Eigen::RowVectorXd base1 = ft.transpose() * sigma_F_T_inv;
  const Eigen::RowVectorXd base = ft.transpose() * m.sigma_F_inv;
  const Vector pi_t = m.period_profile.col(t).array() - 1.0;
  const double miss =
      mm.accumulate(
            1, [&](Index sidx) { return Matrix(base1 * mm.p_at(sidx) * m.sigma_F_inv); },
            [&](Index sidx) { return Matrix(mm.pi0(sidx) * base); },
            [&](Index sidx) { return Matrix(pi_t(sidx) * base); })(0, 0);

  EffectTestResult res;
  res.null_imposed = options.null_imposed;
  res.estimate = Vector::Constant(1, (s.lam1 - s.lam0).dot(ft));
  auto scalar = [](double x) { return Matrix::Constant(1, 1, x); };
  res.components = {{"treated_reg_noise", scalar(reg_noise)},
                    {"control_loading_obs", scalar(load_obs)},
                    {"factor_obs", scalar(fact_obs)},
                    {"miss_correction", scalar(miss)}};
  const double var = std::max(0.0, reg_noise + load_obs + fact_obs + miss);
  res.variance = scalar(var);
  res.se = Vector::Constant(1, std::sqrt(var));
  fill_tail(res, options.alternative);
  return res;
}

EffectTestResult test_weighted(const TreatmentPanel& tp, const FactorModel& model,
                               const TreatmentContext& ctx, Index i, const Matrix& Z,
                               const TestOptions& options) {
  const MomentEstimates& m = ctx.moments;
  const UnitSetup s = unit_setup(tp, model, ctx, i, options.null_imposed);
  const Index L = Z.cols();
  const double n = static_cast<double>(tp.units());
  const double T = static_cast<double>(tp.periods());

  // Z rows align with the full treated window; keep rows at identifiable periods.
  const Index window =
      tp.periods() - tp.adopt_time[static_cast<std::size_t>(i)];
  if (Z.rows() != window && Z.rows() != static_cast<Index>(s.periods.size()))
    throw DimensionMismatch("Z must have one row per treated period of the unit");

  Matrix z_ok(static_cast<Index>(s.periods.size()), L);
  if (Z.rows() == window) {
    Index k = 0;
    for (Index t : s.periods)
      z_ok.row(k++) = Z.row(t - tp.adopt_time[static_cast<std::size_t>(i)]);
  } else {
    z_ok = Z;
  }

  const Matrix sigma_Z = z_ok.transpose() * z_ok / s.t1;
  Eigen::SelfAdjointEigenSolver<Matrix> zs(sigma_Z);
  const double z_hi = zs.eigenvalues().cwiseAbs().maxCoeff();
  if (!(z_hi > 0.0) || zs.eigenvalues().minCoeff() < 1e-12 * z_hi)
    throw SingularZ("Z'Z is numerically singular");
  const Matrix sigma_Z_inv = zs.eigenvectors() * zs.eigenvalues().cwiseInverse().asDiagonal() *
                             zs.eigenvectors().transpose();

  Matrix sigma_ZF = Matrix::Zero(L, model.rank); // (1/T1) sum Z_s f_s'
  {
    Index k = 0;
    for (Index t : s.periods) {
      sigma_ZF.noalias() += z_ok.row(k).transpose() * model.factors.row(t);
      ++k;
    }
    sigma_ZF /= s.t1;
  }

  const Vector delta_hat = s.lam1 - s.lam0;
  EffectTestResult res;
  res.null_imposed = options.null_imposed;
  res.estimate = sigma_Z_inv * sigma_ZF * delta_hat;

  // observation-noise pieces
  const Matrix bread = sigma_Z_inv * sigma_ZF; // L x r
  const Matrix reg_noise = m.sigma_e2 / s.t1 * bread *
                           invert_spd_or_throw(s.sigma_F_T, "sigma_F_T") * bread.transpose();
  const Matrix load_obs =
      ctx.omega.omega_jj(i) * m.sigma_e2 / T * bread * m.sigma_F_inv * bread.transpose();
  Matrix fact_obs = Matrix::Zero(L, L);
  if (!options.null_imposed) {
    Index k = 0;
    for (Index t : s.periods) {
      const double quad = s.delta_var.dot(
          invert_spd_or_throw(m.sigma_Lt[static_cast<std::size_t>(t)], "sigma_Lt") *
          s.delta_var);
      fact_obs.noalias() += quad * z_ok.row(k).transpose() * z_ok.row(k);
      ++k;
    }
    fact_obs = m.sigma_e2 / (n * s.t1 * s.t1) * sigma_Z_inv * fact_obs * sigma_Z_inv;
  }

  // missing-pattern correction; the factor piece carries the Z-weighted
  // profiles R_s = (1/T1) sum_u (profile(s,u) - 1) Z_u f_u'.
  const MissMachine mm(m, s, i);
  const Matrix sigma_F_T_inv = invert_spd_or_throw(s.sigma_F_T, "sigma_F_T");
  const Matrix q1 = sigma_Z_inv * sigma_ZF * sigma_F_T_inv; // L x r
  const Matrix q2 = sigma_Z_inv * sigma_ZF * m.sigma_F_inv;  // L x r

  Matrix r_flat(L * model.rank, tp.periods()); // column s = vec(R_s), contiguous
  {
    const Index t1 = static_cast<Index>(s.periods.size());
    Matrix zf_flat(t1, L * model.rank);
    Matrix centered_profiles(tp.periods(), t1);
    for (Index k = 0; k < t1; ++k) {
      const Index u = s.periods[static_cast<std::size_t>(k)];
      centered_profiles.col(k) = m.period_profile.col(u).array() - 1.0;
      const Matrix zfu = z_ok.row(k).transpose() * model.factors.row(u);
      zf_flat.row(k) = Eigen::Map<const Vector>(zfu.data(), L * model.rank).transpose();
    }
    r_flat = (centered_profiles * zf_flat).transpose() / s.t1;
  }

  const Matrix miss = mm.accumulate(
      L, [&](Index sidx) { return Matrix(q1 * mm.p_at(sidx) * m.sigma_F_inv); },
      [&](Index sidx) { return Matrix(mm.pi0(sidx) * q2); },
      [&](Index sidx) {
        const Eigen::Map<const Matrix> r_s(r_flat.col(sidx).data(), L, model.rank);
        return Matrix(sigma_Z_inv * r_s * m.sigma_F_inv);
      });

  res.components = {{"treated_reg_noise", reg_noise},
                    {"control_loading_obs", load_obs},
                    {"factor_obs", fact_obs},
                    {"miss_correction", miss}};
  Matrix var = reg_noise + load_obs + fact_obs + miss;
  // PSD projection guards tiny negative leakage in the correction assembly.
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (var + var.transpose()));
  if (es.eigenvalues().minCoeff() < 0.0)
    var = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
          es.eigenvectors().transpose();
  res.variance = var;
  res.se = var.diagonal().cwiseMax(0.0).cwiseSqrt();
  fill_tail(res, options.alternative);
  return res;
}

EffectTestResult test_average(const TreatmentPanel& tp, const FactorModel& model,
                              const TreatmentContext& ctx, Index i,
                              const TestOptions& options) {
  const Index window = tp.periods() - tp.adopt_time[static_cast<std::size_t>(i)];
  return test_weighted(tp, model, ctx, i, Matrix::Ones(window, 1), options);
}

EffectTestResult test_individual(const TreatmentPanel& tp, const FactorModel& model, Index i,
                                 Index t, const TestOptions& options) {
  return test_individual(tp, model, make_treatment_context(tp, model), i, t, options);
}

EffectTestResult test_weighted(const TreatmentPanel& tp, const FactorModel& model, Index i,
                               const Matrix& Z, const TestOptions& options) {
  return test_weighted(tp, model, make_treatment_context(tp, model), i, Z, options);
}

EffectTestResult test_average(const TreatmentPanel& tp, const FactorModel& model, Index i,
                              const TestOptions& options) {
  return test_average(tp, model, make_treatment_context(tp, model), i, options);
}

}  // namespace lfm
