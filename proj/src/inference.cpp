#include "lfm/inference.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "lfm/stats.hpp"

namespace lfm {

namespace {

constexpr double kIndefiniteWarn = -1e-10;

Matrix invert_spd(const Matrix& a, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) throw EigenFailure("eigensolver failed");
  const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(hi > 0.0) || es.eigenvalues().minCoeff() < 1e-12 * hi)
    throw SingularMoment(std::string(what) + " is numerically singular");
  return es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

/// Projects a symmetric matrix onto the PSD cone; sets `warn` when an
/// eigenvalue was negative beyond the tolerance.
Matrix project_psd(const Matrix& a, bool& warn) {
  Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.eigenvalues().minCoeff() >= 0.0) return sym;
  warn = warn || es.eigenvalues().minCoeff() < kIndefiniteWarn;
  Vector clipped = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
}

/// Fitted factor at an original period index (must be identifiable).
Vector factor_row(const MomentEstimates& m, Index t) {
  const auto it = std::lower_bound(m.ok_times.begin(), m.ok_times.end(), t);
  if (it == m.ok_times.end() || *it != t) throw PeriodUnidentified(t);
  return m.factors_ok.row(it - m.ok_times.begin()).transpose();
}

void enforce_set_budget(const ResidualDependenceSpec& dep, Index n, Index T) {
  const std::size_t per_period_cap = static_cast<std::size_t>(16 * n);
  for (const auto& pairs : dep.cross_sets)
    if (pairs.size() > per_period_cap)
      throw ConfigError("cross-sectional dependence set exceeds the O(N) budget");
  if (dep.serial_sets.size() > static_cast<std::size_t>(16 * n * T))
    throw ConfigError("serial dependence set exceeds the O(NT) budget");
}

}  // namespace

ResidualDependenceSpec ResidualDependenceSpec::user(
    std::vector<std::vector<std::pair<Index, Index>>> cross,
    std::vector<SerialPair> serial) {
  ResidualDependenceSpec dep;
  dep.mode = Mode::UserSets;
  dep.cross_sets = std::move(cross);
  dep.serial_sets = std::move(serial);
  return dep;
}

Matrix MomentEstimates::xi_centered() const {
  const Matrix ff = sigma_F;
  const Eigen::Map<const Vector> v(ff.data(), ff.size());
  return xi_F - v * v.transpose();
}

MomentEstimates estimate_moments(const MaskedPanel& panel, const FactorModel& model,
                                 const Matrix* probs) {
  const Index n = panel.units(), T = panel.periods();
  const int r = model.rank;
  if (model.units() != n || model.periods() != T)
    throw DimensionMismatch("model does not match panel");

  MomentEstimates m;
  m.n_units = n;
  m.n_periods = T;
  m.factor_ok = model.factor_ok;
  m.loadings = model.loadings;
  for (Index t = 0; t < T; ++t)
    if (model.factor_ok[static_cast<std::size_t>(t)]) m.ok_times.push_back(t);
  if (m.ok_times.empty()) throw NoIdentifiablePeriods();
  const Index ok = static_cast<Index>(m.ok_times.size());

  m.factors_ok.resize(ok, r);
  for (Index k = 0; k < ok; ++k) m.factors_ok.row(k) = model.factors.row(m.ok_times[k]);

  m.sigma_F = m.factors_ok.transpose() * m.factors_ok / static_cast<double>(ok);
  m.sigma_F_inv = invert_spd(m.sigma_F, "sigma_F");
  m.sigma_L = model.loadings.transpose() * model.loadings / static_cast<double>(n);

  m.xi_F = Matrix::Zero(r * r, r * r);
  for (Index k = 0; k < ok; ++k) {
    const Matrix ff = m.factors_ok.row(k).transpose() * m.factors_ok.row(k);
    const Eigen::Map<const Vector> v(ff.data(), r * r);
    m.xi_F.noalias() += v * v.transpose();
  }
  m.xi_F /= static_cast<double>(ok);

  m.sigma_Lt.resize(static_cast<std::size_t>(T));
  if (probs) m.sigma_LSt.resize(static_cast<std::size_t>(T));
  double rss = 0.0;
  long obs = 0;
  for (Index t = 0; t < T; ++t) {
    Matrix st = Matrix::Zero(r, r);
    Matrix sst = Matrix::Zero(r, r);
    const bool t_ok = model.factor_ok[static_cast<std::size_t>(t)] != 0;
    for (Index i = 0; i < n; ++i) {
      if (!panel.observed(i, t)) continue;
      const auto li = model.loadings.row(i);
      st.noalias() += li.transpose() * li;
      if (probs) {
        const double p = (*probs)(i, t);
        sst.noalias() += li.transpose() * li / (p * p);
      }
      if (t_ok) {
        const double e = panel.values(i, t) - model.common(i, t);
        rss += e * e;
        ++obs;
      }
    }
    m.sigma_Lt[static_cast<std::size_t>(t)] = st / static_cast<double>(n);
    if (probs) m.sigma_LSt[static_cast<std::size_t>(t)] = sst / static_cast<double>(n);
  }
  if (obs == 0) throw NoIdentifiablePeriods();
  m.sigma_e2 = rss / static_cast<double>(obs);

  // overlap profiles (mask functionals only)
  const Matrix w = panel.mask.cast<double>();
  Matrix ratios = (w * w.transpose()) / static_cast<double>(T);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (!(ratios(i, j) > 0.0))
        throw OverlapTooSparse(i, j, 0, 1);
  const Matrix v = ratios.cwiseInverse() * w;       // v(i, s) = sum_l W_ls / q_li
  const Matrix wv = w.cwiseProduct(v);              // N x T
  m.unit_profile = wv.transpose() / static_cast<double>(n);
  m.period_profile = wv.transpose() * w;            // (s, t) = sum_i W_is W_it v(i, s)
  const Vector n_t = w.colwise().sum();
  for (Index t = 0; t < T; ++t)
    m.period_profile.col(t) /= static_cast<double>(n) * n_t(t);
  return m;
}

Matrix factor_quadratic_cov(const MomentEstimates& m, const Matrix& A, const Vector& u,
                            const Matrix& B, const Vector& v) {
  const Index ok = m.factors_ok.rows();
  const int r = m.rank();
  Matrix acc = Matrix::Zero(r, r);
  Vector mean_a = Vector::Zero(r), mean_b = Vector::Zero(r);
  for (Index k = 0; k < ok; ++k) {
    const Vector f = m.factors_ok.row(k).transpose();
    const Vector a = A * f * f.dot(u);
    const Vector b = B * f * f.dot(v);
    acc.noalias() += a * b.transpose();
    mean_a += a;
    mean_b += b;
  }
  const double d = static_cast<double>(ok);
  return acc / d - (mean_a / d) * (mean_b / d).transpose();
}

double factor_quadratic_var(const MomentEstimates& m, const Vector& a, const Vector& b) {
  const Index ok = m.factors_ok.rows();
  double sum = 0.0, sum2 = 0.0;
  for (Index k = 0; k < ok; ++k) {
    const auto f = m.factors_ok.row(k);
    const double g = f.dot(a) * f.dot(b);
    sum += g;
    sum2 += g * g;
  }
  const double d = static_cast<double>(ok);
  const double mean = sum / d;
  return std::max(0.0, sum2 / d - mean * mean);
}

Matrix gamma_obs_factor(const MaskedPanel& panel, const FactorModel& model,
                        const ResidualDependenceSpec& dep, Index t) {
  const Index n = panel.units();
  const int r = model.rank;
  if (t < 0 || t >= panel.periods() || !model.factor_ok[static_cast<std::size_t>(t)])
    throw PeriodUnidentified(t);
  enforce_set_budget(dep, n, panel.periods());

  Vector resid(n);
  for (Index i = 0; i < n; ++i)
    resid(i) = panel.observed(i, t) ? panel.values(i, t) - model.common(i, t) : 0.0;

  Matrix gamma = Matrix::Zero(r, r);
  if (dep.mode == ResidualDependenceSpec::Mode::Diagonal) {
    for (Index i = 0; i < n; ++i) {
      if (!panel.observed(i, t)) continue;
      const auto li = model.loadings.row(i);
      gamma.noalias() += resid(i) * resid(i) * li.transpose() * li;
    }
  } else {
    if (static_cast<std::size_t>(t) < dep.cross_sets.size()) {
      for (const auto& [i, j] : dep.cross_sets[static_cast<std::size_t>(t)]) {
        if (!panel.observed(i, t) || !panel.observed(j, t)) continue;
        gamma.noalias() += resid(i) * resid(j) * model.loadings.row(i).transpose() *
                           model.loadings.row(j);
      }
    }
  }
  return gamma / static_cast<double>(n);
}

Matrix gamma_obs_loading(const MaskedPanel& panel, const FactorModel& model,
                         const ResidualDependenceSpec& dep, Index j,
                         const OverlapStats* stats) {
  const Index n = panel.units(), T = panel.periods();
  const int r = model.rank;
  if (j < 0 || j >= n) throw DimensionMismatch("unit index out of range");
  enforce_set_budget(dep, n, T);

  OverlapStats local;
  if (!stats) {
    local = compute_overlap(panel);
    stats = &local;
  }
  for (Index i = 0; i < n; ++i)
    if (stats->pair_counts(i, j) < stats->min_overlap)
      throw OverlapTooSparse(i, j, stats->pair_counts(i, j), stats->min_overlap);

  // A_j(t) = sum_i W_it L_i L_i' / |Q_ij|, the overlap-weighted loading moment
  // entering both time slots of the double sum.
  std::vector<Matrix> a_t(static_cast<std::size_t>(T));
  Vector resid = Vector::Zero(T);
  for (Index t = 0; t < T; ++t) {
    Matrix a = Matrix::Zero(r, r);
    if (panel.observed(j, t) && model.factor_ok[static_cast<std::size_t>(t)]) {
      for (Index i = 0; i < n; ++i) {
        if (!panel.observed(i, t)) continue;
        a.noalias() += model.loadings.row(i).transpose() * model.loadings.row(i) /
                       static_cast<double>(stats->pair_counts(i, j));
      }
      resid(t) = panel.values(j, t) - model.common(j, t);
    }
    a_t[static_cast<std::size_t>(t)] = std::move(a);
  }

  const double scale = static_cast<double>(T) / (static_cast<double>(n) * n);
  Matrix gamma = Matrix::Zero(r, r);
  if (dep.mode == ResidualDependenceSpec::Mode::Diagonal) {
    for (Index t = 0; t < T; ++t) {
      if (!panel.observed(j, t) || !model.factor_ok[static_cast<std::size_t>(t)]) continue;
      const Matrix ff = model.factors.row(t).transpose() * model.factors.row(t);
      gamma.noalias() += resid(t) * resid(t) * a_t[static_cast<std::size_t>(t)] * ff *
                         a_t[static_cast<std::size_t>(t)];
    }
  } else {
    for (const auto& quad : dep.serial_sets) {
      if (quad.unit_i != j || quad.unit_j != j) continue; // only unit j's autocovariances enter
      const Index t = quad.time_t, s = quad.time_s;
      if (!panel.observed(j, t) || !panel.observed(j, s)) continue;
      if (!model.factor_ok[static_cast<std::size_t>(t)] ||
          !model.factor_ok[static_cast<std::size_t>(s)])
        continue;
      const Matrix fs = model.factors.row(t).transpose() * model.factors.row(s);
      gamma.noalias() += resid(t) * resid(s) * a_t[static_cast<std::size_t>(t)] * fs *
                         a_t[static_cast<std::size_t>(s)];
    }
  }
  return scale * gamma;
}

VarianceReport var_loading(Index j, const MomentEstimates& m, const OmegaWeights& w) {
  if (j < 0 || j >= m.n_units) throw DimensionMismatch("unit index out of range");
  const Vector lj = m.loadings.row(j).transpose();

  VarianceReport rep;
  rep.target = VarTarget::Loading;
  rep.unit = j;
  rep.omega_jj = w.omega_jj(j);
  rep.omega_j = w.omega_j(j);
  rep.omega = w.omega;

  const Matrix obs = rep.omega_jj * m.sigma_e2 * m.sigma_F_inv;
  const Matrix miss =
      (rep.omega_jj - 1.0) * factor_quadratic_cov(m, m.sigma_F_inv, lj, m.sigma_F_inv, lj);
  rep.components = {{"obs", obs}, {"miss", miss}};
  rep.variance = project_psd(obs + miss, rep.psd_projected);
  rep.se = (rep.variance.diagonal() / static_cast<double>(m.n_periods)).cwiseSqrt();
  return rep;
}

VarianceReport var_factor(Index t, const MomentEstimates& m, const OmegaWeights& w,
                          EstimatorMode mode) {
  if (t < 0 || t >= m.n_periods || !m.factor_ok[static_cast<std::size_t>(t)])
    throw PeriodUnidentified(t);
  const double n = static_cast<double>(m.n_units);
  const double T = static_cast<double>(m.n_periods);
  const double delta = m.delta();

  VarianceReport rep;
  rep.target = VarTarget::Factor;
  rep.period = t;
  rep.omega = w.omega;

  Matrix obs; // variance of the cross-sectional regression part
  if (mode == EstimatorMode::Plain) {
    obs = invert_spd(m.sigma_Lt[static_cast<std::size_t>(t)], "sigma_Lt") * m.sigma_e2;
  } else {
    if (m.sigma_LSt.empty())
      throw ConfigError("weighted variance needs moments estimated with propensities");
    const Matrix sl_inv = invert_spd(m.sigma_L, "sigma_L");
    obs = sl_inv * m.sigma_LSt[static_cast<std::size_t>(t)] * sl_inv * m.sigma_e2;
  }

  // The sigma_Lt sandwiches cancel against the inner moment, leaving the
  // centered quadratic covariance of f f' (SigmaF^-1 f_t) for either mode.
  // The weight is the period-t second moment of the overlap profile; it
  // reduces to the global omega under full or unit-level random observation.
  const double weight =
      m.period_profile.col(t).squaredNorm() / static_cast<double>(T) - 1.0;
  const Vector a = m.sigma_F_inv * factor_row(m, t);
  const Matrix miss = weight * factor_quadratic_cov(m, Matrix::Identity(m.rank(), m.rank()),
                                                    a, Matrix::Identity(m.rank(), m.rank()),
                                                    a);

  rep.components = {{"obs", (delta / n) * obs}, {"miss", (delta / T) * miss}};
  rep.variance = project_psd(rep.components[0].value + rep.components[1].value,
                             rep.psd_projected);
  rep.se = (obs.diagonal() / n + miss.diagonal() / T).cwiseMax(0.0).cwiseSqrt();
  return rep;
}

VarianceReport var_common(Index j, Index t, const MomentEstimates& m, const OmegaWeights& w,
                          EstimatorMode mode) {
  if (j < 0 || j >= m.n_units) throw DimensionMismatch("unit index out of range");
  if (t < 0 || t >= m.n_periods || !m.factor_ok[static_cast<std::size_t>(t)])
    throw PeriodUnidentified(t);
  const double n = static_cast<double>(m.n_units);
  const double T = static_cast<double>(m.n_periods);
  const double delta = m.delta();

  VarianceReport rep;
  rep.target = VarTarget::Common;
  rep.unit = j;
  rep.period = t;
  rep.omega_jj = w.omega_jj(j);
  rep.omega_j = w.omega_j(j);
  rep.omega = w.omega;

  const Vector lj = m.loadings.row(j).transpose();
  const Vector ft = factor_row(m, t);

  // All three correction terms share one scalar: the sample variance of
  // f_t' SigmaF^-1 f_s f_s' L_j over identifiable periods s. Their weights
  // come from the overlap profiles; the combined weight is the mean squared
  // profile gap (1/T) sum_s (unit_s - period_s)^2, nonnegative by
  // construction, and the split below keeps the labeled components additive.
  const double v_miss = factor_quadratic_var(m, m.sigma_F_inv * ft, lj);
  const double T_all = static_cast<double>(T);
  const double w_jj = m.unit_profile.col(j).squaredNorm() / T_all - 1.0;
  const double w_tt = m.period_profile.col(t).squaredNorm() / T_all - 1.0;
  const double w_jt = m.unit_profile.col(j).dot(m.period_profile.col(t)) / T_all - 1.0;

  const double loading_obs = rep.omega_jj * m.sigma_e2 * ft.dot(m.sigma_F_inv * ft);
  const double loading_miss = w_jj * v_miss;
  const double factor_miss = w_tt * v_miss;
  const double cov_term = -2.0 * w_jt * v_miss;

  double factor_obs;
  if (mode == EstimatorMode::Plain) {
    factor_obs =
        m.sigma_e2 *
        lj.dot(invert_spd(m.sigma_Lt[static_cast<std::size_t>(t)], "sigma_Lt") * lj);
  } else {
    if (m.sigma_LSt.empty())
      throw ConfigError("weighted variance needs moments estimated with propensities");
    const Matrix sl_inv = invert_spd(m.sigma_L, "sigma_L");
    factor_obs =
        m.sigma_e2 * lj.dot(sl_inv * m.sigma_LSt[static_cast<std::size_t>(t)] * sl_inv * lj);
  }

  auto scalar = [](double x) { return Matrix::Constant(1, 1, x); };
  rep.components = {{"loading_obs", scalar((delta / T) * loading_obs)},
                    {"loading_miss", scalar((delta / T) * loading_miss)},
                    {"factor_obs", scalar((delta / n) * factor_obs)},
                    {"factor_miss", scalar((delta / T) * factor_miss)},
                    {"loading_factor_cov", scalar((delta / T) * cov_term)}};
  double total = 0.0;
  for (const auto& c : rep.components) total += c.value(0, 0);
  if (total < 0.0) {
    rep.psd_projected = rep.psd_projected || total < kIndefiniteWarn;
    // keep component additivity: shift the covariance term up to the PSD cone
    rep.components.back().value(0, 0) -= total;
    total = 0.0;
  }
  rep.variance = scalar(total);
  const double se2 =
      (loading_obs + loading_miss + factor_miss + cov_term) / T + factor_obs / n;
  rep.se = Vector::Constant(1, std::sqrt(std::max(0.0, se2)));
  return rep;
}

ConfidenceInterval confidence_interval(double point, double se, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must be in (0,1)");
  const double z = stats::normal_quantile(0.5 * (1.0 + level));
  return ConfidenceInterval{point - z * se, point + z * se, level};
}

ConfidenceInterval confidence_interval(const VarianceReport& report, double point,
                                       double level) {
  return confidence_interval(point, report.se(0), level);
}

}  // namespace lfm
