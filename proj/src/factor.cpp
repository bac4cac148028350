#include "lfm/factor.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace lfm {

namespace {

/// Flip column signs so the largest-magnitude entry of each column is positive.
void apply_sign_convention(Matrix& loadings) {
  for (Index c = 0; c < loadings.cols(); ++c) {
    Index arg = 0;
    loadings.col(c).cwiseAbs().maxCoeff(&arg);
    if (loadings(arg, c) < 0.0) loadings.col(c) = -loadings.col(c);
  }
}

double rcond_from_eigs(const Vector& eigs) {
  const double hi = eigs.cwiseAbs().maxCoeff();
  const double lo = eigs.minCoeff();
  if (hi <= 0.0) return 0.0;
  return lo / hi;
}

}  // namespace

Index FactorModel::ok_count() const {
  Index n = 0;
  for (char ok : factor_ok) n += (ok != 0);
  return n;
}

LoadingEstimate estimate_loadings(const ReweightedCovariance& cov, int rank) {
  const Index n = cov.units();
  const Index limit = std::min(n, cov.stats.n_periods);
  if (rank < 1 || rank > limit) throw RankTooLarge(rank, limit);

  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov.matrix / static_cast<double>(n));
  if (solver.info() != Eigen::Success)
    throw EigenFailure("symmetric eigensolver did not converge");

  // Eigen returns ascending eigenvalues; take the top r in descending order.
  LoadingEstimate est;
  est.eigenvalues.resize(rank);
  est.loadings.resize(n, rank);
  for (int k = 0; k < rank; ++k) {
    const Index src = n - 1 - k;
    est.eigenvalues(k) = solver.eigenvalues()(src);
    est.loadings.col(k) = solver.eigenvectors().col(src) * std::sqrt(static_cast<double>(n));
  }
  apply_sign_convention(est.loadings);
  return est;
}

namespace {

FactorEstimate regress_factors(const MaskedPanel& panel, const Matrix& loadings,
                               const Matrix* probs, double p_floor) {
  const Index n = panel.units(), T = panel.periods();
  const int r = static_cast<int>(loadings.cols());
  if (loadings.rows() != n) throw DimensionMismatch("loadings do not match panel");
  if (probs && (probs->rows() != n || probs->cols() != T))
    throw DimensionMismatch("propensity matrix does not match panel");

  FactorEstimate est;
  est.factors = Matrix::Constant(T, r, std::numeric_limits<double>::quiet_NaN());
  est.ok.assign(static_cast<std::size_t>(T), 0);

  Matrix gram(r, r);
  Vector moment(r);
  for (Index t = 0; t < T; ++t) {
    gram.setZero();
    moment.setZero();
    for (Index i = 0; i < n; ++i) {
      if (!panel.observed(i, t)) continue;
      double w = 1.0;
      if (probs) {
        const double p = (*probs)(i, t);
        if (!(p >= p_floor)) throw PropensityUnderflow(i, t, p, p_floor);
        w = 1.0 / p;
      }
      gram.noalias() += w * loadings.row(i).transpose() * loadings.row(i);
      moment.noalias() += w * loadings.row(i).transpose() * panel.values(i, t);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> gs(gram);
    if (gs.info() != Eigen::Success || rcond_from_eigs(gs.eigenvalues()) < kGramRcondTol)
      continue; // flagged, not fatal
    est.factors.row(t) = gs.eigenvectors() *
                         gs.eigenvalues().cwiseInverse().asDiagonal() *
                         gs.eigenvectors().transpose() * moment;
    est.ok[static_cast<std::size_t>(t)] = 1;
  }
  return est;
}

}  // namespace

FactorEstimate estimate_factors(const MaskedPanel& panel, const Matrix& loadings) {
  return regress_factors(panel, loadings, nullptr, 0.0);
}

FactorEstimate estimate_factors_weighted(const MaskedPanel& panel, const Matrix& loadings,
                                         const Matrix& probs, double p_floor) {
  return regress_factors(panel, loadings, &probs, p_floor);
}

FactorModel fit(const MaskedPanel& panel, int rank, const FitOptions& options) {
  const OverlapStats stats = compute_overlap(panel, options.min_overlap);
  CovarianceOptions cov_options;
  cov_options.demean = options.demean;
  const ReweightedCovariance cov = pairwise_covariance(panel, stats, cov_options);
  LoadingEstimate le = estimate_loadings(cov, rank);

  FactorEstimate fe;
  if (options.weighted) {
    if (!options.propensity)
      throw ConfigError("weighted estimation requires a propensity matrix");
    fe = estimate_factors_weighted(panel, le.loadings, *options.propensity, options.p_floor);
  } else {
    fe = estimate_factors(panel, le.loadings);
  }

  FactorModel model;
  model.loadings = std::move(le.loadings);
  model.factors = std::move(fe.factors);
  model.eigenvalues = std::move(le.eigenvalues);
  model.rank = rank;
  model.weighted = options.weighted;
  model.factor_ok = std::move(fe.ok);
  return model;
}

ImputedPanel impute(const MaskedPanel& panel, const FactorModel& model) {
  if (model.units() != panel.units() || model.periods() != panel.periods())
    throw DimensionMismatch("model was not fitted on this panel's dimensions");

  ImputedPanel out;
  out.common = model.common_matrix();
  out.completed = out.common;
  out.residuals = Matrix::Constant(panel.units(), panel.periods(),
                                   std::numeric_limits<double>::quiet_NaN());
  for (Index t = 0; t < panel.periods(); ++t) {
    const bool ok = model.factor_ok[static_cast<std::size_t>(t)] != 0;
    for (Index i = 0; i < panel.units(); ++i) {
      if (panel.observed(i, t)) {
        out.completed(i, t) = panel.values(i, t);
        if (ok) out.residuals(i, t) = panel.values(i, t) - out.common(i, t);
      }
      // unidentified periods keep NaN in common/completed at missing entries
    }
  }
  return out;
}

RankSelection select_rank(const ReweightedCovariance& cov, int r_max) {
  const Index n = cov.units();
  const Index limit = std::min(n, cov.stats.n_periods);
  if (r_max < 1 || 2 * r_max >= limit)
    throw RankTooLarge(r_max, limit / 2);

  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov.matrix / static_cast<double>(n));
  if (solver.info() != Eigen::Success)
    throw EigenFailure("symmetric eigensolver did not converge");

  RankSelection sel;
  sel.ratios.resize(r_max);
  for (int k = 0; k < r_max; ++k) {
    const double num = solver.eigenvalues()(n - 1 - k);
    const double den = solver.eigenvalues()(n - 2 - k);
    sel.ratios(k) = den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
  }
  const double hi = sel.ratios.maxCoeff();
  const double lo = sel.ratios.minCoeff();
  if (std::isfinite(hi) && hi <= lo * (1.0 + 1e-8))
    throw SpectrumDegenerate("all eigenvalue ratios coincide; no rank is identified");

  Index arg = 0;
  sel.ratios.maxCoeff(&arg);
  sel.rank = static_cast<int>(arg) + 1;

  // A confident answer needs the winning ratio to dominate the runner-up:
  // its excess over 1 must at least double every other ratio's excess.
  double runner_up = 1.0;
  for (int k = 0; k < r_max; ++k)
    if (k != arg) runner_up = std::max(runner_up, sel.ratios(k));
  sel.decisive = (hi - 1.0) >= 2.0 * (runner_up - 1.0) && hi >= 1.5;
  return sel;
}

FactorModel iterate_refine(const MaskedPanel& panel, const FactorModel& model, int n_iter) {
  if (n_iter < 1) throw ConfigError("iterate_refine requires n_iter >= 1");

  Matrix completed = impute(panel, model).completed;
  FactorModel current = model;
  for (int k = 0; k < n_iter; ++k) {
    // NaNs can only appear at missing entries of unidentified periods; fall
    // back to zero there so the full-panel PCA stays defined.
    Matrix filled = completed.unaryExpr(
        [](double x) { return std::isfinite(x) ? x : 0.0; });
    MaskedPanel full = MaskedPanel::dense(std::move(filled), panel.unit_ids, panel.time_ids);
    current = fit(full, model.rank);
    const Matrix common = current.common_matrix();
    for (Index t = 0; t < panel.periods(); ++t)
      for (Index i = 0; i < panel.units(); ++i)
        completed(i, t) = panel.observed(i, t) ? panel.values(i, t) : common(i, t);
  }
  return current;
}

}  // namespace lfm
