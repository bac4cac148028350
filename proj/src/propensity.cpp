#include "lfm/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace lfm {

namespace {

constexpr double kSeparationBound = 30.0; // |x'beta| beyond this is numerically 0/1

double clamp_prob(double p, double floor) { return std::min(1.0, std::max(floor, p)); }

std::string level_key(const Matrix& S, const std::vector<int>& cols, Index i) {
  std::string key;
  for (int c : cols) {
    key += std::to_string(S(i, c));
    key += '|';
  }
  return key;
}

struct LogitFit {
  Vector beta;
  int iterations = 0;
};

/// Newton-Raphson with step halving for a binomial logit with per-row trial
/// counts. X is n x k, successes/trials length n.
LogitFit logit_mle(const Matrix& X, const Vector& successes, const Vector& trials,
                   const PropensityOptions& options) {
  const Index n = X.rows(), k = X.cols();
  Vector beta = Vector::Zero(k);

  auto log_likelihood = [&](const Vector& b) {
    double ll = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double eta = X.row(i).dot(b);
      // log(1+exp(eta)) evaluated stably
      const double log1p_exp = eta > 0.0 ? eta + std::log1p(std::exp(-eta))
                                         : std::log1p(std::exp(eta));
      ll += successes(i) * eta - trials(i) * log1p_exp;
    }
    return ll;
  };

  double ll = log_likelihood(beta);
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    Vector grad = Vector::Zero(k);
    Matrix hess = Matrix::Zero(k, k);
    for (Index i = 0; i < n; ++i) {
      const double eta = X.row(i).dot(beta);
      const double p = 1.0 / (1.0 + std::exp(-eta));
      grad.noalias() += (successes(i) - trials(i) * p) * X.row(i).transpose();
      hess.noalias() += trials(i) * p * (1.0 - p) * X.row(i).transpose() * X.row(i);
    }
    if (grad.norm() < options.grad_tol) return {beta, iter};

    Eigen::LDLT<Matrix> ldlt(hess);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw LogitSeparation("logit Hessian is singular (flat likelihood)");
    Vector step = ldlt.solve(grad);

    double scale = 1.0;
    Vector candidate = beta + step;
    double cand_ll = log_likelihood(candidate);
    int halvings = 0;
    while (cand_ll < ll && halvings < 30) {
      scale *= 0.5;
      candidate = beta + scale * step;
      cand_ll = log_likelihood(candidate);
      ++halvings;
    }
    beta = candidate;
    ll = cand_ll;

    if (beta.cwiseAbs().maxCoeff() > kSeparationBound)
      throw LogitSeparation("coefficients diverge; data are (quasi-)separated");
  }
  // Converged in effect when the gradient is already tiny at the last iterate.
  Vector grad = Vector::Zero(k);
  for (Index i = 0; i < n; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-X.row(i).dot(beta)));
    grad.noalias() += (successes(i) - trials(i) * p) * X.row(i).transpose();
  }
  if (grad.norm() < 1e-4) return {beta, options.max_iter};
  throw NoConvergence("logit MLE did not converge in " + std::to_string(options.max_iter) +
                      " iterations");
}

Matrix design_with_intercept(const Matrix& S) {
  Matrix X(S.rows(), S.cols() + 1);
  X.col(0).setOnes();
  X.rightCols(S.cols()) = S;
  return X;
}

}  // namespace

CovariateVector CovariateVector::make(Matrix values, std::vector<ColumnKind> kinds,
                                      std::vector<std::string> names) {
  if (static_cast<Index>(kinds.size()) != values.cols())
    throw DimensionMismatch("one column kind per covariate column required");
  if (!values.allFinite()) throw ConfigError("covariates must be finite");
  if (names.empty())
    for (Index c = 0; c < values.cols(); ++c) names.push_back("s" + std::to_string(c + 1));

  for (Index c = 0; c < values.cols(); ++c) {
    if (kinds[static_cast<std::size_t>(c)] != ColumnKind::Discrete) continue;
    std::map<double, int> levels;
    for (Index i = 0; i < values.rows(); ++i) levels[values(i, c)] = 1;
    if (levels.size() > 64)
      throw ConfigError("discrete covariate column " + std::to_string(c) +
                        " has more than 64 levels");
  }
  return CovariateVector{std::move(values), std::move(kinds), std::move(names)};
}

PropensityEstimate PropensityEstimate::constant(Index n, Index T, double p) {
  PropensityEstimate est;
  est.probs = Matrix::Constant(n, T, p);
  est.model = PropensityModel::Constant;
  return est;
}

PropensityEstimate estimate_discrete_freq(const MaskedPanel& panel, const CovariateVector& S,
                                          const PropensityOptions& options) {
  const Index n = panel.units(), T = panel.periods();
  if (S.units() != n) throw DimensionMismatch("covariates do not match panel");

  std::vector<int> discrete_cols;
  for (Index c = 0; c < S.cols(); ++c)
    if (S.kinds[static_cast<std::size_t>(c)] == ColumnKind::Discrete)
      discrete_cols.push_back(static_cast<int>(c));
  if (discrete_cols.empty())
    throw ConfigError("frequency estimator requires at least one discrete covariate");

  std::map<std::string, std::vector<Index>> cells;
  for (Index i = 0; i < n; ++i) cells[level_key(S.values, discrete_cols, i)].push_back(i);

  PropensityEstimate est;
  est.model = PropensityModel::DiscreteFreq;
  est.probs.resize(n, T);
  for (const auto& [key, members] : cells) {
    const long size = static_cast<long>(members.size());
    est.diagnostics.cell_counts.push_back(size);
    if (size < options.min_cell) throw CellTooSmall(key, size, options.min_cell);
    for (Index t = 0; t < T; ++t) {
      long observed = 0;
      for (Index i : members) observed += panel.observed(i, t) ? 1 : 0;
      const double p = clamp_prob(static_cast<double>(observed) / size, options.p_floor);
      for (Index i : members) est.probs(i, t) = p;
    }
  }
  return est;
}

PropensityEstimate estimate_logit_pooled(const MaskedPanel& panel, const CovariateVector& S,
                                         const PropensityOptions& options) {
  const Index n = panel.units(), T = panel.periods();
  if (S.units() != n) throw DimensionMismatch("covariates do not match panel");

  // Each unit contributes T Bernoulli trials with identical covariates, so
  // the binomial sufficient statistics are enough.
  const Matrix X = design_with_intercept(S.values);
  Vector successes(n), trials = Vector::Constant(n, static_cast<double>(T));
  for (Index i = 0; i < n; ++i)
    successes(i) = panel.mask.row(i).cast<double>().sum();

  const LogitFit fit = logit_mle(X, successes, trials, options);

  PropensityEstimate est;
  est.model = PropensityModel::LogitPooled;
  est.diagnostics.iterations.push_back(fit.iterations);
  est.probs.resize(n, T);
  for (Index i = 0; i < n; ++i) {
    const double p =
        clamp_prob(1.0 / (1.0 + std::exp(-X.row(i).dot(fit.beta))), options.p_floor);
    est.probs.row(i).setConstant(p);
  }
  return est;
}

PropensityEstimate estimate_logit_per_t(const MaskedPanel& panel, const CovariateVector& S,
                                        const PropensityOptions& options) {
  const Index n = panel.units(), T = panel.periods();
  if (S.units() != n) throw DimensionMismatch("covariates do not match panel");

  const bool all_discrete = std::all_of(S.kinds.begin(), S.kinds.end(), [](ColumnKind k) {
    return k == ColumnKind::Discrete;
  });

  const Matrix X = design_with_intercept(S.values);
  PropensityEstimate est;
  est.model = PropensityModel::LogitPerT;
  est.probs.resize(n, T);

  PropensityEstimate freq_fallback;
  bool have_fallback = false;

  for (Index t = 0; t < T; ++t) {
    Vector successes(n), trials = Vector::Ones(n);
    long observed = 0;
    for (Index i = 0; i < n; ++i) {
      successes(i) = panel.observed(i, t) ? 1.0 : 0.0;
      observed += panel.observed(i, t) ? 1 : 0;
    }
    if (observed == n) {
      // Degenerate MLE: every unit observed. Probability one by convention.
      est.probs.col(t).setOnes();
      est.diagnostics.iterations.push_back(0);
      est.diagnostics.fallback_periods.push_back(t);
      continue;
    }
    try {
      const LogitFit fit = logit_mle(X, successes, trials, options);
      est.diagnostics.iterations.push_back(fit.iterations);
      for (Index i = 0; i < n; ++i)
        est.probs(i, t) =
            clamp_prob(1.0 / (1.0 + std::exp(-X.row(i).dot(fit.beta))), options.p_floor);
    } catch (const LogitSeparation&) {
      if (!all_discrete) throw;
      if (!have_fallback) {
        freq_fallback = estimate_discrete_freq(panel, S, options);
        have_fallback = true;
      }
      est.probs.col(t) = freq_fallback.probs.col(t);
      est.diagnostics.iterations.push_back(-1);
      est.diagnostics.fallback_periods.push_back(t);
    }
  }
  return est;
}

CovariateVector use_loadings_as_covariates(const FactorModel& model) {
  std::vector<ColumnKind> kinds(static_cast<std::size_t>(model.rank),
                                ColumnKind::Continuous);
  std::vector<std::string> names;
  for (int k = 0; k < model.rank; ++k) names.push_back("loading" + std::to_string(k + 1));
  return CovariateVector{model.loadings, std::move(kinds), std::move(names)};
}

}  // namespace lfm
