#include "lfm/covariance.hpp"

#include <cmath>

namespace lfm {

ReweightedCovariance pairwise_covariance(const MaskedPanel& panel, const OverlapStats& stats,
                                         const CovarianceOptions& options) {
  const Index n = panel.units(), T = panel.periods();
  if (stats.pair_counts.rows() != n || stats.n_periods != T)
    throw DimensionMismatch("overlap stats do not match panel");

  const Matrix w = panel.mask.cast<double>();
  Matrix filled = panel.values.cwiseProduct(w); // zero-fill; masked entries never read
  for (Index i = 0; i < n; ++i)
    for (Index t = 0; t < T; ++t)
      if (panel.observed(i, t) && !std::isfinite(panel.values(i, t)))
        throw NonFiniteValue(i, t);

  if (options.demean) {
    const Vector row_obs = w.rowwise().sum();
    const Vector mean = filled.rowwise().sum().cwiseQuotient(row_obs);
    filled -= mean.asDiagonal() * w;
  }

  Matrix sigma = (filled * filled.transpose()).cwiseQuotient(stats.pair_counts.cast<double>());
  sigma = ((sigma + sigma.transpose()) * 0.5).eval();

  return ReweightedCovariance{std::move(sigma), stats};
}

}  // namespace lfm
