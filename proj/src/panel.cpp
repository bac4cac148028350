#include "lfm/panel.hpp"

#include <cmath>

namespace lfm {

namespace {

std::vector<std::string> default_ids(const char* prefix, Index n) {
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) ids.push_back(prefix + std::to_string(k + 1));
  return ids;
}

}  // namespace

MaskedPanel MaskedPanel::make(Matrix values, MaskMatrix mask,
                              std::vector<std::string> unit_ids,
                              std::vector<std::string> time_ids) {
  const Index n = values.rows(), T = values.cols();
  if (mask.rows() != n || mask.cols() != T)
    throw DimensionMismatch("mask shape does not match values");
  if (n < 2 || T < 2) throw DegenerateMask("panel needs at least 2 units and 2 periods");

  for (Index i = 0; i < n; ++i) {
    bool any = false;
    for (Index t = 0; t < T; ++t) {
      if (mask(i, t) != 0) {
        any = true;
        if (!std::isfinite(values(i, t))) throw NonFiniteValue(i, t);
      }
    }
    if (!any) throw DegenerateMask("unit " + std::to_string(i) + " has no observed entry");
  }
  for (Index t = 0; t < T; ++t) {
    if ((mask.col(t).array() == 0).all())
      throw DegenerateMask("period " + std::to_string(t) + " has no observed entry");
  }

  if (unit_ids.empty()) unit_ids = default_ids("u", n);
  if (time_ids.empty()) time_ids = default_ids("t", T);
  if (static_cast<Index>(unit_ids.size()) != n || static_cast<Index>(time_ids.size()) != T)
    throw DimensionMismatch("id labels do not match panel shape");

  return MaskedPanel{std::move(values), std::move(mask), std::move(unit_ids),
                     std::move(time_ids)};
}

MaskedPanel MaskedPanel::dense(Matrix values, std::vector<std::string> unit_ids,
                               std::vector<std::string> time_ids) {
  MaskMatrix mask = MaskMatrix::Ones(values.rows(), values.cols());
  return make(std::move(values), std::move(mask), std::move(unit_ids), std::move(time_ids));
}

int default_min_overlap(Index n_periods) {
  const int guard = static_cast<int>(std::ceil(0.05 * static_cast<double>(n_periods)));
  return guard > 2 ? guard : 2;
}

OverlapStats compute_overlap(const MaskedPanel& panel, int min_overlap) {
  const Index n = panel.units(), T = panel.periods();
  if (min_overlap <= 0) min_overlap = default_min_overlap(T);

  const Matrix w = panel.mask.cast<double>();
  Matrix counts = w * w.transpose();
  counts = ((counts + counts.transpose()) * 0.5).eval(); // exact symmetry

  OverlapStats stats;
  stats.pair_counts = counts.array().round().cast<int>();
  stats.pair_ratios = counts / static_cast<double>(T);
  stats.min_overlap = min_overlap;
  stats.n_periods = T;

  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j)
      if (stats.pair_counts(i, j) < min_overlap)
        throw OverlapTooSparse(i, j, stats.pair_counts(i, j), min_overlap);
  return stats;
}

OmegaWeights compute_omega_weights(const MaskedPanel& panel, const OverlapStats& stats) {
  const Index n = panel.units(), T = panel.periods();
  const double dn = static_cast<double>(n), dT = static_cast<double>(T);

  const Matrix w = panel.mask.cast<double>();
  // v(j,t) = sum_i W_it / q_ij, computed as R * W with R = 1 ./ pair_ratios.
  const Matrix recip = stats.pair_ratios.cwiseInverse();
  const Matrix v = recip * w;

  // s_t = sum_{l,i} W_lt W_it / q_li = sum_l W_lt v(l,t)
  const Eigen::RowVectorXd s = (w.array() * v.array()).colwise().sum();

  OmegaWeights out;
  out.omega_jj = ((w.array() * (v / dn).array().square()).rowwise().sum() / dT).matrix();
  out.omega_j = ((w.array() * v.array()).matrix() * s.transpose()) / (dn * dn * dn * dT);
  out.omega = s.squaredNorm() / (dn * dn * dn * dn * dT);
  return out;
}

}  // namespace lfm
