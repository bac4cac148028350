#pragma once

#include <random>

#include "lfm/lfm.hpp"

namespace testutil {

using lfm::Index;
using lfm::MaskMatrix;
using lfm::Matrix;
using lfm::Vector;

inline MaskMatrix random_mask(Index n, Index T, double p, std::mt19937_64& rng,
                              bool ensure_coverage = true) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  MaskMatrix mask(n, T);
  for (Index i = 0; i < n; ++i)
    for (Index t = 0; t < T; ++t) mask(i, t) = unif(rng) < p ? 1 : 0;
  if (ensure_coverage) {
    for (Index i = 0; i < n; ++i)
      if ((mask.row(i).array() == 0).all())
        mask(i, static_cast<Index>(unif(rng) * T)) = 1;
    for (Index t = 0; t < T; ++t)
      if ((mask.col(t).array() == 0).all())
        mask(static_cast<Index>(unif(rng) * n), t) = 1;
  }
  return mask;
}

inline Matrix random_matrix(Index n, Index m, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Matrix x(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) x(i, j) = normal(rng);
  return x;
}

/// Mask with every pairwise overlap at least `floor` (rejection sampled).
inline MaskMatrix random_mask_with_overlap(Index n, Index T, double p, int floor,
                                           std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 500; ++attempt) {
    MaskMatrix mask = random_mask(n, T, p, rng);
    const Matrix w = mask.cast<double>();
    const Matrix counts = w * w.transpose();
    if (counts.minCoeff() >= floor) return mask;
  }
  return MaskMatrix::Ones(n, T);
}

/// Literal double loop over (i,j,t).
inline Eigen::MatrixXi overlap_oracle(const MaskMatrix& mask) {
  const Index n = mask.rows(), T = mask.cols();
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index t = 0; t < T; ++t)
        if (mask(i, t) && mask(j, t)) counts(i, j)++;
  return counts;
}

struct OmegaOracle {
  Vector omega_jj, omega_j;
  double omega;
};

/// Literal evaluation of the assumption-level sums (quadruple loops).
inline OmegaOracle omega_oracle(const MaskMatrix& mask) {
  const Index n = mask.rows(), T = mask.cols();
  const Matrix w = mask.cast<double>();
  const Matrix q = (w * w.transpose()) / static_cast<double>(T);
  auto q4 = [&](Index a, Index b, Index c, Index d) {
    double s = 0;
    for (Index t = 0; t < T; ++t) s += w(a, t) * w(b, t) * w(c, t) * w(d, t);
    return s / static_cast<double>(T);
  };
  OmegaOracle out;
  out.omega_jj.resize(n);
  out.omega_j.resize(n);
  for (Index j = 0; j < n; ++j) {
    double s = 0;
    for (Index i = 0; i < n; ++i)
      for (Index l = 0; l < n; ++l) s += q4(i, j, l, j) / (q(i, j) * q(l, j));
    out.omega_jj(j) = s / (static_cast<double>(n) * n);
  }
  for (Index j = 0; j < n; ++j) {
    double s = 0;
    for (Index i = 0; i < n; ++i)
      for (Index l = 0; l < n; ++l)
        for (Index k = 0; k < n; ++k) s += q4(l, i, k, j) / (q(l, i) * q(k, j));
    out.omega_j(j) = s / (static_cast<double>(n) * n * n);
  }
  double s = 0;
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      for (Index l = 0; l < n; ++l)
        for (Index k = 0; k < n; ++k) s += q4(l, i, k, j) / (q(l, i) * q(k, j));
  out.omega = s / (static_cast<double>(n) * n * n * n);
  return out;
}

/// Per-pair covariance oracle.
inline Matrix covariance_oracle(const Matrix& values, const MaskMatrix& mask) {
  const Index n = values.rows(), T = values.cols();
  Matrix sigma(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      double sum = 0;
      long count = 0;
      for (Index t = 0; t < T; ++t)
        if (mask(i, t) && mask(j, t)) {
          sum += values(i, t) * values(j, t);
          ++count;
        }
      sigma(i, j) = sum / static_cast<double>(count);
    }
  return sigma;
}

/// Least-squares rotation aligning the population loadings onto the fitted
/// ones (H solves Lambda H ~ Lhat).
inline Matrix ls_rotation(const Matrix& truth, const Matrix& fitted) {
  return (truth.transpose() * truth).ldlt().solve(truth.transpose() * fitted);
}

/// The rotation the distribution theory is stated in:
/// H = (1/(NT)) V^-1 Lhat' Lambda F' F, with V the diagonal matrix of the
/// leading eigenvalues of Sigma/N. Loadings compare as H^-1 Lhat_j vs
/// Lambda_j, factors as H' Fhat_t vs F_t.
inline Matrix paper_rotation(const Matrix& truth_loadings, const Matrix& truth_factors,
                             const lfm::FactorModel& model) {
  const double nt =
      static_cast<double>(truth_loadings.rows()) * static_cast<double>(truth_factors.rows());
  return model.eigenvalues.cwiseInverse().asDiagonal() * model.loadings.transpose() *
         truth_loadings * truth_factors.transpose() * truth_factors / nt;
}

inline lfm::MaskedPanel masked(const Matrix& values, const MaskMatrix& mask) {
  return lfm::MaskedPanel::make(values, mask);
}

}  // namespace testutil
