#pragma once

#include "lfm/panel.hpp"

namespace lfm {

struct CovarianceOptions {
  /// Subtract each unit's mean over its observed periods before forming
  /// products. The estimator itself uses raw second moments; demeaning is for
  /// users whose data has nonzero means.
  bool demean = false;
};

/// Covariance estimated from the pairwise-overlap windows,
///   Sigma(i,j) = (1/|Q_ij|) sum_{t in Q_ij} Y_it Y_jt,
/// symmetrized as (S + S^T)/2.
struct ReweightedCovariance {
  Matrix matrix;      // N x N symmetric
  OverlapStats stats; // source counts

  Index units() const { return matrix.rows(); }
};

ReweightedCovariance pairwise_covariance(const MaskedPanel& panel, const OverlapStats& stats,
                                         const CovarianceOptions& options = {});

}  // namespace lfm
