#pragma once

#include <string>
#include <vector>

#include "lfm/errors.hpp"
#include "lfm/types.hpp"

namespace lfm {

/// An N x T outcome panel paired with a 0/1 observation mask. Entries with
/// mask = 0 are never read as data; observed entries must be finite. Every
/// unit and every period must have at least one observation.
struct MaskedPanel {
  Matrix values;   // N x T
  MaskMatrix mask; // N x T, 1 = observed
  std::vector<std::string> unit_ids;
  std::vector<std::string> time_ids;

  Index units() const { return values.rows(); }
  Index periods() const { return values.cols(); }
  bool observed(Index i, Index t) const { return mask(i, t) != 0; }
  Index observed_count() const { return mask.cast<Index>().sum(); }
  bool fully_observed() const { return observed_count() == values.size(); }

  /// Validates invariants and fills default ids when none are given.
  /// Throws DegenerateMask / NonFiniteValue / DimensionMismatch.
  static MaskedPanel make(Matrix values, MaskMatrix mask,
                          std::vector<std::string> unit_ids = {},
                          std::vector<std::string> time_ids = {});

  /// Fully observed panel.
  static MaskedPanel dense(Matrix values, std::vector<std::string> unit_ids = {},
                           std::vector<std::string> time_ids = {});
};

/// Guard on the minimum pairwise overlap: max(2, ceil(0.05 * T)).
int default_min_overlap(Index n_periods);

/// Pairwise overlap bookkeeping: |Q_ij| counts how many periods units i and
/// j are both observed, pair_ratios = counts / T.
struct OverlapStats {
  Eigen::MatrixXi pair_counts; // N x N, symmetric; diagonal = per-unit counts
  Matrix pair_ratios;          // N x N, counts / T
  int min_overlap = 2;
  Index n_periods = 0;

  Index units() const { return pair_counts.rows(); }
};

/// Counts pairwise overlaps; throws OverlapTooSparse on the first pair whose
/// overlap falls below min_overlap (min_overlap <= 0 selects the default guard).
OverlapStats compute_overlap(const MaskedPanel& panel, int min_overlap = -1);

/// Empirical analogues of the mask functionals that scale the variance
/// corrections. All three equal 1 exactly on a fully observed mask; the
/// population limits satisfy >= 1, and omega_jj / omega do so in every finite
/// sample as well. omega_j can fall slightly below 1 on very small panels,
/// which `all_ge_one` reports rather than rejects.
struct OmegaWeights {
  Vector omega_jj; // length N
  Vector omega_j;  // length N
  double omega = 1.0;

  bool all_ge_one(double slack = 1e-10) const {
    return omega >= 1.0 - slack && (omega_jj.array() >= 1.0 - slack).all() &&
           (omega_j.array() >= 1.0 - slack).all();
  }
};

/// Streaming O(N^2 T) evaluation of the Assumption-level quadruple sums:
///   omega_jj = (1/N^2) sum_{i,l} q_{ij,lj} / (q_ij q_lj)
///   omega_j  = (1/N^3) sum_{i,l,k} q_{li,kj} / (q_li q_kj)
///   omega    = (1/N^4) sum_{i,l,k,j} q_{li,kj} / (q_li q_kj)
/// where q_{ij,kl} = (1/T) sum_t W_it W_jt W_kt W_lt. Exact, not approximate:
/// the sums factorize over t.
OmegaWeights compute_omega_weights(const MaskedPanel& panel, const OverlapStats& stats);

}  // namespace lfm
