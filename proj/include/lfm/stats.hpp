#pragma once

#include <vector>

#include "lfm/types.hpp"

namespace lfm::stats {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile (Acklam's rational approximation with one Newton
/// polish step; absolute error well below 1e-10).
double normal_quantile(double p);

/// Two-sided p-value for a z statistic.
double p_value_two_sided(double z);

struct KsResult {
  double statistic = 0.0; // sup |F_n - Phi|
  double p_value = 1.0;   // asymptotic Kolmogorov distribution
};

/// One-sample Kolmogorov-Smirnov test of `sample` against the standard
/// normal distribution.
KsResult ks_test_standard_normal(std::vector<double> sample);

/// Binomial Monte Carlo standard error sqrt(v(1-v)/n) for a proportion v.
double proportion_se(double v, long n);

}  // namespace lfm::stats
