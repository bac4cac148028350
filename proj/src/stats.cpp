#include "lfm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lfm::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile needs p in (0,1)");

  // Acklam's rational approximation.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // One Newton step against the CDF sharpens the tail behaviour.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double p_value_two_sided(double z) {
  return std::min(1.0, 2.0 * normal_cdf(-std::abs(z)));
}

KsResult ks_test_standard_normal(std::vector<double> sample) {
  const std::size_t n = sample.size();
  if (n == 0) return {};
  std::sort(sample.begin(), sample.end());

  double d = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double cdf = normal_cdf(sample[k]);
    const double hi = static_cast<double>(k + 1) / n - cdf;
    const double lo = cdf - static_cast<double>(k) / n;
    d = std::max(d, std::max(hi, lo));
  }

  // Asymptotic Kolmogorov tail: P(sqrt(n) D > x) = 2 sum (-1)^{k-1} exp(-2k^2x^2).
  const double x = std::sqrt(static_cast<double>(n)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * x * x);
    p += term;
    if (std::abs(term) < 1e-12) break;
  }
  return KsResult{d, std::min(1.0, std::max(0.0, p))};
}

double proportion_se(double v, long n) {
  return n > 0 ? std::sqrt(std::max(0.0, v * (1.0 - v)) / static_cast<double>(n)) : 0.0;
}

}  // namespace lfm::stats
