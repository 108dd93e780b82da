#pragma once

#include <cmath>
#include <functional>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "glam/gld.hpp"
#include "glam/special.hpp"

namespace testing {

// Integral of `density` (default the GLD pdf) over [Q(a), Q(b)], split at
// quantiles equally spaced in logit(u) so that each piece is smooth.
inline double pdf_mass(const glam::GldParams& p, std::function<double(double)> density = {},
                       double a = 1e-9, double b = 1.0 - 1e-9, int pieces = 64) {
  if (!density) density = [&](double y) { return glam::pdf(y, p); };
  const double ta = std::log(a / (1 - a)), tb = std::log(b / (1 - b));
  double total = 0.0;
  double lo = glam::quantile(a, p);
  for (int k = 1; k <= pieces; ++k) {
    const double t = ta + (tb - ta) * k / pieces;
    const double hi = glam::quantile(1.0 / (1.0 + std::exp(-t)), p);
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        density, lo, hi, 10, 1e-12);
    lo = hi;
  }
  return total;
}

// Kolmogorov-Smirnov statistic of a sorted sample against a CDF.
inline double ks_statistic(const std::vector<double>& sorted, const std::function<double(double)>& cdf) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  return d;
}

}  // namespace testing
