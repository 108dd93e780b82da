#include "glam/special.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>

namespace glam {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

}  // namespace glam
