#include "glam/rng.hpp"

#include "glam/special.hpp"

namespace glam {

double Rng::normal() { return normal_quantile(uniform()); }

}  // namespace glam
