#pragma once

// Generalized lambda distribution in the FMKL parameterization:
//
//   Q(u) = l1 + ((u^l3 - 1)/l3 - ((1-u)^l4 - 1)/l4) / l2,   l2 > 0,
//
// with the log limit taken when a shape parameter is (numerically) zero.

#include <cstddef>
#include <optional>
#include <vector>

#include "glam/rng.hpp"

namespace glam {

struct GldParams {
  double lambda1 = 0.0;  // location
  double lambda2 = 1.0;  // inverse scale, > 0
  double lambda3 = 0.0;  // left shape
  double lambda4 = 0.0;  // right shape

  friend bool operator==(const GldParams&, const GldParams&) = default;
};

struct Support {
  double lower;
  double upper;
};

struct Moments {
  double mean;
  double variance;
};

// Shape magnitude below which (u^l - 1)/l is replaced by ln(u).
inline constexpr double kShapeLimit = 1e-8;

bool is_valid(const GldParams& p);

// Throws DomainError unless is_valid(p).
void validate(const GldParams& p);

// (u^l - 1)/l and its l -> 0 limit ln(u).
double box_cox(double u, double l);

double quantile(double u, const GldParams& p);

// dQ/du.
double quantile_density(double u, const GldParams& p);

Support support(const GldParams& p);

struct InverseOptions {
  double tolerance = 1e-12;  // on logit(u), i.e. relative in min(u, 1-u)
  int max_iterations = 200;
};

// Solves Q(u) = y. Returns nullopt when y lies outside the support.
std::optional<double> inverse_quantile(double y, const GldParams& p,
                                       const InverseOptions& opts = {});

// Same root, returned as t = logit(u) together with ln(u) and ln(1-u), which
// keeps full relative accuracy deep in either tail.
struct LogitRoot {
  double t;
  double log_u;
  double log_1mu;
};
std::optional<LogitRoot> inverse_quantile_logit(double y, const GldParams& p,
                                                const InverseOptions& opts = {});

double pdf(double y, const GldParams& p);
double log_pdf(double y, const GldParams& p);

// Gradient of log_pdf(y; p) with respect to (l1, l2, l3, l4), holding y fixed.
// Returns the log density; `grad` is left untouched when y is outside the
// support (the return value is then -infinity).
double log_pdf_with_gradient(double y, const GldParams& p, double grad[4]);

// nullopt when either shape parameter is <= -0.5.
std::optional<Moments> moments(const GldParams& p);
std::optional<double> mean(const GldParams& p);
std::optional<double> variance(const GldParams& p);

std::vector<double> sample(const GldParams& p, std::size_t n, Rng& rng);

}  // namespace glam
