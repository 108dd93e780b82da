#pragma once

// Validation metrics: order-2 Wasserstein distance between quantile
// functions, the normalized mean-squared Wasserstein error and NMSE.

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "glam/gld.hpp"
#include "glam/model.hpp"

namespace glam {

using QuantileFn = std::function<double(double u)>;

struct W2Options {
  double epsilon = 1e-6;  // integration range [epsilon, 1 - epsilon]
  int panels = 128;       // composite Gauss-Legendre, 16 nodes per panel
};

// sqrt(int (Q1 - Q2)^2 du) by quadrature in t = logit(u).
double wasserstein2(const QuantileFn& q1, const QuantileFn& q2, const W2Options& opts = {});

// nullopt when a shape parameter is <= -0.5 (quantile not square-integrable).
std::optional<double> wasserstein2(const GldParams& a, const GldParams& b, const W2Options& opts = {});

// Interpolated order-statistic quantile (type 7) of a sorted sample.
double empirical_quantile(std::span<const double> sorted, double u);

struct EmpiricalReference {
  std::vector<double> sorted;  // replications at one test point, ascending
};

struct ReferenceSet {
  Eigen::MatrixXd X;  // test points, physical units
  std::vector<std::variant<GldParams, EmpiricalReference>> references;

  void validate() const;
};

struct MetricsReport {
  double eps_w = 0.0;
  // NaN when the reference carries no closed-form moments.
  double nmse_mean = 0.0;
  double nmse_var = 0.0;
  double total_variance = 0.0;
  std::vector<double> distances;  // per test point
};

// Throws DomainError ("metric undefined") when a distance or the total
// variance is undefined.
MetricsReport normalized_ws_error(const AnyModel& model, const ReferenceSet& reference,
                                  int workers = 1);

// Sum (pred - truth)^2 / sum (truth - mean(truth))^2.
double nmse(std::span<const double> predicted, std::span<const double> truth);

}  // namespace glam
