#pragma once

// Independent input marginals, isoprobabilistic standardization and
// experimental designs.

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "glam/pce.hpp"

namespace glam {

struct Marginal {
  enum class Kind { Uniform, Gaussian, Lognormal };

  Kind kind = Kind::Uniform;
  // Uniform: (lower, upper). Gaussian: (mean, std). Lognormal: (mean, std) of ln X.
  double a = 0.0;
  double b = 1.0;

  static Marginal uniform(double lower, double upper);
  static Marginal gaussian(double mean, double std);
  static Marginal lognormal(double mu_log, double sigma_log);

  void validate() const;

  double to_standard(double x) const;
  double from_standard(double xi) const;
  // Inverse CDF of the physical variable.
  double inverse_cdf(double v) const;
  bool in_domain(double x) const;
  PolyFamily family() const;

  friend bool operator==(const Marginal&, const Marginal&) = default;
};

std::string to_string(Marginal::Kind kind);
Marginal::Kind parse_marginal_kind(const std::string& s);

struct InputModel {
  std::vector<Marginal> marginals;
  std::vector<std::string> names;

  std::size_t dim() const { return marginals.size(); }
  void validate() const;

  std::vector<double> to_standard(std::span<const double> x) const;
  std::vector<double> from_standard(std::span<const double> xi) const;
  Eigen::MatrixXd to_standard(const Eigen::MatrixXd& x) const;
  std::vector<PolyFamily> families() const;
  bool in_domain(std::span<const double> x) const;

  // Model restricted to the given columns (in that order).
  InputModel subset(std::span<const int> columns) const;

  friend bool operator==(const InputModel&, const InputModel&) = default;
};

// Randomized Latin hypercube design, one row per point.
Eigen::MatrixXd lhs_sample(const InputModel& model, std::size_t n, std::uint64_t seed);

// Plain i.i.d. Monte Carlo design.
Eigen::MatrixXd mc_sample(const InputModel& model, std::size_t n, std::uint64_t seed);

}  // namespace glam
