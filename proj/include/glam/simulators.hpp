#pragma once

// Reference stochastic simulators (a synthetic GLaM pair and the stochastic
// borehole function) and the repeated-design experiment harness.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "glam/metrics.hpp"
#include "glam/model.hpp"
#include "glam/rng.hpp"

namespace glam {

// Synthetic HF/LF GLaMs on U([0, 2])^4 with orthonormal Legendre bases.
struct SyntheticPair {
  GlamModel hf;
  GlamModel lf;
};

InputModel synthetic_input();
const SyntheticPair& synthetic_pair();

double synthetic_hf(std::span<const double> x, Rng& rng);
double synthetic_lf(std::span<const double> x, Rng& rng);

// Deterministic borehole flow rate [m^3/yr]. Throws DomainError unless
// r > r_w > 0 and the remaining arguments are positive.
double borehole_det(double r_w, double r, double t_u, double h_u, double t_l, double h_l, double l,
                    double k_w);
// Low-fidelity variant (numerator constant 5, denominator constant 1.5).
double borehole_det_lf(double r_w, double r, double t_u, double h_u, double t_l, double h_l, double l,
                       double k_w);

// All eight borehole variables in the order r_w, h_u, k_w, r, t_u, t_l, h_l, l.
InputModel borehole_variables();
InputModel borehole_hf_input();  // r_w, h_u, k_w
InputModel borehole_lf_input();  // r_w, h_u

// Latent variables are drawn fresh from `rng` on every call.
double borehole_hf(double r_w, double h_u, double k_w, Rng& rng);
double borehole_lf(double r_w, double h_u, Rng& rng);

enum class Example { Synthetic, Borehole };

std::string to_string(Example e);
Example parse_example(const std::string& s);

// Simulator pair of an example. The LF simulator takes LF coordinates.
struct ExampleSetup {
  InputModel hf_input;
  std::vector<int> lf_columns;
  std::function<double(std::span<const double>, Rng&)> hf;
  std::function<double(std::span<const double>, Rng&)> lf;
  const GlamModel* analytic_hf = nullptr;  // closed-form HF reference if any
};

ExampleSetup example_setup(Example e);

struct ExperimentPlan {
  Example example = Example::Synthetic;
  std::vector<std::size_t> n_high{100, 200, 400, 800};
  std::size_t n_low = 1000;
  std::size_t repetitions = 25;
  std::size_t test_points = 1000;
  std::size_t replications = 250;  // per test point, empirical references only
  double p = 0.5;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
};

struct ExperimentRow {
  std::string example;
  std::size_t n_high = 0;
  std::size_t repetition = 0;
  std::string model;  // LF, HF or MF
  double eps_w = 0.0;
  double nmse_mean = 0.0;
  double nmse_var = 0.0;
  double wall_time = 0.0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string message;  // failure reason when !ok
};

struct CellSummary {
  std::size_t n_high = 0;
  std::string model;
  double median = 0.0;
  double iqr = 0.0;
  std::size_t successes = 0;
  std::size_t failures = 0;
};

struct ExperimentReport {
  ExperimentPlan plan;
  std::vector<ExperimentRow> rows;
  std::vector<CellSummary> summary;
};

// Reference set of an example: analytic HF GLD parameters, or sorted
// replications of the HF simulator.
ReferenceSet make_reference(const ExampleSetup& setup, std::size_t n_points, std::size_t replications,
                            std::uint64_t seed);

// Evaluates `sim` once per design row, each with its own derived stream.
Eigen::VectorXd simulate_design(const std::function<double(std::span<const double>, Rng&)>& sim,
                                const Eigen::MatrixXd& X, std::uint64_t seed);

ExperimentReport run_experiment(const ExperimentPlan& plan);

}  // namespace glam
