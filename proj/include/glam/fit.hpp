#pragma once

// Single-fidelity GLaM fitting: FGLS initialization of the lambda1/lambda2
// expansions, then joint maximum likelihood with BIC-driven escalation of
// the lambda3/lambda4 truncation sets.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "glam/likelihood.hpp"
#include "glam/model.hpp"
#include "glam/optimize.hpp"

namespace glam {

struct ParamGrid {
  std::vector<int> degrees;
  std::vector<double> qnorms;

  void validate(const char* what) const;
  // Distinct truncation sets of the grid, ordered by size then degree.
  std::vector<TruncationSet> unique_sets(int dim) const;
};

struct CandidateGrid {
  std::array<ParamGrid, 4> params;

  static CandidateGrid standard();
  // Reduced grid used for small training sets.
  static CandidateGrid small_sample();
  void validate() const;
};

// standard() unless n < small_n_threshold.
CandidateGrid default_grid(std::size_t n, std::size_t small_n_threshold = 150);

struct FitConfig {
  std::optional<CandidateGrid> grid;  // nullopt: default_grid(n, threshold)
  std::size_t small_n_threshold = 150;
  double initial_shape = 0.13;
  int fgls_max_iterations = 10;
  double fgls_tolerance = 1e-3;
  OptimConfig optim;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct FglsResult {
  TruncationSet mean_set;
  TruncationSet variance_set;
  Eigen::VectorXd c1;  // lambda1 coefficients on mean_set
  Eigen::VectorXd c2;  // lambda2 (log scale) coefficients on variance_set
  int iterations = 0;
  bool variance_floor_hit = false;
};

FglsResult fgls_init(const Dataset& data, const InputModel& input, const CandidateGrid& grid,
                     const FitConfig& config = {});

double bic(double loglik, std::size_t k, std::size_t n);

struct CandidateRecord {
  TruncationSet set3;
  TruncationSet set4;
  std::size_t n_params = 0;
  double loglik = 0.0;
  double bic = 0.0;
  bool feasible = false;
  OptimStage stage = OptimStage::TrustRegion;
  bool converged = false;
};

struct FitReport {
  std::array<TruncationSet, 4> selected;
  std::array<Eigen::VectorXd, 4> coefficients;
  std::vector<CandidateRecord> candidates;
  std::size_t selected_index = 0;
  double loglik = 0.0;
  double bic = 0.0;
  std::size_t n_samples = 0;
  int fgls_iterations = 0;
  std::uint64_t seed = 0;
  double wall_time = 0.0;  // seconds
};

struct GlamFit {
  GlamModel model;
  FitReport report;
};

// Smallest training set accepted for `input` and `grid`.
std::size_t minimum_sample_size(const InputModel& input, const CandidateGrid& grid);

// Throws FitError when n is below minimum_sample_size or no candidate is
// feasible.
GlamFit fit_glam(const Dataset& data, const InputModel& input, const FitConfig& config = {});

// Shared by the MF fit: maximize with lambda2 widening when theta0 is
// infeasible. `lambda2_constant` is the index of the constant lambda2
// coefficient in theta.
OptimReport maximize_with_widening(const LikelihoodObjective& objective, Eigen::VectorXd theta0,
                                   Eigen::Index lambda2_constant, int max_widenings,
                                   const OptimConfig& config);

}  // namespace glam
