#pragma once

// Multi-fidelity GLaM fitting: LF GLaM first, then joint maximum likelihood
// over LF and HF data for every discrepancy candidate, selected by MF-BIC.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "glam/fit.hpp"

namespace glam {

struct MfFitConfig {
  double p = 0.5;                // weight of the LF data source
  std::vector<int> lf_columns;   // HF columns seen by the LF model; empty = all
  FitConfig lf;                  // LF GLaM fit
  // Grids of the lambda1 and lambda2 discrepancies; nullopt = defaults.
  std::optional<std::array<ParamGrid, 2>> discrepancy_grid;
  std::size_t small_n_threshold = 150;  // on N_H
  bool shape_discrepancy = false;       // constant lambda3/lambda4 discrepancies
  OptimConfig optim;
  int max_widenings = 5;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
};

std::array<ParamGrid, 2> default_discrepancy_grid(std::size_t n_high, std::size_t small_n_threshold = 150);

double mf_bic(double loglik, std::size_t n_theta, std::size_t n_high, std::size_t n_low);

// Validated column map (identity when `lf_columns` is empty). Throws
// ConfigError on duplicates or indices outside [0, hf_dim).
std::vector<int> input_subset_map(std::span<const int> lf_columns, std::size_t hf_dim);

// Columns `map` of X, in map order.
Eigen::MatrixXd project_columns(const Eigen::MatrixXd& X, std::span<const int> map);

struct MfCandidateRecord {
  int degree1 = 0;
  double q1 = 1.0;
  int degree2 = 0;
  double q2 = 1.0;
  std::size_t n_params = 0;
  double loglik = 0.0;
  double mf_bic = 0.0;
  bool feasible = false;
  OptimStage stage = OptimStage::TrustRegion;
  bool converged = false;
};

struct MfFitReport {
  FitReport lf;
  std::vector<MfCandidateRecord> candidates;  // one row per grid tuple
  std::size_t selected_index = 0;
  Eigen::VectorXd theta;  // (c, d) of the selected candidate
  double loglik = 0.0;
  double mf_bic = 0.0;
  std::size_t n_high = 0;
  std::size_t n_low = 0;
  std::uint64_t seed = 0;
  double wall_time = 0.0;
};

struct MfGlamFit {
  MfGlamModel model;
  MfFitReport report;
  GlamModel lf_only;  // the stage-one LF GLaM
};

// `lf.X` holds either the LF columns only or the full HF width (then it is
// projected). Throws FitError when no candidate admits a feasible start.
MfGlamFit fit_mfglam(const Dataset& hf, const Dataset& lf, const InputModel& hf_input,
                     const MfFitConfig& config = {});

// Same, reusing an LF GLaM already fitted on `lf` (its inputs restricted to
// the LF columns); config.lf is then ignored.
MfGlamFit fit_mfglam(const Dataset& hf, const Dataset& lf, const InputModel& hf_input,
                     const MfFitConfig& config, const GlamFit& lf_fit);

}  // namespace glam
