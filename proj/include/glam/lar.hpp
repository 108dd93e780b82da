#pragma once

// Hybrid least-angle regression: the LAR path proposes nested supports, each
// support is refit by (weighted) least squares, and the support with the
// smallest corrected leave-one-out error wins.

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "glam/pce.hpp"

namespace glam {

struct LarResult {
  Eigen::VectorXd coefficients;  // one per design column, zero off-support
  std::vector<int> support;      // selected columns, in entry order
  double loo_error = 0.0;        // corrected LOO error relative to var(y)
};

// `design` column `forced` (default the constant, column 0) is always in the
// model. `weights` (empty for ordinary least squares) are per-row
// precisions. Throws ConfigError for fewer than two rows or no columns.
LarResult hybrid_lar(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& weights = {}, int forced = 0);

// Degree-adaptive sparse PCE: hybrid LAR over every (degree, q) candidate,
// degrees ascending, stopping after two degrees without LOO improvement.
struct SparsePce {
  TruncationSet candidate;   // candidate set that won
  TruncationSet selected;    // its LAR support (always contains the constant)
  Eigen::VectorXd coefficients;  // aligned with selected.indices
  double loo_error = 0.0;
};

SparsePce fit_sparse_pce(const Eigen::MatrixXd& xi, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& weights, std::span<const PolyFamily> families,
                         std::span<const int> degrees, std::span<const double> qnorms);

}  // namespace glam
