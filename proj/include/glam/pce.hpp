#pragma once

// Multi-index sets under hyperbolic (q-norm) truncation and evaluation of
// orthonormal tensor-product polynomial bases.

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace glam {

using MultiIndex = std::vector<int>;

// Family of the univariate polynomials for one standardized coordinate.
enum class PolyFamily {
  Legendre,  // orthonormal w.r.t. U(-1, 1)
  Hermite,   // orthonormal w.r.t. N(0, 1) (probabilists')
};

struct TruncationSet {
  int dim = 0;
  int degree = 0;
  double qnorm = 1.0;
  // Graded order: by total degree, then lexicographically descending.
  std::vector<MultiIndex> indices;

  std::size_t size() const { return indices.size(); }
  int max_degree() const;
};

double q_quasi_norm(const MultiIndex& alpha, double q);

// All alpha in N^dim with ||alpha||_q <= degree. Throws ConfigError for
// dim < 1, degree < 0 or q outside (0, 1].
TruncationSet generate_truncation(int dim, int degree, double q);

// Index set holding only the zero multi-index.
TruncationSet constant_truncation(int dim);

bool graded_less(const MultiIndex& a, const MultiIndex& b);

// Values of the orthonormal univariate polynomials of degree 0..max_degree
// at x (three-term recurrence).
std::vector<double> univariate_values(PolyFamily family, int max_degree, double x);

// Basis values at one standardized point; entry k belongs to indices[k].
std::vector<double> eval_basis(std::span<const double> xi,
                               const std::vector<MultiIndex>& indices,
                               std::span<const PolyFamily> families);

// Design matrix: one row per point (rows of `xi`), one column per index.
Eigen::MatrixXd basis_matrix(const Eigen::MatrixXd& xi,
                             const std::vector<MultiIndex>& indices,
                             std::span<const PolyFamily> families);

}  // namespace glam
