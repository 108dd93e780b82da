#include "glam/pce.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "glam/error.hpp"

namespace glam {
namespace {

void enumerate(int dim, int budget, MultiIndex& current, int pos,
               std::vector<MultiIndex>& out) {
  if (pos == dim) {
    out.push_back(current);
    return;
  }
  for (int d = 0; d <= budget; ++d) {
    current[pos] = d;
    enumerate(dim, budget - d, current, pos + 1, out);
  }
  current[pos] = 0;
}

int total_degree(const MultiIndex& a) { return std::accumulate(a.begin(), a.end(), 0); }

}  // namespace

int TruncationSet::max_degree() const {
  int m = 0;
  for (const auto& a : indices) m = std::max(m, *std::max_element(a.begin(), a.end()));
  return m;
}

double q_quasi_norm(const MultiIndex& alpha, double q) {
  double s = 0.0;
  for (int a : alpha)
    if (a > 0) s += std::pow(static_cast<double>(a), q);
  return std::pow(s, 1.0 / q);
}

bool graded_less(const MultiIndex& a, const MultiIndex& b) {
  const int da = total_degree(a), db = total_degree(b);
  if (da != db) return da < db;
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

TruncationSet generate_truncation(int dim, int degree, double q) {
  if (dim < 1) throw ConfigError("truncation dimension must be >= 1");
  if (degree < 0) throw ConfigError("truncation degree must be >= 0");
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("q-norm exponent must lie in (0, 1]");

  // ||a||_q >= ||a||_1 for q <= 1, so total degree <= p bounds the search.
  std::vector<MultiIndex> all;
  MultiIndex cur(static_cast<std::size_t>(dim), 0);
  enumerate(dim, degree, cur, 0, all);

  TruncationSet set{dim, degree, q, {}};
  const double limit = static_cast<double>(degree) * (1.0 + 1e-12);
  for (auto& a : all)
    if (q_quasi_norm(a, q) <= limit) set.indices.push_back(std::move(a));
  std::sort(set.indices.begin(), set.indices.end(), graded_less);
  return set;
}

TruncationSet constant_truncation(int dim) { return generate_truncation(dim, 0, 1.0); }

std::vector<double> univariate_values(PolyFamily family, int max_degree, double x) {
  std::vector<double> v(static_cast<std::size_t>(max_degree) + 1);
  v[0] = 1.0;
  if (max_degree == 0) return v;
  if (family == PolyFamily::Legendre) {
    // Monic-free recurrence on P_n, then scale by sqrt(2n + 1).
    double pm1 = 1.0, p = x;
    v[1] = std::sqrt(3.0) * x;
    for (int n = 1; n < max_degree; ++n) {
      const double pn1 = ((2.0 * n + 1.0) * x * p - n * pm1) / (n + 1.0);
      pm1 = p;
      p = pn1;
      v[n + 1] = std::sqrt(2.0 * (n + 1) + 1.0) * p;
    }
  } else {
    // Orthonormal Hermite: h_{n+1} = (x h_n - sqrt(n) h_{n-1}) / sqrt(n + 1).
    v[1] = x;
    for (int n = 1; n < max_degree; ++n)
      v[n + 1] = (x * v[n] - std::sqrt(static_cast<double>(n)) * v[n - 1]) /
                 std::sqrt(n + 1.0);
  }
  return v;
}

std::vector<double> eval_basis(std::span<const double> xi,
                               const std::vector<MultiIndex>& indices,
                               std::span<const PolyFamily> families) {
  const std::size_t dim = xi.size();
  if (families.size() != dim) throw DomainError("basis evaluation: dimension mismatch");
  int maxdeg = 0;
  for (const auto& a : indices) {
    if (a.size() != dim) throw DomainError("basis evaluation: dimension mismatch");
    for (int d : a) maxdeg = std::max(maxdeg, d);
  }
  std::vector<std::vector<double>> uni(dim);
  for (std::size_t j = 0; j < dim; ++j) uni[j] = univariate_values(families[j], maxdeg, xi[j]);

  std::vector<double> out(indices.size(), 1.0);
  for (std::size_t k = 0; k < indices.size(); ++k)
    for (std::size_t j = 0; j < dim; ++j)
      if (indices[k][j] != 0) out[k] *= uni[j][static_cast<std::size_t>(indices[k][j])];
  return out;
}

Eigen::MatrixXd basis_matrix(const Eigen::MatrixXd& xi,
                             const std::vector<MultiIndex>& indices,
                             std::span<const PolyFamily> families) {
  Eigen::MatrixXd out(xi.rows(), static_cast<Eigen::Index>(indices.size()));
  std::vector<double> row(static_cast<std::size_t>(xi.cols()));
  for (Eigen::Index i = 0; i < xi.rows(); ++i) {
    for (Eigen::Index j = 0; j < xi.cols(); ++j) row[static_cast<std::size_t>(j)] = xi(i, j);
    const auto v = eval_basis(row, indices, families);
    for (std::size_t k = 0; k < v.size(); ++k) out(i, static_cast<Eigen::Index>(k)) = v[k];
  }
  return out;
}

}  // namespace glam
