#include "glam/input_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "glam/error.hpp"
#include "glam/rng.hpp"
#include "glam/special.hpp"

namespace glam {

Marginal Marginal::uniform(double lower, double upper) {
  Marginal m{Kind::Uniform, lower, upper};
  m.validate();
  return m;
}

Marginal Marginal::gaussian(double mean, double std) {
  Marginal m{Kind::Gaussian, mean, std};
  m.validate();
  return m;
}

Marginal Marginal::lognormal(double mu_log, double sigma_log) {
  Marginal m{Kind::Lognormal, mu_log, sigma_log};
  m.validate();
  return m;
}

void Marginal::validate() const {
  if (!std::isfinite(a) || !std::isfinite(b))
    throw ConfigError("marginal parameters must be finite");
  switch (kind) {
    case Kind::Uniform:
      if (!(b > a)) throw ConfigError("uniform marginal needs upper > lower");
      break;
    case Kind::Gaussian:
    case Kind::Lognormal:
      if (!(b > 0.0)) throw ConfigError("marginal standard deviation must be > 0");
      break;
  }
}

double Marginal::to_standard(double x) const {
  switch (kind) {
    case Kind::Uniform:
      return 2.0 * (x - a) / (b - a) - 1.0;
    case Kind::Gaussian:
      return (x - a) / b;
    case Kind::Lognormal:
      if (!(x > 0.0)) throw DomainError("lognormal variable must be positive");
      return (std::log(x) - a) / b;
  }
  return 0.0;
}

double Marginal::from_standard(double xi) const {
  switch (kind) {
    case Kind::Uniform:
      return a + 0.5 * (xi + 1.0) * (b - a);
    case Kind::Gaussian:
      return a + b * xi;
    case Kind::Lognormal:
      return std::exp(a + b * xi);
  }
  return 0.0;
}

double Marginal::inverse_cdf(double v) const {
  switch (kind) {
    case Kind::Uniform:
      return a + v * (b - a);
    case Kind::Gaussian:
      return a + b * normal_quantile(v);
    case Kind::Lognormal:
      return std::exp(a + b * normal_quantile(v));
  }
  return 0.0;
}

bool Marginal::in_domain(double x) const {
  switch (kind) {
    case Kind::Uniform:
      return x >= a && x <= b;
    case Kind::Gaussian:
      return std::isfinite(x);
    case Kind::Lognormal:
      return x > 0.0 && std::isfinite(x);
  }
  return false;
}

PolyFamily Marginal::family() const {
  return kind == Kind::Uniform ? PolyFamily::Legendre : PolyFamily::Hermite;
}

std::string to_string(Marginal::Kind kind) {
  switch (kind) {
    case Marginal::Kind::Uniform:
      return "uniform";
    case Marginal::Kind::Gaussian:
      return "gaussian";
    case Marginal::Kind::Lognormal:
      return "lognormal";
  }
  return "?";
}

Marginal::Kind parse_marginal_kind(const std::string& s) {
  if (s == "uniform") return Marginal::Kind::Uniform;
  if (s == "gaussian" || s == "normal") return Marginal::Kind::Gaussian;
  if (s == "lognormal") return Marginal::Kind::Lognormal;
  throw ConfigError("unknown marginal kind '" + s + "'");
}

void InputModel::validate() const {
  if (marginals.empty()) throw ConfigError("input model needs at least one marginal");
  if (names.size() != marginals.size())
    throw ConfigError("input model: one name per marginal required");
  std::set<std::string> seen;
  for (const auto& n : names)
    if (!seen.insert(n).second) throw ConfigError("input model: duplicate name '" + n + "'");
  for (const auto& m : marginals) m.validate();
}

std::vector<double> InputModel::to_standard(std::span<const double> x) const {
  if (x.size() != dim()) throw DomainError("point dimension does not match input model");
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = marginals[j].to_standard(x[j]);
  return out;
}

std::vector<double> InputModel::from_standard(std::span<const double> xi) const {
  if (xi.size() != dim()) throw DomainError("point dimension does not match input model");
  std::vector<double> out(xi.size());
  for (std::size_t j = 0; j < xi.size(); ++j) out[j] = marginals[j].from_standard(xi[j]);
  return out;
}

Eigen::MatrixXd InputModel::to_standard(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != dim())
    throw DomainError("design dimension does not match input model");
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      out(i, j) = marginals[static_cast<std::size_t>(j)].to_standard(x(i, j));
  return out;
}

std::vector<PolyFamily> InputModel::families() const {
  std::vector<PolyFamily> f;
  for (const auto& m : marginals) f.push_back(m.family());
  return f;
}

bool InputModel::in_domain(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (!marginals[j].in_domain(x[j])) return false;
  return true;
}

InputModel InputModel::subset(std::span<const int> columns) const {
  InputModel out;
  for (int c : columns) {
    if (c < 0 || static_cast<std::size_t>(c) >= dim())
      throw ConfigError("input subset: column index out of range");
    out.marginals.push_back(marginals[static_cast<std::size_t>(c)]);
    out.names.push_back(names[static_cast<std::size_t>(c)]);
  }
  return out;
}

Eigen::MatrixXd lhs_sample(const InputModel& model, std::size_t n, std::uint64_t seed) {
  model.validate();
  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd out(rows, static_cast<Eigen::Index>(model.dim()));
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < model.dim(); ++j) {
    Rng rng(derive_seed(seed, "lhs", j));
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    // Fisher-Yates with our own uniform variates for portability.
    for (std::size_t i = n; i > 1; --i) {
      auto k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
      if (k >= i) k = i - 1;
      std::swap(perm[i - 1], perm[k]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double v = (static_cast<double>(perm[i]) + rng.uniform()) / static_cast<double>(n);
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          model.marginals[j].inverse_cdf(v);
    }
  }
  return out;
}

Eigen::MatrixXd mc_sample(const InputModel& model, std::size_t n, std::uint64_t seed) {
  model.validate();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(model.dim()));
  Rng rng(derive_seed(seed, "mc"));
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < model.dim(); ++j)
      out(i, static_cast<Eigen::Index>(j)) = model.marginals[j].inverse_cdf(rng.uniform());
  return out;
}

}  // namespace glam
