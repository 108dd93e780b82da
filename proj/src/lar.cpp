#include "glam/lar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "glam/error.hpp"

namespace glam {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLooFloor = 1e-20;

// Incremental Gram-Schmidt least squares tracking residuals, hat diagonal and
// tr((X'X)^{-1}) for the corrected LOO error.
class IncrementalLs {
public:
  IncrementalLs(const Eigen::VectorXd& y) : residual_(y), hat_(Eigen::VectorXd::Zero(y.size())) {}

  // False when x is (numerically) in the span of the current columns.
  bool add(const Eigen::VectorXd& x) {
    const Eigen::Index k = static_cast<Eigen::Index>(q_.size());
    Eigen::VectorXd v = x;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(k);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index j = 0; j < k; ++j) {
        const double c = q_[static_cast<std::size_t>(j)].dot(v);
        a[j] += c;
        v -= c * q_[static_cast<std::size_t>(j)];
      }
    const double rho = v.norm();
    if (!(rho > 1e-10 * x.norm()) || rho == 0.0) return false;
    v /= rho;
    hat_ += v.cwiseAbs2();
    residual_ -= v.dot(residual_) * v;
    q_.push_back(std::move(v));

    Eigen::MatrixXd rinv = Eigen::MatrixXd::Zero(k + 1, k + 1);
    if (k > 0) {
      rinv.topLeftCorner(k, k) = rinv_;
      rinv.topRightCorner(k, 1) = -rinv_ * a / rho;
    }
    rinv(k, k) = 1.0 / rho;
    rinv_ = std::move(rinv);
    return true;
  }

  double corrected_loo() const {
    const auto n = static_cast<double>(residual_.size());
    const auto k = static_cast<double>(q_.size());
    if (n - k <= 0.0) return kInf;
    double s = 0.0;
    for (Eigen::Index i = 0; i < residual_.size(); ++i) {
      const double den = 1.0 - hat_[i];
      if (den <= 1e-12) return kInf;
      const double e = residual_[i] / den;
      s += e * e;
    }
    const double loo = s / n;
    const double correction = n / (n - k) * (1.0 + rinv_.squaredNorm());
    return loo * correction;
  }

  std::size_t size() const { return q_.size(); }

private:
  std::vector<Eigen::VectorXd> q_;
  Eigen::VectorXd residual_;
  Eigen::VectorXd hat_;
  Eigen::MatrixXd rinv_;
};

}  // namespace

LarResult hybrid_lar(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& weights, int forced) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (n < 2) throw ConfigError("hybrid LAR needs at least two rows");
  if (p < 1) throw ConfigError("hybrid LAR needs at least one column");
  if (y.size() != n) throw ConfigError("hybrid LAR: response length mismatch");
  if (forced < 0 || forced >= p) throw ConfigError("hybrid LAR: forced column out of range");

  Eigen::VectorXd sw = Eigen::VectorXd::Ones(n);
  if (weights.size() > 0) {
    if (weights.size() != n) throw ConfigError("hybrid LAR: weight length mismatch");
    sw = weights.cwiseMax(0.0).cwiseSqrt();
  }
  const Eigen::MatrixXd xw = sw.asDiagonal() * design;
  const Eigen::VectorXd yw = sw.cwiseProduct(y);
  const double yvar = std::max((yw.array() - yw.mean()).square().mean(), 1e-300);

  IncrementalLs ls(yw);
  ls.add(xw.col(forced));
  std::vector<int> path;  // LAR entry order (excluding forced)
  std::vector<double> path_loo{std::max(ls.corrected_loo() / yvar, kLooFloor)};

  // LAR runs on columns with the forced column projected out, normalized.
  const Eigen::VectorXd f = xw.col(forced);
  const double ff = f.squaredNorm();
  Eigen::MatrixXd z = xw;
  Eigen::VectorXd r = yw;
  if (ff > 0.0) {
    z -= f * (f.transpose() * xw) / ff;
    r -= f * (f.dot(yw) / ff);
  }
  std::vector<bool> usable(static_cast<std::size_t>(p), true);
  usable[static_cast<std::size_t>(forced)] = false;
  const double scale = xw.colwise().norm().maxCoeff();
  for (Eigen::Index j = 0; j < p; ++j) {
    const double nj = z.col(j).norm();
    if (nj <= 1e-10 * std::max(scale, 1e-300)) {
      usable[static_cast<std::size_t>(j)] = false;
      continue;
    }
    z.col(j) /= nj;
  }

  Eigen::VectorXd c = z.transpose() * r;
  const double c0 = [&] {
    double m = 0.0;
    for (Eigen::Index j = 0; j < p; ++j)
      if (usable[static_cast<std::size_t>(j)]) m = std::max(m, std::abs(c[j]));
    return m;
  }();

  const std::size_t max_active =
      static_cast<std::size_t>(std::max<Eigen::Index>(0, std::min<Eigen::Index>(p - 1, n - 3)));
  std::vector<Eigen::Index> active;
  Eigen::MatrixXd chol(0, 0);  // lower Cholesky factor of Z_A' Z_A
  std::vector<bool> in_active(static_cast<std::size_t>(p), false);
  std::size_t best_step = 0;
  const std::size_t patience = std::max<std::size_t>(10, static_cast<std::size_t>(p) / 10);

  auto argmax_inactive = [&]() -> Eigen::Index {
    Eigen::Index best = -1;
    double m = -1.0;
    for (Eigen::Index j = 0; j < p; ++j)
      if (usable[static_cast<std::size_t>(j)] && !in_active[static_cast<std::size_t>(j)] &&
          std::abs(c[j]) > m) {
        m = std::abs(c[j]);
        best = j;
      }
    return best;
  };

  Eigen::Index next = (c0 > 1e-13 * std::sqrt(yw.squaredNorm() + 1e-300)) ? argmax_inactive() : -1;
  while (next >= 0 && active.size() < max_active) {
    // Append `next` to the Cholesky factor of the active Gram matrix.
    const Eigen::Index k = static_cast<Eigen::Index>(active.size());
    Eigen::VectorXd gcol(k);
    for (Eigen::Index i = 0; i < k; ++i) gcol[i] = z.col(active[static_cast<std::size_t>(i)]).dot(z.col(next));
    Eigen::VectorXd l = k > 0 ? chol.triangularView<Eigen::Lower>().solve(gcol) : Eigen::VectorXd();
    const double d2 = 1.0 - l.squaredNorm();
    if (d2 <= 1e-10 || !ls.add(xw.col(next))) {
      usable[static_cast<std::size_t>(next)] = false;
      next = argmax_inactive();
      continue;
    }
    Eigen::MatrixXd nc = Eigen::MatrixXd::Zero(k + 1, k + 1);
    if (k > 0) {
      nc.topLeftCorner(k, k) = chol;
      nc.block(k, 0, 1, k) = l.transpose();
    }
    nc(k, k) = std::sqrt(d2);
    chol = std::move(nc);
    active.push_back(next);
    in_active[static_cast<std::size_t>(next)] = true;
    path.push_back(static_cast<int>(next));
    path_loo.push_back(std::max(ls.corrected_loo() / yvar, kLooFloor));
    if (path_loo.back() < path_loo[best_step]) best_step = path.size();
    if (path.size() - best_step > patience) break;

    // Equiangular direction.
    const Eigen::Index ka = k + 1;
    Eigen::VectorXd s(ka);
    double cmax = 0.0;
    for (Eigen::Index i = 0; i < ka; ++i) {
      const double ci = c[active[static_cast<std::size_t>(i)]];
      s[i] = ci >= 0.0 ? 1.0 : -1.0;
      cmax = std::max(cmax, std::abs(ci));
    }
    if (cmax <= 1e-12 * c0) break;
    const Eigen::VectorXd q =
        chol.transpose().triangularView<Eigen::Upper>().solve(chol.triangularView<Eigen::Lower>().solve(s));
    const double aa = 1.0 / std::sqrt(s.dot(q));
    const Eigen::VectorXd w = aa * q;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < ka; ++i) u += w[i] * z.col(active[static_cast<std::size_t>(i)]);
    const Eigen::VectorXd a = z.transpose() * u;

    double gamma = cmax / aa;
    Eigen::Index arg = -1;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!usable[static_cast<std::size_t>(j)] || in_active[static_cast<std::size_t>(j)]) continue;
      const double g1 = (cmax - c[j]) / (aa - a[j]);
      const double g2 = (cmax + c[j]) / (aa + a[j]);
      for (double g : {g1, g2})
        if (g > 1e-14 && g < gamma) {
          gamma = g;
          arg = j;
        }
    }
    c -= gamma * a;
    next = arg;
  }

  LarResult out;
  out.support.push_back(forced);
  for (std::size_t i = 0; i < best_step; ++i) out.support.push_back(path[i]);
  out.loo_error = path_loo[best_step];

  Eigen::MatrixXd xs(n, static_cast<Eigen::Index>(out.support.size()));
  for (std::size_t k = 0; k < out.support.size(); ++k) xs.col(static_cast<Eigen::Index>(k)) = xw.col(out.support[k]);
  const Eigen::VectorXd beta = xs.colPivHouseholderQr().solve(yw);
  out.coefficients = Eigen::VectorXd::Zero(p);
  for (std::size_t k = 0; k < out.support.size(); ++k) out.coefficients[out.support[k]] = beta[static_cast<Eigen::Index>(k)];
  return out;
}

SparsePce fit_sparse_pce(const Eigen::MatrixXd& xi, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& weights, std::span<const PolyFamily> families,
                         std::span<const int> degrees, std::span<const double> qnorms) {
  if (degrees.empty() || qnorms.empty()) throw ConfigError("sparse PCE: empty candidate grid");
  const int dim = static_cast<int>(xi.cols());
  std::vector<int> degs(degrees.begin(), degrees.end());
  std::sort(degs.begin(), degs.end());
  degs.erase(std::unique(degs.begin(), degs.end()), degs.end());

  const TruncationSet full = generate_truncation(dim, degs.back(), 1.0);
  const Eigen::MatrixXd psi = basis_matrix(xi, full.indices, families);
  std::map<MultiIndex, int> column_of;
  for (std::size_t k = 0; k < full.indices.size(); ++k) column_of[full.indices[k]] = static_cast<int>(k);

  SparsePce best;
  best.loo_error = kInf;
  int degrees_without_gain = 0;
  for (int d : degs) {
    bool improved = false;
    std::vector<std::vector<MultiIndex>> tried;
    for (double q : qnorms) {
      TruncationSet cand = generate_truncation(dim, d, q);
      if (std::find(tried.begin(), tried.end(), cand.indices) != tried.end()) continue;
      tried.push_back(cand.indices);
      Eigen::MatrixXd sub(psi.rows(), static_cast<Eigen::Index>(cand.size()));
      for (std::size_t k = 0; k < cand.size(); ++k)
        sub.col(static_cast<Eigen::Index>(k)) = psi.col(column_of.at(cand.indices[k]));
      const LarResult lar = hybrid_lar(sub, y, weights, 0);
      if (lar.loo_error < best.loo_error) {
        improved = true;
        best.loo_error = lar.loo_error;
        best.selected = TruncationSet{dim, d, q, {}};
        std::vector<int> sup = lar.support;
        std::sort(sup.begin(), sup.end(), [&](int a, int b) {
          return graded_less(cand.indices[static_cast<std::size_t>(a)], cand.indices[static_cast<std::size_t>(b)]);
        });
        best.coefficients.resize(static_cast<Eigen::Index>(sup.size()));
        for (std::size_t k = 0; k < sup.size(); ++k) {
          best.selected.indices.push_back(cand.indices[static_cast<std::size_t>(sup[k])]);
          best.coefficients[static_cast<Eigen::Index>(k)] = lar.coefficients[sup[k]];
        }
        best.candidate = std::move(cand);
      }
    }
    degrees_without_gain = improved ? 0 : degrees_without_gain + 1;
    if (degrees_without_gain >= 2) break;
  }
  return best;
}

}  // namespace glam
