#include "glam/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "glam/error.hpp"
#include "glam/rng.hpp"

namespace glam {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Approximately minimizes g'p + p'Bp/2 over ||p|| <= radius (Steihaug-Toint CG).
Eigen::VectorXd steihaug(const Eigen::MatrixXd& B, const Eigen::VectorXd& g, double radius) {
  const Eigen::Index n = g.size();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = g;
  Eigen::VectorXd d = -r;
  const double tol = std::min(0.5, std::sqrt(g.norm())) * g.norm();

  auto to_boundary = [&](const Eigen::VectorXd& zz, const Eigen::VectorXd& dd) {
    const double a = dd.squaredNorm();
    const double b = 2.0 * zz.dot(dd);
    const double c = zz.squaredNorm() - radius * radius;
    const double tau = (-b + std::sqrt(std::max(0.0, b * b - 4.0 * a * c))) / (2.0 * a);
    return Eigen::VectorXd(zz + tau * dd);
  };

  if (g.norm() == 0.0) return z;
  for (Eigen::Index it = 0; it < 2 * n + 10; ++it) {
    const Eigen::VectorXd Bd = B * d;
    const double dBd = d.dot(Bd);
    if (dBd <= 0.0) return to_boundary(z, d);
    const double alpha = r.squaredNorm() / dBd;
    const Eigen::VectorXd zn = z + alpha * d;
    if (zn.norm() >= radius) return to_boundary(z, d);
    const Eigen::VectorXd rn = r + alpha * Bd;
    if (rn.norm() < tol) return zn;
    const double beta = rn.squaredNorm() / r.squaredNorm();
    d = -rn + beta * d;
    z = zn;
    r = rn;
  }
  return z;
}

struct Eval {
  double f;  // value to minimize (= -objective)
  Eigen::VectorXd g;
};

class Counter {
public:
  explicit Counter(const Objective& obj) : obj_(obj) {}
  Eval with_gradient(const Eigen::VectorXd& x) {
    ++count;
    Eigen::VectorXd g(x.size());
    const double v = obj_(x, &g);
    if (!std::isfinite(v)) return {std::numeric_limits<double>::infinity(), g};
    return {-v, -g};
  }
  double value(const Eigen::VectorXd& x) {
    ++count;
    const double v = obj_(x, nullptr);
    return std::isfinite(v) ? v : kNegInf;
  }
  int count = 0;

private:
  const Objective& obj_;
};

struct StageOne {
  Eigen::VectorXd x;
  double f;
  int iterations;
  bool converged;
  bool hit_infeasible;
  double radius;
};

StageOne trust_region(Counter& eval, const Eigen::VectorXd& x0, const OptimConfig& cfg) {
  const Eigen::Index n = x0.size();
  Eigen::VectorXd x = x0;
  Eval cur = eval.with_gradient(x);
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  double radius = std::max(1.0, 0.1 * x.norm());
  bool hit_infeasible = false;
  int stalled = 0;

  for (int it = 0; it < cfg.trust_region_max_iterations; ++it) {
    if (!cur.g.allFinite()) return {x, cur.f, it, false, hit_infeasible, radius};
    if (cur.g.norm() < cfg.gradient_tolerance * (1.0 + std::abs(cur.f)))
      return {x, cur.f, it, true, hit_infeasible, radius};
    if (n == 0) return {x, cur.f, it, true, hit_infeasible, radius};

    const Eigen::VectorXd p = steihaug(B, cur.g, radius);
    const double predicted = -(cur.g.dot(p) + 0.5 * p.dot(B * p));
    const Eigen::VectorXd xn = x + p;
    Eval trial = eval.with_gradient(xn);
    double rho;
    if (!std::isfinite(trial.f)) {
      hit_infeasible = true;
      rho = -1.0;
    } else {
      rho = predicted > 0.0 ? (cur.f - trial.f) / predicted : -1.0;
      // SR1 update, skipped when the denominator is unreliable.
      const Eigen::VectorXd yv = trial.g - cur.g;
      if (yv.allFinite()) {
        if (!scaled) {
          const double sy = p.dot(yv);
          if (sy > 0.0) {
            B *= yv.squaredNorm() / sy;
            scaled = true;
          }
        }
        const Eigen::VectorXd v = yv - B * p;
        const double denom = v.dot(p);
        if (std::abs(denom) > 1e-8 * p.norm() * v.norm() && std::abs(denom) > 0.0)
          B += v * v.transpose() / denom;
      }
    }

    const double pnorm = p.norm();
    if (rho < 0.25)
      radius = 0.25 * pnorm;
    else if (rho > 0.75 && pnorm >= 0.8 * radius)
      radius = 2.0 * radius;

    if (rho > 1e-4) {
      const double improvement = cur.f - trial.f;
      x = xn;
      cur = std::move(trial);
      stalled = improvement <= 1e-14 * (1.0 + std::abs(cur.f)) ? stalled + 1 : 0;
    } else {
      ++stalled;
    }
    if (radius < 1e-12 * (1.0 + x.norm()) || stalled > 50)
      return {x, cur.f, it + 1, false, hit_infeasible, radius};
  }
  return {x, cur.f, cfg.trust_region_max_iterations, false, hit_infeasible, radius};
}

// (1+1)-CMA-ES with Cholesky-factor covariance updates; infeasible offspring
// are resampled. Maximizes.
struct CmaesResult {
  Eigen::VectorXd x;
  double f;
  int iterations;
};

CmaesResult one_plus_one_cmaes(Counter& eval, const Eigen::VectorXd& x0, double f0,
                               double sigma0, int budget, std::uint64_t seed) {
  const Eigen::Index n = x0.size();
  const double nd = static_cast<double>(n);
  const double damping = 1.0 + nd / 2.0;
  const double p_target = 2.0 / 11.0;
  const double c_p = 1.0 / 12.0;
  const double c_c = 2.0 / (nd + 2.0);
  const double c_cov = 2.0 / (nd * nd + 6.0);
  const double p_thresh = 0.44;

  Rng rng(derive_seed(seed, "cmaes"));
  Eigen::VectorXd x = x0;
  double f = f0;
  double sigma = sigma0;
  double p_succ = p_target;
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd Ainv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd pc = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z(n);
  int iterations = 0;
  int infeasible_run = 0;

  const int start = eval.count;
  while (eval.count - start < budget && sigma > 1e-12) {
    ++iterations;
    for (Eigen::Index k = 0; k < n; ++k) z[k] = rng.normal();
    const Eigen::VectorXd step = A * z;
    const Eigen::VectorXd y = x + sigma * step;
    const double fy = eval.value(y);
    if (!std::isfinite(fy)) {
      // Resample; persistent infeasibility shrinks the step.
      if (++infeasible_run % 20 == 0) sigma *= 0.5;
      continue;
    }
    infeasible_run = 0;
    const bool success = fy >= f;
    p_succ = (1.0 - c_p) * p_succ + c_p * (success ? 1.0 : 0.0);
    sigma *= std::exp((p_succ - p_target) / (damping * (1.0 - p_target)));
    if (!success) continue;
    x = y;
    f = fy;
    double alpha;
    if (p_succ < p_thresh) {
      pc = (1.0 - c_c) * pc + std::sqrt(c_c * (2.0 - c_c)) * step;
      alpha = 1.0 - c_cov;
    } else {
      pc = (1.0 - c_c) * pc;
      alpha = 1.0 - c_cov + c_cov * c_c * (2.0 - c_c);
    }
    const Eigen::VectorXd w = Ainv * pc;
    const double w2 = w.squaredNorm();
    if (w2 > 0.0) {
      const double sa = std::sqrt(alpha);
      const double root = std::sqrt(1.0 + c_cov * w2 / alpha);
      const Eigen::RowVectorXd wAinv = w.transpose() * Ainv;
      A = sa * A + (sa / w2) * (root - 1.0) * pc * w.transpose();
      Ainv = (1.0 / sa) * Ainv - (1.0 / (sa * w2)) * (1.0 - 1.0 / root) * w * wAinv;
    }
  }
  return {x, f, iterations};
}

}  // namespace

OptimReport maximize(const Objective& objective, const Eigen::VectorXd& theta0,
                     const OptimConfig& config) {
  Counter eval(objective);
  {
    Eigen::VectorXd g(theta0.size());
    const double v0 = objective(theta0, &g);
    ++eval.count;
    if (!std::isfinite(v0)) throw FitError("optimizer: no feasible starting point");
  }
  StageOne s1 = trust_region(eval, theta0, config);

  OptimReport rep;
  rep.theta = s1.x;
  rep.loglik = -s1.f;
  rep.iterations = s1.iterations;
  rep.converged = s1.converged;
  rep.hit_infeasible = s1.hit_infeasible;
  rep.stage = OptimStage::TrustRegion;

  if (!s1.converged && config.enable_cmaes && config.cmaes_budget > 0 && theta0.size() > 0) {
    const double sigma0 = std::clamp(s1.radius, 1e-4, 0.1);
    CmaesResult s2 = one_plus_one_cmaes(eval, s1.x, -s1.f, sigma0, config.cmaes_budget, config.seed);
    rep.stage = OptimStage::Cmaes;
    rep.iterations += s2.iterations;
    if (s2.f > rep.loglik) {
      rep.theta = s2.x;
      rep.loglik = s2.f;
    }
  }
  // Report the value from the same evaluation path callers use.
  rep.loglik = objective(rep.theta, nullptr);
  ++eval.count;
  rep.evaluations = eval.count;
  return rep;
}

FdGradient fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                       const Eigen::VectorXd& theta, double step_scale) {
  FdGradient out{Eigen::VectorXd::Zero(theta.size()), false};
  const double f0 = f(theta);
  Eigen::VectorXd probe = theta;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double h = step_scale * (1.0 + std::abs(theta[k]));
    probe[k] = theta[k] + h;
    const double fp = f(probe);
    probe[k] = theta[k] - h;
    const double fm = f(probe);
    probe[k] = theta[k];
    const bool ok_p = std::isfinite(fp), ok_m = std::isfinite(fm);
    if (ok_p && ok_m)
      out.gradient[k] = (fp - fm) / (2.0 * h);
    else if (ok_p && std::isfinite(f0))
      out.gradient[k] = (fp - f0) / h;
    else if (ok_m && std::isfinite(f0))
      out.gradient[k] = (f0 - fm) / h;
    else
      out.infeasible = true;
  }
  return out;
}

}  // namespace glam
