#pragma once

// Two-stage maximizer: quasi-Newton (SR1) trust region with Steihaug-CG
// steps, followed when stage 1 does not converge by a (1+1)-CMA-ES that
// resamples infeasible offspring.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

namespace glam {

// Objective to maximize. Returns the value (-infinity when infeasible) and,
// when `grad` is non-null, writes the gradient.
using Objective = std::function<double(const Eigen::VectorXd& theta, Eigen::VectorXd* grad)>;

struct OptimConfig {
  int trust_region_max_iterations = 500;
  double gradient_tolerance = 1e-6;  // relative: ||g|| < tol * (1 + |f|)
  int cmaes_budget = 5000;           // objective evaluations
  bool enable_cmaes = true;
  std::uint64_t seed = 0;
};

enum class OptimStage { TrustRegion, Cmaes };

struct OptimReport {
  Eigen::VectorXd theta;
  double loglik = 0.0;
  OptimStage stage = OptimStage::TrustRegion;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool hit_infeasible = false;
};

// Throws FitError when the objective is not finite at theta0.
OptimReport maximize(const Objective& objective, const Eigen::VectorXd& theta0,
                     const OptimConfig& config = {});

struct FdGradient {
  Eigen::VectorXd gradient;
  bool infeasible = false;  // some coordinate had both probes infeasible
};

// Central differences with step scale * (1 + |theta_k|); one-sided when a
// central probe is infeasible.
FdGradient fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                       const Eigen::VectorXd& theta, double step_scale = 1e-6);

}  // namespace glam
