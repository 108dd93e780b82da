#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "glam/error.hpp"
#include "glam/likelihood.hpp"
#include "glam/optimize.hpp"
#include "glam/simulators.hpp"

using glam::Dataset;
using glam::GldParams;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

glam::GlamStructure constant_structure() {
  glam::GlamStructure s;
  s.input = {{glam::Marginal::uniform(0, 1)}, {"x"}};
  for (auto& t : s.sets) t = glam::constant_truncation(1);
  return s;
}

Eigen::VectorXd constant_theta(const GldParams& p) {
  Eigen::VectorXd t(4);
  t << p.lambda1, std::log(p.lambda2), p.lambda3, p.lambda4;
  return t;
}

Dataset gld_data(const GldParams& p, std::size_t n, std::uint64_t seed) {
  glam::Rng rng(seed);
  Dataset d;
  d.X = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), 1, 0.5);
  const auto y = glam::sample(p, n, rng);
  d.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n));
  return d;
}

glam::Objective wrap(const glam::LikelihoodObjective& obj) {
  return [&obj](const Eigen::VectorXd& t, Eigen::VectorXd* g) {
    return g ? obj.value_and_gradient(t, *g) : obj.value(t);
  };
}

// Synthetic-pair structure: LF sets from the LF model, HF fused through a
// linear lambda1 and constant lambda2 discrepancy.
struct MfCase {
  glam::MfStructure s;
  Dataset hf, lf;
  Eigen::VectorXd theta;
};

MfCase synthetic_case(std::size_t n_high, std::size_t n_low, std::uint64_t seed) {
  const auto& pair = glam::synthetic_pair();
  MfCase c;
  c.s.input = glam::synthetic_input();
  c.s.lf_columns = {0, 1, 2, 3};
  for (std::size_t i = 0; i < 4; ++i) c.s.lf_sets[i] = pair.lf.expansions[i].truncation;
  c.s.discrepancy_sets = {glam::generate_truncation(4, 1, 1.0), glam::constant_truncation(4), glam::TruncationSet{},
                          glam::TruncationSet{}};
  c.s.discrepancy_sets[2].dim = c.s.discrepancy_sets[3].dim = 4;
  c.hf.X = glam::lhs_sample(c.s.input, n_high, seed);
  c.hf.y = glam::simulate_design(glam::synthetic_hf, c.hf.X, seed + 1);
  c.lf.X = glam::lhs_sample(c.s.input, n_low, seed + 2);
  c.lf.y = glam::simulate_design(glam::synthetic_lf, c.lf.X, seed + 3);
  c.lf.fidelity = glam::Fidelity::Low;
  c.theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.s.parameter_count()));
  Eigen::Index k = 0;
  for (const auto& e : pair.lf.expansions)
    for (Eigen::Index j = 0; j < e.coefficients.size(); ++j) c.theta[k++] = e.coefficients[j];
  return c;
}

}  // namespace

TEST_CASE("single log-likelihood of a constant model") {
  const auto s = constant_structure();
  const GldParams p{2, 1, 0.38, 0.4};
  Dataset d;
  d.X = Eigen::MatrixXd::Constant(1, 1, 0.3);
  d.y = Eigen::VectorXd::Constant(1, glam::quantile(0.5, p));
  CHECK(glam::single_loglik(constant_theta(p), d, s) == doctest::Approx(glam::log_pdf(d.y[0], p)).epsilon(1e-14));
  d.y[0] = glam::support(p).upper + 0.1;
  CHECK(glam::single_loglik(constant_theta(p), d, s) == -kInf);
  const auto obj = glam::make_single_objective(d, s);
  CHECK(obj.infeasible_count(constant_theta(p)) == 1);
}

TEST_CASE("true parameters dominate a shifted location") {
  const auto s = constant_structure();
  const GldParams p{2, 1.2, 0.38, 0.4};
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Dataset d = gld_data(p, 1000, 1000 + seed);
    Eigen::VectorXd shifted = constant_theta(p);
    shifted[0] += 0.5;
    if (glam::single_loglik(constant_theta(p), d, s) > glam::single_loglik(shifted, d, s)) ++wins;
  }
  CHECK(wins >= 95);
}

TEST_CASE("fidelity weights") {
  auto w = glam::fidelity_weights(0.5, 1000, 200);
  CHECK(w.low == 0.6);
  CHECK(w.high == 3.0);
  w = glam::fidelity_weights(0.5, 321, 321);
  CHECK(w.low == 1.0);
  CHECK(w.high == 1.0);
  glam::Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const double p = rng.uniform();
    const auto nl = static_cast<std::size_t>(1 + rng.next_u64() % 5000);
    const auto nh = static_cast<std::size_t>(1 + rng.next_u64() % 5000);
    w = glam::fidelity_weights(p, nl, nh);
    const double total = static_cast<double>(nl + nh);
    CHECK(std::abs(w.low * nl + w.high * nh - total) <= 4 * std::numeric_limits<double>::epsilon() * total);
  }
  CHECK_THROWS_AS(glam::fidelity_weights(0.0, 10, 10), glam::ConfigError);
  CHECK_THROWS_AS(glam::fidelity_weights(1.0, 10, 10), glam::ConfigError);
}

TEST_CASE("multi-fidelity log-likelihood structure") {
  MfCase c = synthetic_case(60, 120, 21);
  const auto w = glam::fidelity_weights(0.5, 120, 60);
  const glam::GlamModel lf_model = c.s.make_model(c.theta).lf_model();
  glam::GlamStructure single{c.s.input, c.s.lf_sets};
  const Eigen::VectorXd c_only = c.theta.head(static_cast<Eigen::Index>(c.s.lf_parameter_count()));

  // Direct transcription with d = 0: both sums use the LF model.
  const double direct = w.low * glam::single_loglik(c_only, c.lf, single) + w.high * glam::single_loglik(c_only, c.hf, single);
  const double mf = glam::mf_loglik(c.theta, c.hf, c.lf, c.s, 0.5);
  if (std::isfinite(direct)) CHECK(mf == doctest::Approx(direct).epsilon(1e-12));
  else CHECK(mf == -kInf);

  // Duplicated dataset, p = 0.5: twice the single-fidelity value.
  Dataset same = c.lf;
  same.fidelity = glam::Fidelity::High;
  const double dup = glam::mf_loglik(c.theta, same, c.lf, c.s, 0.5);
  CHECK(dup == doctest::Approx(2 * glam::single_loglik(c_only, c.lf, single)).epsilon(1e-12));

  // Nonzero discrepancy: HF rows are scored by the fused model.
  Eigen::VectorXd theta = c.theta;
  theta[static_cast<Eigen::Index>(c.s.lf_parameter_count())] = 0.3;
  const glam::MfGlamModel fused = c.s.make_model(theta);
  double hf_sum = 0.0, lf_sum = 0.0;
  for (Eigen::Index r = 0; r < c.hf.X.rows(); ++r) {
    const std::vector<double> x{c.hf.X(r, 0), c.hf.X(r, 1), c.hf.X(r, 2), c.hf.X(r, 3)};
    hf_sum += glam::log_pdf(c.hf.y[r], glam::eval_lambda(fused, x));
  }
  for (Eigen::Index r = 0; r < c.lf.X.rows(); ++r) {
    const std::vector<double> x{c.lf.X(r, 0), c.lf.X(r, 1), c.lf.X(r, 2), c.lf.X(r, 3)};
    lf_sum += glam::log_pdf(c.lf.y[r], glam::eval_lambda(lf_model, x));
  }
  const double expected = w.low * lf_sum + w.high * hf_sum;
  const double got = glam::mf_loglik(theta, c.hf, c.lf, c.s, 0.5);
  if (std::isfinite(expected)) CHECK(got == doctest::Approx(expected).epsilon(1e-10));
  else CHECK(got == -kInf);
}

TEST_CASE("finite-difference gradient") {
  auto sq = [](const Eigen::VectorXd& t) { return t.squaredNorm(); };
  Eigen::VectorXd t(2);
  t << 1, -2;
  auto g = glam::fd_gradient(sq, t);
  CHECK(std::abs(g.gradient[0] - 2) < 1e-6);
  CHECK(std::abs(g.gradient[1] + 4) < 1e-6);
  CHECK_FALSE(g.infeasible);
  g = glam::fd_gradient([](const Eigen::VectorXd&) { return 3.0; }, t);
  CHECK(g.gradient.norm() == 0.0);

  // Feasible only for t0 <= 0: one-sided at the boundary, infeasible beyond.
  auto wall = [](const Eigen::VectorXd& v) { return v[0] <= 0 ? -v[0] * v[0] + v[1] : -kInf; };
  Eigen::VectorXd at(2);
  at << 0, 1;
  g = glam::fd_gradient(wall, at);
  CHECK_FALSE(g.infeasible);
  CHECK(std::abs(g.gradient[0]) < 1e-5);
  CHECK(std::abs(g.gradient[1] - 1) < 1e-6);
  at << 1, 1;
  CHECK(glam::fd_gradient(wall, at).infeasible);
}

TEST_CASE("analytic and finite-difference gradients agree") {
  MfCase c = synthetic_case(80, 160, 31);
  // HF rows from the LF simulator keep (c_LF, 0) and its neighbourhood feasible.
  c.hf.y = glam::simulate_design(glam::synthetic_lf, c.hf.X, 33);
  const auto obj = glam::make_mf_objective(c.hf, c.lf, c.s, 0.5);
  glam::Rng rng(32);
  int checked = 0;
  for (int trial = 0; trial < 200 && checked < 10; ++trial) {
    Eigen::VectorXd t = c.theta;
    for (Eigen::Index k = 0; k < t.size(); ++k) t[k] += 0.02 * rng.uniform(-1, 1);
    if (!std::isfinite(obj.value(t))) continue;
    ++checked;
    Eigen::VectorXd g;
    obj.value_and_gradient(t, g);
    const auto f = [&](const Eigen::VectorXd& v) { return obj.value(v); };
    const auto fd6 = glam::fd_gradient(f, t, 1e-6);
    const auto fd8 = glam::fd_gradient(f, t, 1e-8);
    CHECK((fd6.gradient - fd8.gradient).norm() < 1e-3 * fd6.gradient.norm());
    CHECK((g - fd6.gradient).norm() < 1e-5 * g.norm());
  }
  CHECK(checked == 10);
}

TEST_CASE("maximize a quadratic bowl") {
  Eigen::VectorXd target(3);
  target << 1.5, -0.25, 3;
  glam::Objective bowl = [&](const Eigen::VectorXd& t, Eigen::VectorXd* g) {
    if (g) *g = -2 * (t - target);
    return -(t - target).squaredNorm();
  };
  auto r = glam::maximize(bowl, Eigen::VectorXd::Zero(3));
  CHECK(r.stage == glam::OptimStage::TrustRegion);
  CHECK(r.converged);
  CHECK((r.theta - target).norm() < 1e-5);
  r = glam::maximize(bowl, target);
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
}

TEST_CASE("maximize rejects an infeasible start") {
  glam::Objective f = [](const Eigen::VectorXd&, Eigen::VectorXd*) { return -kInf; };
  CHECK_THROWS_AS(glam::maximize(f, Eigen::VectorXd::Zero(2)), glam::FitError);
}

TEST_CASE("constant GLaM maximum likelihood") {
  const GldParams truth{2, 1.2, 0.38, 0.4};
  const Dataset d = gld_data(truth, 100000, 77);
  const auto obj = glam::make_single_objective(d, constant_structure());
  Eigen::VectorXd start(4);
  start << d.y.mean(), std::log(1.0 / std::sqrt((d.y.array() - d.y.mean()).square().mean())) - std::log(2.0), 0.13,
      0.13;
  REQUIRE(std::isfinite(obj.value(start)));
  const auto r = glam::maximize(wrap(obj), start);
  CHECK(r.loglik >= obj.value(start));
  CHECK(r.loglik == obj.value(r.theta));
  CHECK(std::abs(r.theta[0] - truth.lambda1) < 0.05);
  CHECK(std::abs(std::exp(r.theta[1]) / truth.lambda2 - 1) < 0.1);
  CHECK(std::abs(r.theta[2] - truth.lambda3) < 0.1);
  CHECK(std::abs(r.theta[3] - truth.lambda4) < 0.1);
}
