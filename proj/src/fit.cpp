#include "glam/fit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "glam/error.hpp"
#include "glam/lar.hpp"
#include "glam/parallel.hpp"
#include "glam/rng.hpp"

namespace glam {
namespace {

// E[ln chi2_1] = -(gamma + ln 2); added to ln r^2 to target ln sigma^2.
constexpr double kLogChi2Offset = 1.2703628454614782;

double population_variance(const Eigen::VectorXd& v) {
  return (v.array() - v.mean()).square().mean();
}

}  // namespace

void ParamGrid::validate(const char* what) const {
  if (degrees.empty() || qnorms.empty())
    throw ConfigError(std::string("candidate grid for ") + what + " is empty");
  for (int d : degrees)
    if (d < 0) throw ConfigError(std::string("negative degree in grid for ") + what);
  for (double q : qnorms)
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError(std::string("q-norm outside (0, 1] for ") + what);
}

std::vector<TruncationSet> ParamGrid::unique_sets(int dim) const {
  std::vector<TruncationSet> out;
  for (int d : degrees)
    for (double q : qnorms) {
      TruncationSet s = generate_truncation(dim, d, q);
      const bool seen = std::any_of(out.begin(), out.end(),
                                    [&](const TruncationSet& o) { return o.indices == s.indices; });
      if (!seen) out.push_back(std::move(s));
    }
  std::stable_sort(out.begin(), out.end(), [](const TruncationSet& a, const TruncationSet& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a.degree < b.degree;
  });
  return out;
}

CandidateGrid CandidateGrid::standard() {
  const std::vector<double> q5{0.2, 0.4, 0.6, 0.8, 1.0};
  CandidateGrid g;
  g.params[0] = {{1, 2, 3, 4, 5, 6}, q5};
  g.params[1] = {{1, 2, 3, 4}, q5};
  g.params[2] = {{0, 1, 2}, {0.6, 1.0}};
  g.params[3] = {{0, 1, 2}, {0.6, 1.0}};
  return g;
}

CandidateGrid CandidateGrid::small_sample() {
  CandidateGrid g;
  g.params[0] = {{1, 2}, {0.6, 1.0}};
  g.params[1] = {{1}, {1.0}};
  g.params[2] = {{0, 1}, {1.0}};
  g.params[3] = {{0, 1}, {1.0}};
  return g;
}

void CandidateGrid::validate() const {
  static constexpr const char* names[4] = {"lambda1", "lambda2", "lambda3", "lambda4"};
  for (std::size_t i = 0; i < 4; ++i) params[i].validate(names[i]);
}

CandidateGrid default_grid(std::size_t n, std::size_t small_n_threshold) {
  return n < small_n_threshold ? CandidateGrid::small_sample() : CandidateGrid::standard();
}

double bic(double loglik, std::size_t k, std::size_t n) {
  if (n < 1) throw ConfigError("BIC needs at least one sample");
  return -2.0 * loglik + static_cast<double>(k) * std::log(static_cast<double>(n));
}

std::size_t minimum_sample_size(const InputModel& input, const CandidateGrid& grid) {
  const int dim = static_cast<int>(input.dim());
  std::size_t smallest = std::numeric_limits<std::size_t>::max();
  for (int d : grid.params[0].degrees)
    for (double q : grid.params[0].qnorms)
      smallest = std::min(smallest, generate_truncation(dim, d, q).size());
  // One lambda2 constant and two shape constants on top of the mean basis.
  return smallest + 2 + 3;
}

FglsResult fgls_init(const Dataset& data, const InputModel& input, const CandidateGrid& grid,
                     const FitConfig& config) {
  data.validate();
  grid.validate();
  const Eigen::MatrixXd xi = input.to_standard(data.X);
  const auto fam = input.families();
  const Eigen::Index n = data.X.rows();
  const Eigen::VectorXd& y = data.y;

  const double vy = population_variance(y);
  const double floor = 1e-12 * (vy > 0.0 ? vy : 1.0);

  // The iterate with the best Gaussian log-likelihood proxy is returned;
  // alternating fits on noisy log residuals can oscillate.
  FglsResult out;
  double best = -std::numeric_limits<double>::infinity();
  bool floor_hit = false;
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  double previous = std::numeric_limits<double>::quiet_NaN();
  int it = 1;
  for (; it <= std::max(config.fgls_max_iterations, 1); ++it) {
    const SparsePce mean = fit_sparse_pce(xi, y, it == 1 ? Eigen::VectorXd() : w, fam,
                                          grid.params[0].degrees, grid.params[0].qnorms);
    const Eigen::VectorXd mu = basis_matrix(xi, mean.selected.indices, fam) * mean.coefficients;
    Eigen::VectorXd r2 = (y - mu).array().square();
    floor_hit = floor_hit || (r2.array() < floor).any();
    r2 = r2.cwiseMax(floor);
    const Eigen::VectorXd z = r2.array().log() + kLogChi2Offset;

    const SparsePce var = fit_sparse_pce(xi, z, Eigen::VectorXd(), fam, grid.params[1].degrees,
                                         grid.params[1].qnorms);
    const Eigen::VectorXd logv = basis_matrix(xi, var.selected.indices, fam) * var.coefficients;
    const Eigen::VectorXd v = logv.array().exp().cwiseMax(floor);

    const double proxy = -0.5 * (v.array().log() + r2.array() / v.array()).sum();
    if (proxy > best || it == 1) {
      best = proxy;
      out.mean_set = mean.selected;
      out.variance_set = var.selected;
      out.c1 = mean.coefficients;
      out.c2 = var.coefficients;
    }
    w = v.cwiseInverse();
    w /= w.mean();
    if (it > 1 && std::abs(proxy - previous) <= config.fgls_tolerance * std::abs(previous)) break;
    previous = proxy;
  }
  out.iterations = std::min(it, std::max(config.fgls_max_iterations, 1));
  out.variance_floor_hit = floor_hit;

  // ln lambda2 = 0.5 ln Var_unit(l3, l4) - 0.5 ln v(x). The mean needs no
  // shift because the initial shapes are equal.
  const GldParams unit{0.0, 1.0, config.initial_shape, config.initial_shape};
  const auto unit_var = variance(unit);
  if (!unit_var) throw ConfigError("initial shape must exceed -0.5");
  out.c2 *= -0.5;
  out.c2[0] += 0.5 * std::log(*unit_var);
  return out;
}

OptimReport maximize_with_widening(const LikelihoodObjective& objective, Eigen::VectorXd theta0,
                                   Eigen::Index lambda2_constant, int max_widenings,
                                   const OptimConfig& config) {
  const Objective f = [&objective](const Eigen::VectorXd& t, Eigen::VectorXd* g) {
    return g ? objective.value_and_gradient(t, *g) : objective.value(t);
  };
  for (int k = 0; k <= max_widenings; ++k) {
    if (std::isfinite(objective.value(theta0))) return maximize(f, theta0, config);
    theta0[lambda2_constant] -= std::log(2.0);
  }
  throw FitError("no feasible starting point after widening lambda2 " +
                 std::to_string(max_widenings) + " times (" +
                 std::to_string(objective.infeasible_count(theta0)) + " responses outside support)");
}

namespace {

struct ShapeFit {
  Eigen::VectorXd theta;
  CandidateRecord record;
};

ShapeFit fit_shape_candidate(const Dataset& data, const GlamStructure& s, Eigen::VectorXd theta0,
                             const OptimConfig& optim) {
  ShapeFit r;
  r.record.set3 = s.sets[2];
  r.record.set4 = s.sets[3];
  r.record.n_params = s.parameter_count();
  const LikelihoodObjective obj = make_single_objective(data, s);
  try {
    const OptimReport rep = maximize_with_widening(obj, std::move(theta0), s.offsets()[1], 20, optim);
    r.theta = rep.theta;
    r.record.loglik = rep.loglik;
    r.record.bic = bic(rep.loglik, r.record.n_params, data.size());
    r.record.feasible = std::isfinite(rep.loglik);
    r.record.stage = rep.stage;
    r.record.converged = rep.converged;
  } catch (const FitError&) {
    r.record.loglik = -std::numeric_limits<double>::infinity();
    r.record.bic = std::numeric_limits<double>::infinity();
  }
  return r;
}

// Embeds the coefficients of `from` into the (superset) structure `to`.
Eigen::VectorXd embed(const GlamStructure& from, const Eigen::VectorXd& theta, const GlamStructure& to) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(to.parameter_count()));
  const auto fo = from.offsets();
  const auto to_off = to.offsets();
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < from.sets[i].size(); ++k) {
      const auto& idx = from.sets[i].indices[k];
      const auto& dst = to.sets[i].indices;
      const auto pos = std::find(dst.begin(), dst.end(), idx);
      if (pos != dst.end())
        out[to_off[i] + (pos - dst.begin())] = theta[fo[i] + static_cast<Eigen::Index>(k)];
    }
  return out;
}

}  // namespace

GlamFit fit_glam(const Dataset& data, const InputModel& input, const FitConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  data.validate();
  input.validate();
  if (static_cast<std::size_t>(data.X.cols()) != input.dim())
    throw ConfigError("dataset has " + std::to_string(data.X.cols()) + " input columns, input model has " +
                      std::to_string(input.dim()));
  const CandidateGrid grid = config.grid ? *config.grid : default_grid(data.size(), config.small_n_threshold);
  grid.validate();
  const std::size_t n_min = minimum_sample_size(input, grid);
  if (data.size() < n_min)
    throw FitError("training set has " + std::to_string(data.size()) + " samples, at least " +
                   std::to_string(n_min) + " are required");

  const FglsResult init = fgls_init(data, input, grid, config);
  const int dim = static_cast<int>(input.dim());
  const std::array<std::vector<TruncationSet>, 2> shape_sets{grid.params[2].unique_sets(dim),
                                                             grid.params[3].unique_sets(dim)};

  auto structure = [&](std::size_t i3, std::size_t i4) {
    GlamStructure s;
    s.input = input;
    s.sets = {init.mean_set, init.variance_set, shape_sets[0][i3], shape_sets[1][i4]};
    return s;
  };

  FitReport report;
  report.n_samples = data.size();
  report.fgls_iterations = init.iterations;
  report.seed = config.seed;
  std::vector<ShapeFit> fits;
  std::vector<std::array<std::size_t, 2>> positions;

  auto optim_for = [&](std::size_t i3, std::size_t i4) {
    OptimConfig o = config.optim;
    o.seed = derive_seed(config.seed, "shape", i3 * 64 + i4);
    return o;
  };

  // Root candidate: FGLS lambda1/lambda2 and constant shapes.
  {
    const GlamStructure s = structure(0, 0);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.parameter_count()));
    const auto off = s.offsets();
    theta.segment(off[0], init.c1.size()) = init.c1;
    theta.segment(off[1], init.c2.size()) = init.c2;
    for (std::size_t i = 2; i < 4; ++i) {
      // Constant shape coefficient; the zero index has basis value 1.
      theta[off[i]] = config.initial_shape;
    }
    fits.push_back(fit_shape_candidate(data, s, theta, optim_for(0, 0)));
    positions.push_back({0, 0});
  }

  std::size_t current = 0;
  std::array<bool, 2> active{shape_sets[0].size() > 1, shape_sets[1].size() > 1};
  while (active[0] || active[1]) {
    const auto pos = positions[current];
    const GlamStructure parent = structure(pos[0], pos[1]);
    std::vector<std::size_t> which;
    for (std::size_t k = 0; k < 2; ++k)
      if (active[k] && pos[k] + 1 < shape_sets[k].size()) which.push_back(k);
      else active[k] = false;
    if (which.empty()) break;

    std::vector<ShapeFit> round(which.size());
    std::vector<std::array<std::size_t, 2>> round_pos(which.size());
    for (std::size_t j = 0; j < which.size(); ++j) {
      round_pos[j] = pos;
      ++round_pos[j][which[j]];
    }
    parallel_for(which.size(), config.workers, [&](std::size_t j) {
      const GlamStructure child = structure(round_pos[j][0], round_pos[j][1]);
      Eigen::VectorXd theta0 = fits[current].record.feasible
                                   ? embed(parent, fits[current].theta, child)
                                   : Eigen::VectorXd();
      if (theta0.size() == 0) {
        round[j].record.set3 = child.sets[2];
        round[j].record.set4 = child.sets[3];
        round[j].record.n_params = child.parameter_count();
        round[j].record.loglik = -std::numeric_limits<double>::infinity();
        round[j].record.bic = std::numeric_limits<double>::infinity();
        return;
      }
      round[j] = fit_shape_candidate(data, child, std::move(theta0), optim_for(round_pos[j][0], round_pos[j][1]));
    });

    std::size_t best = current;
    for (std::size_t j = 0; j < which.size(); ++j) {
      fits.push_back(std::move(round[j]));
      positions.push_back(round_pos[j]);
      const std::size_t idx = fits.size() - 1;
      if (fits[idx].record.bic < fits[current].record.bic) {
        if (fits[idx].record.bic < fits[best].record.bic) best = idx;
      } else {
        active[which[j]] = false;
      }
    }
    if (best == current) break;
    current = best;
  }

  std::size_t sel = 0;
  for (std::size_t k = 1; k < fits.size(); ++k)
    if (fits[k].record.bic < fits[sel].record.bic) sel = k;
  if (!fits[sel].record.feasible)
    throw FitError("every lambda3/lambda4 candidate was infeasible (" + std::to_string(fits.size()) +
                   " tried)");

  const GlamStructure s = structure(positions[sel][0], positions[sel][1]);
  GlamFit out;
  out.model = s.make_model(fits[sel].theta);
  for (auto& f : fits) report.candidates.push_back(f.record);
  report.selected_index = sel;
  report.loglik = fits[sel].record.loglik;
  report.bic = fits[sel].record.bic;
  const auto off = s.offsets();
  for (std::size_t i = 0; i < 4; ++i) {
    report.selected[i] = s.sets[i];
    report.coefficients[i] = fits[sel].theta.segment(off[i], static_cast<Eigen::Index>(s.sets[i].size()));
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.report = std::move(report);
  return out;
}

}  // namespace glam
