#include "glam/fit_mf.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "glam/error.hpp"
#include "glam/parallel.hpp"
#include "glam/rng.hpp"

namespace glam {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Candidate {
  int degree1;
  double q1;
  int degree2;
  double q2;
};

struct Outcome {
  Eigen::VectorXd theta;
  double loglik = -kInf;
  bool feasible = false;
  OptimStage stage = OptimStage::TrustRegion;
  bool converged = false;
};

Outcome fit_candidate(const Dataset& hf, const Dataset& lf, const MfStructure& s,
                      const GlamStructure& lf_structure, const GlamModel& lf_model,
                      const MfFitConfig& config, const OptimConfig& optim) {
  const LikelihoodObjective obj = make_mf_objective(hf, lf, s, config.p);
  const auto lf_n = static_cast<Eigen::Index>(s.lf_parameter_count());
  const auto d1_n = static_cast<Eigen::Index>(s.discrepancy_sets[0].size());
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.parameter_count()));
  theta.head(lf_n) = lf_structure.coefficients_of(lf_model);
  const Eigen::Index d2_constant = lf_n + d1_n;

  Outcome out;
  auto attempt = [&](const Eigen::VectorXd& start) {
    const OptimReport rep = maximize_with_widening(obj, start, d2_constant, config.max_widenings, optim);
    out.theta = rep.theta;
    out.loglik = rep.loglik;
    out.feasible = std::isfinite(rep.loglik);
    out.stage = rep.stage;
    out.converged = rep.converged;
  };
  try {
    attempt(theta);
    return out;
  } catch (const FitError&) {
  }
  // Shift the HF location by a least-squares lambda1 discrepancy, then widen
  // again.
  const Eigen::MatrixXd xi = s.input.to_standard(hf.X);
  const auto fam = s.input.families();
  const Eigen::MatrixXd xi_lf = project_columns(xi, s.lf_columns);
  const auto fam_lf = s.input.subset(s.lf_columns).families();
  const Eigen::VectorXd lf_loc = basis_matrix(xi_lf, s.lf_sets[0].indices, fam_lf) *
                                 theta.segment(0, static_cast<Eigen::Index>(s.lf_sets[0].size()));
  const Eigen::MatrixXd b1 = basis_matrix(xi, s.discrepancy_sets[0].indices, fam);
  theta.segment(lf_n, d1_n) = b1.colPivHouseholderQr().solve(hf.y - lf_loc);
  try {
    attempt(theta);
  } catch (const FitError&) {
    out = Outcome{};
  }
  return out;
}

}  // namespace

void MfFitConfig::validate() const {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("fidelity weight p must lie in (0, 1)");
  if (discrepancy_grid) {
    (*discrepancy_grid)[0].validate("delta1");
    (*discrepancy_grid)[1].validate("delta2");
  }
  if (max_widenings < 0) throw ConfigError("max_widenings must be nonnegative");
}

std::array<ParamGrid, 2> default_discrepancy_grid(std::size_t n_high, std::size_t small_n_threshold) {
  if (n_high < small_n_threshold) return {ParamGrid{{0, 1}, {1.0}}, ParamGrid{{0, 1}, {1.0}}};
  return {ParamGrid{{0, 1, 2}, {0.6, 1.0}}, ParamGrid{{0, 1}, {1.0}}};
}

double mf_bic(double loglik, std::size_t n_theta, std::size_t n_high, std::size_t n_low) {
  if (n_high < 1 || n_low < 1) throw ConfigError("MF-BIC needs nonempty datasets");
  return -2.0 * loglik +
         static_cast<double>(n_theta) * std::log(static_cast<double>(n_low + n_high) / 2.0);
}

std::vector<int> input_subset_map(std::span<const int> lf_columns, std::size_t hf_dim) {
  std::vector<int> map(lf_columns.begin(), lf_columns.end());
  if (map.empty()) {
    map.resize(hf_dim);
    for (std::size_t j = 0; j < hf_dim; ++j) map[j] = static_cast<int>(j);
    return map;
  }
  std::vector<bool> seen(hf_dim, false);
  for (int c : map) {
    if (c < 0 || static_cast<std::size_t>(c) >= hf_dim)
      throw ConfigError("LF column " + std::to_string(c) + " outside the " + std::to_string(hf_dim) +
                        " HF inputs");
    if (seen[static_cast<std::size_t>(c)]) throw ConfigError("LF column " + std::to_string(c) + " listed twice");
    seen[static_cast<std::size_t>(c)] = true;
  }
  return map;
}

Eigen::MatrixXd project_columns(const Eigen::MatrixXd& X, std::span<const int> map) {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(map.size()));
  for (std::size_t k = 0; k < map.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = X.col(map[k]);
  return out;
}

namespace {

MfGlamFit fit_mfglam_impl(const Dataset& hf, const Dataset& lf_in, const InputModel& hf_input,
                          const MfFitConfig& config, const GlamFit* given_lf) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  hf.validate();
  lf_in.validate();
  hf_input.validate();
  if (static_cast<std::size_t>(hf.X.cols()) != hf_input.dim())
    throw ConfigError("HF dataset width does not match the input model");
  const std::vector<int> map = input_subset_map(config.lf_columns, hf_input.dim());
  const InputModel lf_input = hf_input.subset(map);

  Dataset lf = lf_in;
  lf.fidelity = Fidelity::Low;
  if (static_cast<std::size_t>(lf.X.cols()) != map.size()) {
    if (static_cast<std::size_t>(lf.X.cols()) != hf_input.dim())
      throw ConfigError("LF dataset has " + std::to_string(lf.X.cols()) + " input columns, expected " +
                        std::to_string(map.size()));
    lf.X = project_columns(lf.X, map);
  }

  const std::array<ParamGrid, 2> dgrid =
      config.discrepancy_grid ? *config.discrepancy_grid : default_discrepancy_grid(hf.size(), config.small_n_threshold);
  dgrid[0].validate("delta1");
  dgrid[1].validate("delta2");

  FitConfig lf_cfg = config.lf;
  lf_cfg.seed = derive_seed(config.seed, "lf");
  lf_cfg.workers = config.workers;
  std::optional<GlamFit> own_lf;
  if (!given_lf) own_lf = fit_glam(lf, lf_input, lf_cfg);
  const GlamFit& lf_fit = given_lf ? *given_lf : *own_lf;
  if (lf_fit.model.input != lf_input) throw ConfigError("LF GLaM inputs do not match the LF column map");

  GlamStructure lf_structure;
  lf_structure.input = lf_input;
  for (std::size_t i = 0; i < 4; ++i) lf_structure.sets[i] = lf_fit.model.expansions[i].truncation;

  const int dim = static_cast<int>(hf_input.dim());
  std::vector<Candidate> rows;
  for (int d1 : dgrid[0].degrees)
    for (double q1 : dgrid[0].qnorms)
      for (int d2 : dgrid[1].degrees)
        for (double q2 : dgrid[1].qnorms) rows.push_back({d1, q1, d2, q2});

  // Distinct (delta1 set, delta2 set) pairs are fitted once.
  std::vector<std::array<TruncationSet, 2>> unique;
  std::vector<std::size_t> row_to_unique(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::array<TruncationSet, 2> sets{generate_truncation(dim, rows[r].degree1, rows[r].q1),
                                      generate_truncation(dim, rows[r].degree2, rows[r].q2)};
    const auto it = std::find_if(unique.begin(), unique.end(), [&](const auto& u) {
      return u[0].indices == sets[0].indices && u[1].indices == sets[1].indices;
    });
    row_to_unique[r] = static_cast<std::size_t>(it - unique.begin());
    if (it == unique.end()) unique.push_back(std::move(sets));
  }

  auto structure = [&](std::size_t u) {
    MfStructure s;
    s.input = hf_input;
    s.lf_columns = map;
    s.lf_sets = lf_structure.sets;
    s.discrepancy_sets[0] = unique[u][0];
    s.discrepancy_sets[1] = unique[u][1];
    if (config.shape_discrepancy) {
      s.discrepancy_sets[2] = constant_truncation(dim);
      s.discrepancy_sets[3] = constant_truncation(dim);
    }
    return s;
  };

  std::vector<Outcome> outcomes(unique.size());
  parallel_for(unique.size(), config.workers, [&](std::size_t u) {
    OptimConfig o = config.optim;
    o.seed = derive_seed(config.seed, "discrepancy", u);
    outcomes[u] = fit_candidate(hf, lf, structure(u), lf_structure, lf_fit.model, config, o);
  });

  MfFitReport report;
  report.lf = lf_fit.report;
  report.n_high = hf.size();
  report.n_low = lf.size();
  report.seed = config.seed;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Outcome& o = outcomes[row_to_unique[r]];
    MfCandidateRecord rec;
    rec.degree1 = rows[r].degree1;
    rec.q1 = rows[r].q1;
    rec.degree2 = rows[r].degree2;
    rec.q2 = rows[r].q2;
    rec.n_params = structure(row_to_unique[r]).parameter_count();
    rec.feasible = o.feasible;
    rec.loglik = o.loglik;
    rec.mf_bic = o.feasible ? mf_bic(o.loglik, rec.n_params, hf.size(), lf.size()) : kInf;
    rec.stage = o.stage;
    rec.converged = o.converged;
    report.candidates.push_back(rec);
  }

  auto key = [&](const MfCandidateRecord& c) {
    return std::make_tuple(c.mf_bic, c.n_params, c.degree1, c.q1, c.degree2, c.q2);
  };
  std::size_t sel = 0;
  for (std::size_t r = 1; r < report.candidates.size(); ++r)
    if (key(report.candidates[r]) < key(report.candidates[sel])) sel = r;
  if (!report.candidates[sel].feasible)
    throw FitError("no discrepancy candidate admits a feasible start (" + std::to_string(unique.size()) +
                   " tried)");

  const Outcome& best = outcomes[row_to_unique[sel]];
  MfGlamFit out;
  out.model = structure(row_to_unique[sel]).make_model(best.theta);
  out.lf_only = lf_fit.model;
  report.selected_index = sel;
  report.theta = best.theta;
  report.loglik = best.loglik;
  report.mf_bic = report.candidates[sel].mf_bic;
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.report = std::move(report);
  return out;
}

}  // namespace

MfGlamFit fit_mfglam(const Dataset& hf, const Dataset& lf, const InputModel& hf_input,
                     const MfFitConfig& config) {
  return fit_mfglam_impl(hf, lf, hf_input, config, nullptr);
}

MfGlamFit fit_mfglam(const Dataset& hf, const Dataset& lf, const InputModel& hf_input,
                     const MfFitConfig& config, const GlamFit& lf_fit) {
  return fit_mfglam_impl(hf, lf, hf_input, config, &lf_fit);
}

}  // namespace glam
