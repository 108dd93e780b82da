// Acceptance checks: one PASS/FAIL line per criterion. With no arguments all
// criteria run; otherwise only the listed numbers. Exit status is nonzero
// when any selected criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "glam/fit_mf.hpp"
#include "glam/io.hpp"
#include "glam/serialize.hpp"
#include "glam/simulators.hpp"

using namespace glam;

namespace {

// Pinned tolerances.
constexpr double kExactRel = 1e-12;        // 1
constexpr double kMassTol = 1e-6;          // 2
constexpr double kInversionTol = 1e-10;    // 2
constexpr double kStdErrors = 3.0;         // 3
constexpr double kFdRel = 1e-3;            // 4
constexpr double kLambda1Tol = 0.05;       // 5
constexpr double kLambda2Rel = 0.10;       // 5
constexpr double kShapeTol = 0.10;         // 5
constexpr int kSeedsRequired = 8;          // 5, 8 (out of 10)
constexpr double kMfBic = 1063.97;         // 7
constexpr double kMfBicTol = 0.01;         // 7
constexpr double kMedianRel = 0.02;        // 8
constexpr double kSynMfLo = 0.2e-2, kSynMfHi = 1.0e-2;     // 9
constexpr double kSynLfLo = 5.0e-2, kSynLfHi = 6.6e-2;     // 9
constexpr double kBoreBaseline = 2.9e-2;                   // 10
constexpr double kBoreLo = 0.8e-2, kBoreHi = 3.2e-2;       // 10

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

GldParams random_gld(Rng& rng, double shape_lo, double shape_hi) {
  return {rng.uniform(-5, 5), std::exp(rng.uniform(std::log(0.1), std::log(10.0))), rng.uniform(shape_lo, shape_hi),
          rng.uniform(shape_lo, shape_hi)};
}

Outcome uniform_exactness() {
  double q_err = 0, f_err = 0, v_err = 0;
  for (double l1 : {-3.0, 0.0, 2.5})
    for (double l2 : {0.5, 2.0, 7.0}) {
      const GldParams p{l1, l2, 1, 1};
      for (int k = 0; k <= 1000; ++k) {
        const double u = k / 1000.0;
        const double exact = l1 + (2 * u - 1) / l2;
        q_err = std::max(q_err, std::abs(quantile(u, p) - exact) / std::max(1.0, std::abs(exact)));
        const double y = l1 + (2 * (k + 0.5) / 1001.0 - 1) / l2;
        f_err = std::max(f_err, std::abs(pdf(y, p) - l2 / 2) / (l2 / 2));
      }
      const double width = 2 / l2;
      v_err = std::max(v_err, std::abs(variance(p).value() - width * width / 12) / (width * width / 12));
    }
  return {q_err <= kExactRel && f_err <= kExactRel && v_err <= kExactRel,
          fmt("max rel error quantile %.1e, pdf %.1e, variance %.1e (tol %.0e)", q_err, f_err, v_err, kExactRel)};
}

double pdf_mass(const GldParams& p) {
  // [Q(a), Q(b)] split at quantiles equally spaced in logit(u); the two
  // tails beyond hold exactly 2e-9 and are counted as error.
  const double a = 1e-9, b = 1 - 1e-9, ta = std::log(a / (1 - a)), tb = std::log(b / (1 - b));
  double total = 0, lo = quantile(a, p);
  for (int k = 1; k <= 64; ++k) {
    const double t = ta + (tb - ta) * k / 64;
    const double hi = quantile(1 / (1 + std::exp(-t)), p);
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate([&](double y) { return pdf(y, p); }, lo, hi,
                                                                            8, 1e-10);
    lo = hi;
  }
  return total;
}

Outcome normalization_inversion() {
  Rng rng(derive_seed(2024, "criterion-2"));
  double worst_mass = 0, worst_inv = 0;
  for (int k = 0; k < 500; ++k) {
    const GldParams p = random_gld(rng, -0.4, 2.0);
    worst_mass = std::max(worst_mass, std::abs(pdf_mass(p) - 1));
    for (int j = 0; j <= 200; ++j) {
      const double t = std::log(1e-6 / (1 - 1e-6)) * (1 - 2 * j / 200.0);
      const double u = 1 / (1 + std::exp(-t));
      const auto back = inverse_quantile(quantile(u, p), p);
      worst_inv = std::max(worst_inv, back ? std::abs(*back - u) : 1.0);
    }
  }
  return {worst_mass <= kMassTol && worst_inv <= kInversionTol,
          fmt("500 sets: max |mass - 1| %.2e (tol %.0e), max |Qinv(Q(u)) - u| %.2e (tol %.0e)", worst_mass, kMassTol,
              worst_inv, kInversionTol)};
}

Outcome moment_consistency() {
  // Shapes above -0.25 keep the fourth moment, and so the standard error of
  // the sample variance, finite.
  Rng rng(derive_seed(2024, "criterion-3"));
  boost::math::quadrature::tanh_sinh<double> ts;
  double worst_mean = 0, worst_var = 0;
  for (int k = 0; k < 20; ++k) {
    const GldParams p = random_gld(rng, -0.2, 2.0);
    const Moments m = moments(p).value();
    const double mu4 = ts.integrate([&](double u) { return std::pow(quantile(u, p) - m.mean, 4); }, 0.0, 1.0);
    const auto s = sample(p, 1000000, rng);
    const double n = static_cast<double>(s.size());
    double mean = 0;
    for (double v : s) mean += v;
    mean /= n;
    double ss = 0;
    for (double v : s) ss += (v - mean) * (v - mean);
    const double var = ss / (n - 1);
    worst_mean = std::max(worst_mean, std::abs(mean - m.mean) / std::sqrt(m.variance / n));
    worst_var = std::max(worst_var, std::abs(var - m.variance) / std::sqrt((mu4 - m.variance * m.variance) / n));
  }
  return {worst_mean <= kStdErrors && worst_var <= kStdErrors,
          fmt("20 sets, 1e6 samples: max deviation %.2f SE (mean), %.2f SE (variance), limit %.0f", worst_mean, worst_var,
              kStdErrors)};
}

Dataset simulate_dataset(const ExampleSetup& s, bool high, std::size_t n, std::uint64_t seed) {
  const InputModel in = high ? s.hf_input : s.hf_input.subset(s.lf_columns);
  Dataset d;
  d.X = lhs_sample(in, n, derive_seed(seed, "design"));
  d.y = simulate_design(high ? s.hf : s.lf, d.X, derive_seed(seed, "response"));
  d.fidelity = high ? Fidelity::High : Fidelity::Low;
  return d;
}

double fd_disagreement(const LikelihoodObjective& obj, const Eigen::VectorXd& theta) {
  const auto f = [&](const Eigen::VectorXd& t) { return obj.value(t); };
  const Eigen::VectorXd g6 = fd_gradient(f, theta, 1e-6).gradient;
  const Eigen::VectorXd g8 = fd_gradient(f, theta, 1e-8).gradient;
  return (g6 - g8).norm() / g6.norm();
}

Outcome gradient_consistency() {
  // Random vectors around fitted maximizers with lambda2 lowered by 0.3 (26% wider) so
  // that no response sits on a support edge; perturbations leaving the
  // support are redrawn.
  const auto setup = example_setup(Example::Synthetic);
  const Dataset hf = simulate_dataset(setup, true, 200, 41);
  const Dataset lf = simulate_dataset(setup, false, 400, 42);

  const auto single_fit = fit_glam(hf, setup.hf_input, FitConfig{});
  GlamStructure single{setup.hf_input, {}};
  for (std::size_t i = 0; i < 4; ++i) single.sets[i] = single_fit.model.expansions[i].truncation;
  const auto single_obj = make_single_objective(hf, single);
  Eigen::VectorXd single_centre = single.coefficients_of(single_fit.model);
  single_centre[static_cast<Eigen::Index>(single.sets[0].size())] -= 0.3;

  MfFitConfig mf_cfg;
  mf_cfg.lf_columns = setup.lf_columns;
  const auto mf_fit = fit_mfglam(hf, lf, setup.hf_input, mf_cfg);
  MfStructure mf{setup.hf_input, setup.lf_columns, {}, {}};
  for (std::size_t i = 0; i < 4; ++i) {
    mf.lf_sets[i] = mf_fit.model.lf_expansions[i].truncation;
    mf.discrepancy_sets[i] = mf_fit.model.discrepancy_expansions[i].truncation;
  }
  const auto mf_obj = make_mf_objective(hf, lf, mf, mf_cfg.p);
  Eigen::VectorXd mf_centre = mf_fit.report.theta;
  mf_centre[static_cast<Eigen::Index>(mf.lf_sets[0].size())] -= 0.3;

  Rng rng(derive_seed(2024, "criterion-4"));
  auto random_feasible = [&](const LikelihoodObjective& obj, const Eigen::VectorXd& centre) -> std::optional<Eigen::VectorXd> {
    for (int trial = 0; trial < 1000; ++trial) {
      Eigen::VectorXd t = centre;
      for (Eigen::Index k = 0; k < t.size(); ++k) t[k] += 0.005 * rng.normal();
      if (std::isfinite(obj.value(t))) return t;
    }
    return std::nullopt;
  };

  double worst_single = 0, worst_mf = 0;
  int drawn = 0, over_single = 0, over_mf = 0;
  for (int k = 0; k < 20; ++k) {
    const auto a = random_feasible(single_obj, single_centre);
    const auto b = random_feasible(mf_obj, mf_centre);
    if (a) {
      const double d = fd_disagreement(single_obj, *a);
      worst_single = std::max(worst_single, d);
      over_single += d > kFdRel;
    }
    if (b) {
      const double d = fd_disagreement(mf_obj, *b);
      worst_mf = std::max(worst_mf, d);
      over_mf += d > kFdRel;
    }
    drawn += (a ? 1 : 0) + (b ? 1 : 0);
  }
  return {drawn == 40 && over_single == 0 && over_mf == 0,
          fmt("%d/40 feasible vectors; max ||g(1e-6) - g(1e-8)|| / ||g(1e-6)|| single %.2e (%d/20 over), "
              "multi-fidelity %.2e (%d/20 over), tol %.0e",
              drawn, worst_single, over_single, worst_mf, over_mf, kFdRel)};
}

Outcome mle_consistency() {
  const GldParams truth{2, 1.2, 0.38, 0.4};
  const InputModel in{{Marginal::uniform(0, 1)}, {"x"}};
  CandidateGrid constant;
  for (auto& g : constant.params) g = {{0}, {1.0}};
  int ok = 0;
  std::string worst;
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(derive_seed(2024, "criterion-5", static_cast<std::uint64_t>(seed)));
    Dataset d;
    d.X = lhs_sample(in, 100000, derive_seed(2024, "criterion-5-design", static_cast<std::uint64_t>(seed)));
    const auto y = sample(truth, 100000, rng);
    d.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    FitConfig cfg;
    cfg.grid = constant;
    cfg.seed = static_cast<std::uint64_t>(seed);
    const auto fit = fit_glam(d, in, cfg);
    const std::vector<double> x{0.5};
    const GldParams p = eval_lambda(fit.model, x);
    const bool pass = std::abs(p.lambda1 - truth.lambda1) <= kLambda1Tol &&
                      std::abs(p.lambda2 / truth.lambda2 - 1) <= kLambda2Rel &&
                      std::abs(p.lambda3 - truth.lambda3) <= kShapeTol && std::abs(p.lambda4 - truth.lambda4) <= kShapeTol;
    ok += pass;
    if (!pass) worst = fmt("; seed %d gave (%.3f, %.3f, %.3f, %.3f)", seed, p.lambda1, p.lambda2, p.lambda3, p.lambda4);
  }
  return {ok >= kSeedsRequired, fmt("%d/10 seeds recover GLD(2, 1.2, 0.38, 0.4) within tolerance (need %d)%s", ok,
                                    kSeedsRequired, worst.c_str())};
}

Outcome weight_algebra() {
  Rng rng(derive_seed(2024, "criterion-6"));
  double worst_ulps = 0;
  for (int k = 0; k < 100; ++k) {
    const double p = rng.uniform();
    const std::size_t nl = 1 + rng.next_u64() % 100000, nh = 1 + rng.next_u64() % 100000;
    const auto w = fidelity_weights(p, nl, nh);
    const double total = static_cast<double>(nl + nh);
    const double ulp = std::nextafter(total, 2 * total) - total;
    worst_ulps = std::max(worst_ulps, std::abs(w.low * static_cast<double>(nl) + w.high * static_cast<double>(nh) - total) / ulp);
  }
  const auto w = fidelity_weights(0.5, 1000, 200);
  const bool pinned = w.low == 0.6 && w.high == 3.0;
  // Bit-exactness for arbitrary p is not representable in binary floating
  // point; the identity is required to hold to rounding (two ulps).
  return {pinned && worst_ulps <= 2,
          fmt("(p=0.5, N_L=1000, N_H=200) -> (%.17g, %.17g) %s; 100 random triples: max |w_L N_L + w_H N_H - N| = %.0f "
              "ulp",
              w.low, w.high, pinned ? "exact" : "NOT exact", worst_ulps)};
}

Outcome mf_bic_formula() {
  const double v = mf_bic(-500, 10, 200, 1000);
  bool same = true;
  for (std::size_t n : {10u, 200u, 5000u})
    for (std::size_t k : {1u, 7u, 30u}) same = same && mf_bic(-123.4, k, n, n) == bic(-123.4, k, n);
  return {std::abs(v - kMfBic) <= kMfBicTol && same,
          fmt("mf_bic(-500, 10, 200, 1000) = %.4f (target %.2f +- %.2f); equal-size penalty matches BIC: %s", v, kMfBic,
              kMfBicTol, same ? "yes" : "no")};
}

Outcome null_discrepancy(int workers) {
  // HF responses come from the LF borehole simulator (which ignores k_w), so
  // the true discrepancy is zero. Positive responses keep relative errors
  // meaningful; equal sample sizes put the estimation noise of the medians
  // below the tolerance.
  const auto setup = example_setup(Example::Borehole);
  const auto lf_sim = setup.lf;
  const auto cols = setup.lf_columns;
  ExampleSetup null = setup;
  null.hf = [&](std::span<const double> x, Rng& rng) {
    std::vector<double> xl;
    for (int c : cols) xl.push_back(x[static_cast<std::size_t>(c)]);
    return lf_sim(xl, rng);
  };
  const std::size_t n = 4000;
  int ok = 0;
  double worst = 0;
  for (int seed = 0; seed < 10; ++seed) {
    const auto s = derive_seed(2024, "criterion-8", static_cast<std::uint64_t>(seed));
    const Dataset hf = simulate_dataset(null, true, n, derive_seed(s, "hf"));
    const Dataset lf = simulate_dataset(null, false, n, derive_seed(s, "lf"));
    MfFitConfig cfg;
    cfg.lf_columns = cols;
    cfg.seed = cfg.lf.seed = s;
    cfg.workers = cfg.lf.workers = workers;
    const auto fit = fit_mfglam(hf, lf, setup.hf_input, cfg);
    const Eigen::MatrixXd T = lhs_sample(setup.hf_input, 20, derive_seed(s, "test"));
    double seed_worst = 0;
    for (Eigen::Index r = 0; r < T.rows(); ++r) {
      const std::vector<double> x{T(r, 0), T(r, 1), T(r, 2)};
      const std::vector<double> xl{T(r, cols[0]), T(r, cols[1])};
      const double a = quantile(0.5, eval_lambda(fit.model, x));
      const double b = quantile(0.5, eval_lambda(fit.lf_only, xl));
      seed_worst = std::max(seed_worst, std::abs(a - b) / std::abs(b));
    }
    ok += seed_worst <= kMedianRel;
    worst = std::max(worst, seed_worst);
  }
  return {ok >= kSeedsRequired,
          fmt("%d/10 seeds with all 20 MF medians within %.0f%% of LF-only (need %d); worst point %.2f%% "
              "(borehole LF simulator as HF, N_H = N_L = %zu)",
              ok, 100 * kMedianRel, kSeedsRequired, 100 * worst, n)};
}

const CellSummary* cell(const ExperimentReport& r, const char* model) {
  for (const auto& c : r.summary)
    if (c.model == model) return &c;
  return nullptr;
}

std::string cell_text(const CellSummary* c) {
  if (!c) return "missing";
  return fmt("%.3e (IQR %.1e, %zu ok, %zu failed)", c->median, c->iqr, c->successes, c->failures);
}

Outcome synthetic_experiment(int workers) {
  ExperimentPlan plan;
  plan.example = Example::Synthetic;
  plan.n_high = {200};
  plan.n_low = 1000;
  plan.repetitions = 10;
  plan.test_points = 1000;
  plan.seed = 2024;
  plan.workers = workers;
  const auto r = run_experiment(plan);
  const auto *lf = cell(r, "LF"), *hf = cell(r, "HF"), *mf = cell(r, "MF");
  const bool mf_ok = mf && mf->median >= kSynMfLo && mf->median <= kSynMfHi;
  const bool order_ok = mf && hf && mf->median < hf->median;
  const bool lf_ok = lf && lf->median >= kSynLfLo && lf->median <= kSynLfHi;
  return {mf_ok && order_ok && lf_ok,
          fmt("N_H=200: MF %s in [%.1e, %.1e]: %s; MF < HF %s: %s; LF-only %s in [%.1e, %.1e]: %s", cell_text(mf).c_str(),
              kSynMfLo, kSynMfHi, mf_ok ? "yes" : "no", cell_text(hf).c_str(), order_ok ? "yes" : "no",
              cell_text(lf).c_str(), kSynLfLo, kSynLfHi, lf_ok ? "yes" : "no")};
}

Outcome borehole_experiment(int workers) {
  ExperimentPlan plan;
  plan.example = Example::Borehole;
  plan.n_high = {100};
  plan.n_low = 1000;
  plan.repetitions = 10;
  plan.test_points = 200;
  plan.replications = 250;
  plan.seed = 2024;
  plan.workers = workers;
  const auto r = run_experiment(plan);
  const auto *lf = cell(r, "LF"), *hf = cell(r, "HF"), *mf = cell(r, "MF");
  const bool order_ok = mf && hf && mf->median < hf->median;
  const bool base_ok = mf && mf->median < kBoreBaseline;
  const bool bracket_ok = mf && mf->median >= kBoreLo && mf->median <= kBoreHi;
  return {order_ok && base_ok && bracket_ok,
          fmt("N_H=100: MF %s; MF < HF %s: %s; MF < %.1e: %s; MF in [%.1e, %.1e]: %s; LF-only %s", cell_text(mf).c_str(),
              cell_text(hf).c_str(), order_ok ? "yes" : "no", kBoreBaseline, base_ok ? "yes" : "no", kBoreLo, kBoreHi,
              bracket_ok ? "yes" : "no", cell_text(lf).c_str())};
}

nlohmann::json strip_wall_time(nlohmann::json j) {
  if (j.is_object()) {
    j.erase("wall_time");
    for (auto& [k, v] : j.items()) v = strip_wall_time(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_wall_time(v);
  }
  return j;
}

std::string rows_without_time(const ExperimentReport& r) {
  std::string out;
  for (const auto& row : r.rows)
    out += row.example + "," + std::to_string(row.n_high) + "," + std::to_string(row.repetition) + "," + row.model + "," +
           format_double(row.eps_w) + "," + format_double(row.nmse_mean) + "," + format_double(row.nmse_var) + "," +
           std::to_string(row.seed) + "\n";
  return out;
}

Outcome determinism(int workers) {
  const auto setup = example_setup(Example::Synthetic);
  const Dataset hf = simulate_dataset(setup, true, 200, 7);
  const Dataset lf = simulate_dataset(setup, false, 500, 8);
  auto single = [&] {
    FitConfig c;
    c.seed = 7;
    c.workers = workers;
    const auto f = fit_glam(hf, setup.hf_input, c);
    return serialize(f.model) + strip_wall_time(to_json(f.report)).dump();
  };
  auto multi = [&] {
    MfFitConfig c;
    c.seed = c.lf.seed = 7;
    c.workers = c.lf.workers = workers;
    const auto f = fit_mfglam(hf, lf, setup.hf_input, c);
    return serialize(f.model) + strip_wall_time(to_json(f.report)).dump();
  };
  auto experiment = [&] {
    ExperimentPlan p;
    p.n_high = {100};
    p.n_low = 300;
    p.repetitions = 2;
    p.test_points = 100;
    p.seed = 7;
    p.workers = workers;
    const auto r = run_experiment(p);
    return rows_without_time(r) + strip_wall_time(summary_json(r)).dump();
  };
  const bool s = single() == single(), m = multi() == multi(), e = experiment() == experiment();
  return {s && m && e, fmt("reruns byte-identical (wall time excluded): GLaM fit %s, MF-GLaM fit %s, experiment %s",
                           s ? "yes" : "no", m ? "yes" : "no", e ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  int workers = 1;
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--workers" && i + 1 < argc)
      workers = std::max(1, std::atoi(argv[++i]));
    else
      selected.push_back(std::atoi(a.c_str()));
  }
  if (selected.empty())
    for (int k = 1; k <= 12; ++k) selected.push_back(k);

  const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria{
      {1, {"GLD exactness", uniform_exactness}},
      {2, {"normalization and inversion", normalization_inversion}},
      {3, {"moment consistency", moment_consistency}},
      {4, {"gradient self-consistency", gradient_consistency}},
      {5, {"MLE consistency", mle_consistency}},
      {6, {"weight algebra", weight_algebra}},
      {7, {"MF-BIC formula", mf_bic_formula}},
      {8, {"null-discrepancy oracle", [&] { return null_discrepancy(workers); }}},
      {9, {"synthetic experiment", [&] { return synthetic_experiment(workers); }}},
      {10, {"borehole experiment", [&] { return borehole_experiment(workers); }}},
      {12, {"determinism", [&] { return determinism(workers); }}},
  };

  bool all = true;
  for (int k : selected) {
    if (k == 11) {
      std::printf("criterion 11: not targeted (earthquake application requires an external structural simulator)\n");
      continue;
    }
    const auto it = criteria.find(k);
    if (it == criteria.end()) {
      std::fprintf(stderr, "unknown criterion %d\n", k);
      return 2;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = it->second.second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s  %s: %s [%.1f s]\n", k, o.pass ? "PASS" : "FAIL", it->second.first, o.detail.c_str(),
                dt);
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
