#include "glam/simulators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <optional>

#include "glam/error.hpp"
#include "glam/fit_mf.hpp"
#include "glam/parallel.hpp"

namespace glam {
namespace {

struct Term {
  const char* index;  // digit k is the degree of x_{k+1}
  double value;
};

LambdaExpansion expansion(std::initializer_list<Term> terms, Link link) {
  std::vector<std::pair<MultiIndex, double>> entries;
  for (const Term& t : terms) {
    MultiIndex a;
    for (const char* c = t.index; *c; ++c) a.push_back(*c - '0');
    entries.emplace_back(std::move(a), t.value);
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& x, const auto& y) { return graded_less(x.first, y.first); });
  LambdaExpansion e;
  e.link = link;
  e.truncation.dim = 4;
  e.truncation.qnorm = 1.0;
  e.coefficients.resize(static_cast<Eigen::Index>(entries.size()));
  for (std::size_t k = 0; k < entries.size(); ++k) {
    e.truncation.indices.push_back(entries[k].first);
    e.coefficients[static_cast<Eigen::Index>(k)] = entries[k].second;
  }
  e.truncation.degree = e.truncation.max_degree();
  return e;
}

SyntheticPair build_pair() {
  SyntheticPair s;
  s.hf.input = synthetic_input();
  s.hf.expansions = {
      expansion({{"0000", 2}, {"0001", 3.5}, {"0010", 2.45}, {"0100", -0.5}, {"1000", 0.2}, {"0020", 0.05},
                 {"0200", 2.3}, {"2000", 2.3}, {"0011", 0.12}, {"1100", 0.5}, {"2100", 0.04}, {"1110", 0.02}},
                Link::Identity),
      expansion({{"0000", 1.2}, {"0001", -1.1}, {"0100", 0.3}, {"1000", 0.8}}, Link::Exp),
      expansion({{"0000", 0.38}, {"0010", 0.2}}, Link::Identity),
      expansion({{"0000", 0.4}}, Link::Identity),
  };
  s.lf.input = synthetic_input();
  s.lf.expansions = {
      expansion({{"0000", 2.2}, {"0001", 2}, {"0010", 3}, {"0100", -0.3}, {"0200", 2}, {"2000", 2.5},
                 {"2100", 0.041}, {"1110", 0.022}},
                Link::Identity),
      expansion({{"0000", 0.5}, {"0001", -0.1}, {"0100", 1}}, Link::Exp),
      expansion({{"0000", 0.35}, {"0010", 0.2}}, Link::Identity),
      expansion({{"0000", 0.42}}, Link::Identity),
  };
  s.hf.validate();
  s.lf.validate();
  return s;
}

double sample_model(const GlamModel& m, std::span<const double> x, Rng& rng) {
  return quantile(rng.uniform(), eval_lambda(m, x));
}

double draw(const Marginal& m, Rng& rng) { return m.inverse_cdf(rng.uniform()); }

double borehole_formula(double numerator_constant, double denominator_constant, double r_w, double r,
                        double t_u, double h_u, double t_l, double h_l, double l, double k_w) {
  if (!(r_w > 0.0) || !(r > r_w)) throw DomainError("borehole: requires r > r_w > 0");
  if (!(t_u > 0.0 && t_l > 0.0 && l > 0.0 && k_w > 0.0))
    throw DomainError("borehole: transmissivities, length and conductivity must be positive");
  const double log_ratio = std::log(r / r_w);
  const double den = log_ratio * (denominator_constant + 2.0 * l * t_u / (log_ratio * r_w * r_w * k_w) + t_u / t_l);
  return numerator_constant * t_u * (h_u - h_l) / den;
}

// Type-7 quantile of an unsorted copy.
double sample_quantile(std::vector<double> v, double u) {
  std::sort(v.begin(), v.end());
  return empirical_quantile(v, u);
}

}  // namespace

InputModel synthetic_input() {
  InputModel in;
  for (int k = 1; k <= 4; ++k) {
    in.marginals.push_back(Marginal::uniform(0.0, 2.0));
    in.names.push_back("x" + std::to_string(k));
  }
  return in;
}

const SyntheticPair& synthetic_pair() {
  static const SyntheticPair pair = build_pair();
  return pair;
}

double synthetic_hf(std::span<const double> x, Rng& rng) { return sample_model(synthetic_pair().hf, x, rng); }
double synthetic_lf(std::span<const double> x, Rng& rng) { return sample_model(synthetic_pair().lf, x, rng); }

double borehole_det(double r_w, double r, double t_u, double h_u, double t_l, double h_l, double l,
                    double k_w) {
  return borehole_formula(2.0 * std::numbers::pi, 1.0, r_w, r, t_u, h_u, t_l, h_l, l, k_w);
}

double borehole_det_lf(double r_w, double r, double t_u, double h_u, double t_l, double h_l, double l,
                       double k_w) {
  return borehole_formula(5.0, 1.5, r_w, r, t_u, h_u, t_l, h_l, l, k_w);
}

InputModel borehole_variables() {
  return InputModel{{Marginal::gaussian(0.1, 0.016), Marginal::uniform(990, 1110), Marginal::uniform(9855, 12045),
                     Marginal::lognormal(7.71, 1.0056), Marginal::uniform(63070, 115600),
                     Marginal::uniform(63.1, 116), Marginal::uniform(700, 820), Marginal::uniform(1120, 1680)},
                    {"r_w", "h_u", "k_w", "r", "t_u", "t_l", "h_l", "l"}};
}

InputModel borehole_hf_input() {
  const std::vector<int> cols{0, 1, 2};
  return borehole_variables().subset(cols);
}

InputModel borehole_lf_input() {
  const std::vector<int> cols{0, 1};
  return borehole_variables().subset(cols);
}

double borehole_hf(double r_w, double h_u, double k_w, Rng& rng) {
  static const InputModel v = borehole_variables();
  const double r = draw(v.marginals[3], rng);
  const double t_u = draw(v.marginals[4], rng);
  const double t_l = draw(v.marginals[5], rng);
  const double h_l = draw(v.marginals[6], rng);
  const double l = draw(v.marginals[7], rng);
  return borehole_det(r_w, r, t_u, h_u, t_l, h_l, l, k_w);
}

double borehole_lf(double r_w, double h_u, Rng& rng) {
  static const InputModel v = borehole_variables();
  const double k_w = draw(v.marginals[2], rng);
  const double r = draw(v.marginals[3], rng);
  const double t_u = draw(v.marginals[4], rng);
  const double t_l = draw(v.marginals[5], rng);
  const double h_l = draw(v.marginals[6], rng);
  const double l = draw(v.marginals[7], rng);
  return borehole_det_lf(r_w, r, t_u, h_u, t_l, h_l, l, k_w);
}

std::string to_string(Example e) { return e == Example::Synthetic ? "synthetic" : "borehole"; }

Example parse_example(const std::string& s) {
  if (s == "synthetic") return Example::Synthetic;
  if (s == "borehole") return Example::Borehole;
  throw ConfigError("unknown example '" + s + "' (expected synthetic or borehole)");
}

ExampleSetup example_setup(Example e) {
  ExampleSetup s;
  if (e == Example::Synthetic) {
    s.hf_input = synthetic_input();
    s.lf_columns = {0, 1, 2, 3};
    s.hf = synthetic_hf;
    s.lf = synthetic_lf;
    s.analytic_hf = &synthetic_pair().hf;
  } else {
    s.hf_input = borehole_hf_input();
    s.lf_columns = {0, 1};
    s.hf = [](std::span<const double> x, Rng& rng) { return borehole_hf(x[0], x[1], x[2], rng); };
    s.lf = [](std::span<const double> x, Rng& rng) { return borehole_lf(x[0], x[1], rng); };
  }
  return s;
}

void ExperimentPlan::validate() const {
  if (n_high.empty()) throw ConfigError("experiment: empty N_H grid");
  for (std::size_t n : n_high)
    if (n < 1) throw ConfigError("experiment: N_H entries must be positive");
  if (n_low < 1 || repetitions < 1 || test_points < 1 || replications < 1)
    throw ConfigError("experiment: counts must be positive");
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("experiment: p must lie in (0, 1)");
}

Eigen::VectorXd simulate_design(const std::function<double(std::span<const double>, Rng&)>& sim,
                                const Eigen::MatrixXd& X, std::uint64_t seed) {
  Eigen::VectorXd y(X.rows());
  std::vector<double> row(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) row[static_cast<std::size_t>(j)] = X(i, j);
    Rng rng(derive_seed(seed, "point", static_cast<std::uint64_t>(i)));
    y[i] = sim(row, rng);
  }
  return y;
}

ReferenceSet make_reference(const ExampleSetup& setup, std::size_t n_points, std::size_t replications,
                            std::uint64_t seed) {
  ReferenceSet ref;
  ref.X = lhs_sample(setup.hf_input, n_points, derive_seed(seed, "test-design"));
  ref.references.resize(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const Eigen::VectorXd x = ref.X.row(static_cast<Eigen::Index>(i));
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    if (setup.analytic_hf) {
      ref.references[i] = eval_lambda(*setup.analytic_hf, xs);
    } else {
      Rng rng(derive_seed(seed, "replications", i));
      EmpiricalReference e;
      e.sorted.resize(replications);
      for (auto& v : e.sorted) v = setup.hf(xs, rng);
      std::sort(e.sorted.begin(), e.sorted.end());
      ref.references[i] = std::move(e);
    }
  }
  return ref;
}

ExperimentReport run_experiment(const ExperimentPlan& plan) {
  plan.validate();
  const ExampleSetup setup = example_setup(plan.example);
  const std::string name = to_string(plan.example);
  const ReferenceSet reference = make_reference(setup, plan.test_points, plan.replications, plan.seed);
  ReferenceSet lf_reference = reference;
  lf_reference.X = project_columns(reference.X, setup.lf_columns);
  const InputModel lf_input = setup.hf_input.subset(setup.lf_columns);

  const std::size_t n_cells = plan.n_high.size();
  std::vector<std::vector<ExperimentRow>> per_rep(plan.repetitions);

  auto run_rep = [&](std::size_t rep) {
    auto& rows = per_rep[rep];
    auto elapsed = [](auto t0) {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    auto record = [&](std::size_t n_high, const char* model, std::uint64_t seed, double wall,
                      const std::function<MetricsReport()>& metric, const std::string& failure) {
      ExperimentRow row;
      row.example = name;
      row.n_high = n_high;
      row.repetition = rep;
      row.model = model;
      row.seed = seed;
      row.wall_time = wall;
      if (!failure.empty()) {
        row.ok = false;
        row.message = failure;
      } else {
        try {
          const MetricsReport m = metric();
          row.eps_w = m.eps_w;
          row.nmse_mean = m.nmse_mean;
          row.nmse_var = m.nmse_var;
        } catch (const Error& e) {
          row.ok = false;
          row.message = e.what();
        }
      }
      rows.push_back(std::move(row));
    };

    // LF design and fit are shared by every N_H of this repetition.
    const std::uint64_t lf_seed = derive_seed(plan.seed, "lf", rep);
    Dataset lf;
    lf.fidelity = Fidelity::Low;
    lf.X = lhs_sample(lf_input, plan.n_low, derive_seed(lf_seed, "design"));
    lf.y = simulate_design(setup.lf, lf.X, derive_seed(lf_seed, "responses"));
    std::optional<GlamFit> lf_fit;
    std::string lf_failure;
    const auto t_lf = std::chrono::steady_clock::now();
    try {
      FitConfig cfg;
      cfg.seed = derive_seed(lf_seed, "fit");
      lf_fit = fit_glam(lf, lf_input, cfg);
    } catch (const Error& e) {
      lf_failure = std::string("LF fit failed: ") + e.what();
    }
    const double lf_wall = elapsed(t_lf);

    for (std::size_t c = 0; c < n_cells; ++c) {
      const std::size_t n_high = plan.n_high[c];
      const std::uint64_t cell_seed = derive_seed(plan.seed, "cell", rep * 1000003ULL + c);
      Dataset hf;
      hf.X = lhs_sample(setup.hf_input, n_high, derive_seed(cell_seed, "design"));
      hf.y = simulate_design(setup.hf, hf.X, derive_seed(cell_seed, "responses"));

      record(n_high, "LF", lf_seed, lf_wall,
             [&] { return normalized_ws_error(AnyModel(lf_fit->model), lf_reference); }, lf_failure);

      std::optional<GlamFit> hf_fit;
      std::string hf_failure;
      auto t0 = std::chrono::steady_clock::now();
      try {
        FitConfig cfg;
        cfg.seed = derive_seed(cell_seed, "hf-fit");
        hf_fit = fit_glam(hf, setup.hf_input, cfg);
      } catch (const Error& e) {
        hf_failure = std::string("HF fit failed: ") + e.what();
      }
      record(n_high, "HF", cell_seed, elapsed(t0),
             [&] { return normalized_ws_error(AnyModel(hf_fit->model), reference); }, hf_failure);

      std::optional<MfGlamFit> mf_fit;
      std::string mf_failure = lf_failure;
      t0 = std::chrono::steady_clock::now();
      if (mf_failure.empty()) {
        try {
          MfFitConfig cfg;
          cfg.p = plan.p;
          cfg.lf_columns = setup.lf_columns;
          cfg.seed = derive_seed(cell_seed, "mf-fit");
          mf_fit = fit_mfglam(hf, lf, setup.hf_input, cfg, *lf_fit);
        } catch (const Error& e) {
          mf_failure = std::string("MF fit failed: ") + e.what();
        }
      }
      record(n_high, "MF", cell_seed, elapsed(t0),
             [&] { return normalized_ws_error(AnyModel(mf_fit->model), reference); }, mf_failure);
    }
  };
  parallel_for(plan.repetitions, plan.workers, run_rep);

  ExperimentReport report;
  report.plan = plan;
  for (auto& r : per_rep)
    for (auto& row : r) report.rows.push_back(std::move(row));

  for (std::size_t n_high : plan.n_high)
    for (const char* model : {"LF", "HF", "MF"}) {
      CellSummary s;
      s.n_high = n_high;
      s.model = model;
      std::vector<double> values;
      for (const auto& row : report.rows)
        if (row.n_high == n_high && row.model == model) {
          if (row.ok) values.push_back(row.eps_w);
          else ++s.failures;
        }
      s.successes = values.size();
      if (!values.empty()) {
        s.median = sample_quantile(values, 0.5);
        s.iqr = sample_quantile(values, 0.75) - sample_quantile(values, 0.25);
      } else {
        s.median = s.iqr = std::numeric_limits<double>::quiet_NaN();
      }
      report.summary.push_back(s);
    }
  return report;
}

}  // namespace glam
