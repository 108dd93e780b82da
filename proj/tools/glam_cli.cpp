// Command-line front end; talks to the library only through the C API.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "glam/glam.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitFit = 2;

struct Failure {
  glam_status status;
};

void check(glam_status s) {
  if (s != GLAM_OK) throw Failure{s};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using ConfigPtr = std::unique_ptr<glam_config, Deleter<glam_config, glam_config_free>>;
using DatasetPtr = std::unique_ptr<glam_dataset, Deleter<glam_dataset, glam_dataset_free>>;
using ModelPtr = std::unique_ptr<glam_model, Deleter<glam_model, glam_model_free>>;

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { glam_string_free(s); }
  std::string str() const { return s ? s : ""; }
};

ConfigPtr load_config(const std::string& path) {
  glam_config* c = nullptr;
  check(path.empty() ? glam_config_parse("", &c) : glam_config_load(path.c_str(), &c));
  return ConfigPtr(c);
}

void set(glam_config* c, const std::string& key, const std::string& value) {
  check(glam_config_set(c, key.c_str(), value.c_str()));
}

void write_file(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << text;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw std::runtime_error("cannot move '" + tmp + "' to '" + path + "'");
}

// Options shared by the fit and experiment commands.
struct Common {
  std::string config;
  std::optional<unsigned long long> seed;
  std::optional<int> workers;
  std::vector<std::string> grid_values;
};

void add_grid_flags(CLI::App* cmd, Common& c, const std::vector<std::string>& params) {
  c.grid_values.resize(params.size() * 2);
  std::size_t k = 0;
  for (const auto& p : params)
    for (const char* part : {"degrees", "qnorms"}) {
      cmd->add_option("--grid-" + p + "-" + part, c.grid_values[k++],
                      std::string("comma-separated ") + part + " for " + p);
    }
}

void apply_common(glam_config* cfg, const Common& c, const std::vector<std::string>& params) {
  if (c.seed) set(cfg, "seed", std::to_string(*c.seed));
  if (c.workers) set(cfg, "workers", std::to_string(*c.workers));
  std::size_t k = 0;
  for (const auto& p : params)
    for (const char* part : {"degrees", "qnorms"}) {
      const std::string& v = c.grid_values[k++];
      if (!v.empty()) set(cfg, "grid." + p + "." + part, v);
    }
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw CLI::ValidationError("'" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError("empty list");
  return out;
}

// lo:hi:n -> n equally spaced values.
std::vector<double> parse_grid(const std::string& s) {
  const auto a = s.find(':'), b = s.rfind(':');
  if (a == std::string::npos || a == b) throw CLI::ValidationError("--pdf-grid expects lo:hi:n");
  const double lo = std::stod(s.substr(0, a)), hi = std::stod(s.substr(a + 1, b - a - 1));
  const int n = std::stoi(s.substr(b + 1));
  if (n < 2 || !(hi > lo)) throw CLI::ValidationError("--pdf-grid needs hi > lo and n >= 2");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (n - 1);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GLaM and multi-fidelity GLaM stochastic emulators"};
  app.require_subcommand(1);
  app.set_version_flag("--version", glam_version());

  const std::vector<std::string> lambda_params{"lambda1", "lambda2", "lambda3", "lambda4"};
  const std::vector<std::string> mf_params{"lambda1", "lambda2", "lambda3", "lambda4", "delta1", "delta2"};

  // fit-glam
  Common fit;
  std::string fit_data, fit_model, fit_report;
  auto* cmd_fit = app.add_subcommand("fit-glam", "fit a GLaM to one dataset");
  cmd_fit->add_option("--data", fit_data, "training CSV (input columns and y)")->required();
  cmd_fit->add_option("--config", fit.config, "input model and fit settings")->required();
  cmd_fit->add_option("--model", fit_model, "output model JSON")->required();
  cmd_fit->add_option("--report", fit_report, "output fit report JSON");
  cmd_fit->add_option("--seed", fit.seed, "master seed")->required();
  cmd_fit->add_option("--workers", fit.workers, "worker threads")->check(CLI::PositiveNumber);
  add_grid_flags(cmd_fit, fit, lambda_params);

  // fit-mfglam
  Common mf;
  std::string mf_hf, mf_lf, mf_model, mf_report, mf_lf_columns;
  std::optional<double> mf_p;
  auto* cmd_mf = app.add_subcommand("fit-mfglam", "fit a multi-fidelity GLaM to HF and LF datasets");
  cmd_mf->add_option("--hf", mf_hf, "high-fidelity CSV")->required();
  cmd_mf->add_option("--lf", mf_lf, "low-fidelity CSV (LF input columns and y)")->required();
  cmd_mf->add_option("--config", mf.config, "HF input model and fit settings")->required();
  cmd_mf->add_option("--model", mf_model, "output model JSON")->required();
  cmd_mf->add_option("--report", mf_report, "output fit report JSON");
  cmd_mf->add_option("--seed", mf.seed, "master seed")->required();
  cmd_mf->add_option("--workers", mf.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd_mf->add_option("--p", mf_p, "weight of the LF data source, in (0, 1)");
  cmd_mf->add_option("--lf-columns", mf_lf_columns, "HF columns used by the LF model, e.g. 0,1");
  add_grid_flags(cmd_mf, mf, mf_params);

  // predict
  std::string pr_model, pr_points, pr_out, pr_quantiles, pr_grid;
  bool pr_moments = false;
  auto* cmd_pr = app.add_subcommand("predict", "evaluate a model at points");
  cmd_pr->add_option("--model", pr_model, "model JSON")->required();
  cmd_pr->add_option("--points", pr_points, "CSV with the model's input columns")->required();
  cmd_pr->add_option("--out", pr_out, "output CSV")->required();
  auto* o_q = cmd_pr->add_option("--quantiles", pr_quantiles, "comma-separated levels in (0, 1)");
  auto* o_g = cmd_pr->add_option("--pdf-grid", pr_grid, "response grid lo:hi:n");
  auto* o_m = cmd_pr->add_flag("--moments", pr_moments, "conditional mean and variance");
  o_q->excludes(o_g)->excludes(o_m);
  o_g->excludes(o_m);

  // simulate
  std::string sim_example = "synthetic", sim_fidelity = "hf", sim_out;
  std::size_t sim_n = 0;
  unsigned long long sim_seed = 0;
  auto* cmd_sim = app.add_subcommand("simulate", "sample a built-in simulator on an LHS design");
  cmd_sim->add_option("--example", sim_example, "synthetic or borehole");
  cmd_sim->add_option("--fidelity", sim_fidelity, "hf or lf");
  cmd_sim->add_option("--n", sim_n, "number of points")->required()->check(CLI::PositiveNumber);
  cmd_sim->add_option("--seed", sim_seed, "master seed")->required();
  cmd_sim->add_option("--out", sim_out, "output CSV")->required();

  // validate
  std::string va_model, va_config, va_out;
  std::optional<unsigned long long> va_seed;
  auto* cmd_va = app.add_subcommand("validate", "normalized Wasserstein error against a reference");
  cmd_va->add_option("--model", va_model, "model JSON")->required();
  cmd_va->add_option("--config", va_config, "reference settings")->required();
  cmd_va->add_option("--out", va_out, "output metrics JSON (stdout if omitted)");
  cmd_va->add_option("--seed", va_seed, "seed of the test design");

  // experiment
  Common ex;
  std::string ex_out;
  auto* cmd_ex = app.add_subcommand("experiment", "repeated LF/HF/MF fits with metrics");
  cmd_ex->add_option("--config", ex.config, "experiment plan")->required();
  cmd_ex->add_option("--out", ex_out, "output directory")->required();
  cmd_ex->add_option("--seed", ex.seed, "master seed")->required();
  cmd_ex->add_option("--workers", ex.workers, "worker threads")->check(CLI::PositiveNumber);

  app.add_subcommand("defaults", "print every configuration key with its default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*cmd_fit) {
      ConfigPtr cfg = load_config(fit.config);
      apply_common(cfg.get(), fit, lambda_params);
      glam_dataset* d = nullptr;
      check(glam_dataset_load(fit_data.c_str(), cfg.get(), 0, &d));
      DatasetPtr data(d);
      glam_model* m = nullptr;
      OwnedString report;
      check(glam_fit_glam(data.get(), cfg.get(), &m, &report.s));
      ModelPtr model(m);
      check(glam_model_save(model.get(), fit_model.c_str()));
      if (!fit_report.empty()) write_file(fit_report, report.str());
    } else if (*cmd_mf) {
      ConfigPtr cfg = load_config(mf.config);
      apply_common(cfg.get(), mf, mf_params);
      if (mf_p) set(cfg.get(), "p", std::to_string(*mf_p));
      if (!mf_lf_columns.empty()) set(cfg.get(), "lf_columns", mf_lf_columns);
      glam_dataset *h = nullptr, *l = nullptr;
      check(glam_dataset_load(mf_hf.c_str(), cfg.get(), 0, &h));
      DatasetPtr hf(h);
      check(glam_dataset_load(mf_lf.c_str(), cfg.get(), 1, &l));
      DatasetPtr lf(l);
      glam_model* m = nullptr;
      OwnedString report;
      check(glam_fit_mfglam(hf.get(), lf.get(), cfg.get(), &m, &report.s));
      ModelPtr model(m);
      check(glam_model_save(model.get(), mf_model.c_str()));
      if (!mf_report.empty()) write_file(mf_report, report.str());
    } else if (*cmd_pr) {
      glam_model* m = nullptr;
      check(glam_model_load(pr_model.c_str(), &m));
      ModelPtr model(m);
      std::vector<double> values;
      std::string mode;
      try {
        if (!pr_quantiles.empty()) {
          mode = "quantiles";
          values = parse_list(pr_quantiles);
        } else if (!pr_grid.empty()) {
          mode = "pdf";
          values = parse_grid(pr_grid);
        } else if (pr_moments) {
          mode = "moments";
        } else {
          throw CLI::ValidationError("one of --quantiles, --pdf-grid or --moments is required");
        }
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
      }
      check(glam_predict_file(model.get(), pr_points.c_str(), mode.c_str(), values.data(), values.size(),
                              pr_out.c_str()));
    } else if (*cmd_sim) {
      check(glam_simulate(sim_example.c_str(), sim_fidelity.c_str(), sim_n, sim_seed, sim_out.c_str()));
    } else if (*cmd_va) {
      ConfigPtr cfg = load_config(va_config);
      if (va_seed) set(cfg.get(), "seed", std::to_string(*va_seed));
      glam_model* m = nullptr;
      check(glam_model_load(va_model.c_str(), &m));
      ModelPtr model(m);
      OwnedString metrics;
      check(glam_validate(model.get(), cfg.get(), &metrics.s));
      if (va_out.empty()) std::cout << metrics.str() << "\n";
      else write_file(va_out, metrics.str());
    } else if (*cmd_ex) {
      ConfigPtr cfg = load_config(ex.config);
      apply_common(cfg.get(), ex, {});
      OwnedString summary;
      check(glam_experiment(cfg.get(), ex_out.c_str(), &summary.s));
      std::cout << summary.str() << "\n";
    } else {
      OwnedString text;
      check(glam_defaults(&text.s));
      std::cout << text.str();
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << glam_last_error() << "\n";
    return f.status == GLAM_ERR_FIT ? kExitFit : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
