#include "glam/glam.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <limits>
#include <new>
#include <string>

#include "glam/error.hpp"
#include "glam/io.hpp"
#include "glam/serialize.hpp"

struct glam_config {
  glam::Config config;
};

struct glam_dataset {
  glam::Dataset data;
};

struct glam_model {
  glam::AnyModel model;
};

namespace {

thread_local std::string last_error;

template <class F>
glam_status guard(F&& f) {
  try {
    f();
    last_error.clear();
    return GLAM_OK;
  } catch (const glam::FitError& e) {
    last_error = e.what();
    return GLAM_ERR_FIT;
  } catch (const glam::DomainError& e) {
    last_error = e.what();
    return GLAM_ERR_DOMAIN;
  } catch (const glam::IoError& e) {
    last_error = e.what();
    return GLAM_ERR_IO;
  } catch (const glam::SchemaError& e) {
    last_error = e.what();
    return GLAM_ERR_SCHEMA;
  } catch (const glam::Error& e) {
    last_error = e.what();
    return GLAM_ERR_USAGE;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return GLAM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = std::string("internal error: ") + e.what();
    return GLAM_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw glam::ConfigError(std::string(what) + " must not be NULL");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::span<const double> row(const double* x, std::size_t i, std::size_t dim) { return {x + i * dim, dim}; }

// Rows of a points CSV arranged in the model's input order.
Eigen::MatrixXd read_points(const glam::AnyModel& model, const char* path) {
  const glam::Table t = glam::read_csv(path);
  const glam::InputModel& in = glam::input_of(model);
  Eigen::MatrixXd X(t.values.rows(), static_cast<Eigen::Index>(in.dim()));
  for (std::size_t j = 0; j < in.dim(); ++j) X.col(static_cast<Eigen::Index>(j)) = t.values.col(t.column(in.names[j]));
  return X;
}

glam::ReferenceSet reference_from(const glam::Config& c, std::uint64_t seed) {
  const std::string kind = c.get("reference", "model");
  const auto n = static_cast<std::size_t>(c.get_int("test_points", 1000));
  const auto reps = static_cast<std::size_t>(c.get_int("replications", 250));
  if (n < 1 || reps < 1) throw glam::ConfigError("test_points and replications must be positive");
  if (kind == "synthetic" || kind == "borehole")
    return glam::make_reference(glam::example_setup(glam::parse_example(kind)), n, reps, seed);
  if (kind != "model") throw glam::ConfigError("reference must be synthetic, borehole or model");
  const std::string path = c.get("reference_model", "");
  if (path.empty()) throw glam::ConfigError("reference = model requires reference_model = <path>");
  const glam::AnyModel ref = glam::deserialize(glam::read_text(path));
  glam::ReferenceSet set;
  set.X = glam::lhs_sample(glam::input_of(ref), n, glam::derive_seed(seed, "test-design"));
  for (Eigen::Index i = 0; i < set.X.rows(); ++i) {
    const Eigen::VectorXd x = set.X.row(i);
    set.references.emplace_back(glam::eval_lambda(ref, std::span<const double>(x.data(), static_cast<std::size_t>(x.size()))));
  }
  return set;
}

}  // namespace

extern "C" {

const char* glam_version(void) { return "1.0.0"; }

const char* glam_last_error(void) { return last_error.c_str(); }

void glam_string_free(char* s) { std::free(s); }

glam_status glam_config_load(const char* path, glam_config** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new glam_config{glam::Config::load(path)};
  });
}

glam_status glam_config_parse(const char* text, glam_config** out) {
  return guard([&] {
    require(text, "text");
    require(out, "out");
    *out = new glam_config{glam::Config::parse(text)};
  });
}

glam_status glam_config_set(glam_config* cfg, const char* key, const char* value) {
  return guard([&] {
    require(cfg, "config");
    require(key, "key");
    require(value, "value");
    cfg->config.set(key, value);
  });
}

void glam_config_free(glam_config* cfg) { delete cfg; }

glam_status glam_defaults(char** out_text) {
  return guard([&] {
    require(out_text, "out_text");
    *out_text = copy_string(glam::defaults_text());
  });
}

glam_status glam_dataset_load(const char* csv_path, const glam_config* cfg, int low_fidelity, glam_dataset** out) {
  return guard([&] {
    require(csv_path, "csv_path");
    require(cfg, "config");
    require(out, "out");
    glam::InputModel in = glam::input_model_from_config(cfg->config);
    if (low_fidelity) {
      const auto map = glam::input_subset_map(cfg->config.get_ints("lf_columns", {}), in.dim());
      in = in.subset(map);
    }
    glam::Dataset d = glam::dataset_from_table(glam::read_csv(csv_path), in);
    d.fidelity = low_fidelity ? glam::Fidelity::Low : glam::Fidelity::High;
    d.validate();
    *out = new glam_dataset{std::move(d)};
  });
}

size_t glam_dataset_rows(const glam_dataset* d) { return d ? d->data.size() : 0; }

void glam_dataset_free(glam_dataset* d) { delete d; }

glam_status glam_fit_glam(const glam_dataset* data, const glam_config* cfg, glam_model** out, char** report_json) {
  return guard([&] {
    require(data, "dataset");
    require(cfg, "config");
    require(out, "out");
    const glam::InputModel in = glam::input_model_from_config(cfg->config);
    const glam::GlamFit fit = glam::fit_glam(data->data, in, glam::fit_config_from(cfg->config));
    if (report_json) *report_json = copy_string(glam::to_json(fit.report).dump(2));
    *out = new glam_model{fit.model};
  });
}

glam_status glam_fit_mfglam(const glam_dataset* hf, const glam_dataset* lf, const glam_config* cfg,
                            glam_model** out, char** report_json) {
  return guard([&] {
    require(hf, "HF dataset");
    require(lf, "LF dataset");
    require(cfg, "config");
    require(out, "out");
    const glam::InputModel in = glam::input_model_from_config(cfg->config);
    const glam::MfGlamFit fit = glam::fit_mfglam(hf->data, lf->data, in, glam::mf_fit_config_from(cfg->config));
    if (report_json) *report_json = copy_string(glam::to_json(fit.report).dump(2));
    *out = new glam_model{fit.model};
  });
}

glam_status glam_model_load(const char* path, glam_model** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new glam_model{glam::deserialize(glam::read_text(path))};
  });
}

glam_status glam_model_save(const glam_model* m, const char* path) {
  return guard([&] {
    require(m, "model");
    require(path, "path");
    glam::write_text_atomic(path, glam::serialize(m->model));
  });
}

glam_status glam_model_to_json(const glam_model* m, char** out_json) {
  return guard([&] {
    require(m, "model");
    require(out_json, "out_json");
    *out_json = copy_string(glam::serialize(m->model));
  });
}

size_t glam_model_input_dim(const glam_model* m) { return m ? glam::input_of(m->model).dim() : 0; }

void glam_model_free(glam_model* m) { delete m; }

glam_status glam_predict_lambda(const glam_model* m, const double* x, size_t n, double* out_lambda) {
  return guard([&] {
    require(m, "model");
    if (n == 0) return;
    require(x, "x");
    require(out_lambda, "out_lambda");
    const std::size_t dim = glam::input_of(m->model).dim();
    for (std::size_t i = 0; i < n; ++i) {
      const glam::GldParams p = glam::eval_lambda(m->model, row(x, i, dim));
      out_lambda[4 * i] = p.lambda1;
      out_lambda[4 * i + 1] = p.lambda2;
      out_lambda[4 * i + 2] = p.lambda3;
      out_lambda[4 * i + 3] = p.lambda4;
    }
  });
}

glam_status glam_predict_quantiles(const glam_model* m, const double* x, size_t n, const double* levels,
                                   size_t n_levels, double* out) {
  return guard([&] {
    require(m, "model");
    if (n == 0 || n_levels == 0) return;
    require(x, "x");
    require(levels, "levels");
    require(out, "out");
    const std::size_t dim = glam::input_of(m->model).dim();
    const std::span<const double> lv(levels, n_levels);
    for (std::size_t i = 0; i < n; ++i) {
      const auto q = glam::predict_quantiles(m->model, row(x, i, dim), lv);
      std::copy(q.begin(), q.end(), out + i * n_levels);
    }
  });
}

glam_status glam_predict_pdf(const glam_model* m, const double* x, size_t n, const double* ys, size_t n_ys,
                             double* out) {
  return guard([&] {
    require(m, "model");
    if (n == 0 || n_ys == 0) return;
    require(x, "x");
    require(ys, "ys");
    require(out, "out");
    const std::size_t dim = glam::input_of(m->model).dim();
    const std::span<const double> grid(ys, n_ys);
    for (std::size_t i = 0; i < n; ++i) {
      const auto f = glam::predict_pdf(m->model, row(x, i, dim), grid);
      std::copy(f.begin(), f.end(), out + i * n_ys);
    }
  });
}

glam_status glam_predict_moments(const glam_model* m, const double* x, size_t n, double* out_mean,
                                 double* out_variance) {
  return guard([&] {
    require(m, "model");
    if (n == 0) return;
    require(x, "x");
    require(out_mean, "out_mean");
    require(out_variance, "out_variance");
    const std::size_t dim = glam::input_of(m->model).dim();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < n; ++i) {
      const auto mo = glam::predict_moments(m->model, row(x, i, dim));
      out_mean[i] = mo ? mo->mean : nan;
      out_variance[i] = mo ? mo->variance : nan;
    }
  });
}

glam_status glam_predict_file(const glam_model* m, const char* points_csv, const char* mode, const double* values,
                              size_t n_values, const char* out_csv) {
  return guard([&] {
    require(m, "model");
    require(points_csv, "points_csv");
    require(mode, "mode");
    require(out_csv, "out_csv");
    const std::string md = mode;
    if (md != "moments" && md != "quantiles" && md != "pdf")
      throw glam::ConfigError("prediction mode must be quantiles, pdf or moments");
    if (md != "moments" && (n_values == 0 || !values))
      throw glam::ConfigError("prediction mode '" + md + "' needs at least one value");
    const Eigen::MatrixXd X = read_points(m->model, points_csv);
    const glam::InputModel& in = glam::input_of(m->model);

    glam::Table t;
    t.header = in.names;
    const std::span<const double> vals(values, md == "moments" ? 0 : n_values);
    if (md == "moments") {
      t.header.emplace_back("mean");
      t.header.emplace_back("variance");
    } else {
      for (double v : vals) t.header.push_back((md == "pdf" ? "pdf@" : "q@") + glam::format_double(v));
    }
    t.values.resize(X.rows(), static_cast<Eigen::Index>(t.header.size()));
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const Eigen::VectorXd x = X.row(i);
      const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
      t.values.row(i).head(X.cols()) = X.row(i);
      std::vector<double> out;
      if (md == "moments") {
        const auto mo = glam::predict_moments(m->model, xs);
        out = {mo ? mo->mean : nan, mo ? mo->variance : nan};
      } else if (md == "pdf") {
        out = glam::predict_pdf(m->model, xs, vals);
      } else {
        out = glam::predict_quantiles(m->model, xs, vals);
      }
      for (std::size_t k = 0; k < out.size(); ++k) t.values(i, X.cols() + static_cast<Eigen::Index>(k)) = out[k];
    }
    glam::write_text_atomic(out_csv, glam::to_csv(t));
  });
}

glam_status glam_simulate(const char* example, const char* fidelity, size_t n, uint64_t seed, const char* out_csv) {
  return guard([&] {
    require(example, "example");
    require(fidelity, "fidelity");
    require(out_csv, "out_csv");
    if (n == 0) throw glam::ConfigError("simulate: n must be positive");
    const std::string fid = fidelity;
    if (fid != "hf" && fid != "lf") throw glam::ConfigError("fidelity must be hf or lf");
    const glam::ExampleSetup s = glam::example_setup(glam::parse_example(example));
    const glam::InputModel in = fid == "hf" ? s.hf_input : s.hf_input.subset(s.lf_columns);
    glam::Dataset d;
    d.X = glam::lhs_sample(in, n, glam::derive_seed(seed, "design"));
    d.y = glam::simulate_design(fid == "hf" ? s.hf : s.lf, d.X, glam::derive_seed(seed, "responses"));
    glam::write_text_atomic(out_csv, glam::to_csv(glam::table_from_dataset(d, in)));
  });
}

glam_status glam_validate(const glam_model* m, const glam_config* cfg, char** metrics_json) {
  return guard([&] {
    require(m, "model");
    require(cfg, "config");
    require(metrics_json, "metrics_json");
    const auto seed = static_cast<std::uint64_t>(cfg->config.get_int("seed", 0));
    glam::ReferenceSet ref = reference_from(cfg->config, seed);
    const std::size_t dim = glam::input_of(m->model).dim();
    if (static_cast<std::size_t>(ref.X.cols()) != dim) {
      const auto map = cfg->config.get_ints("lf_columns", {});
      if (map.size() != dim)
        throw glam::ConfigError("model has " + std::to_string(dim) + " inputs, reference has " +
                                std::to_string(ref.X.cols()) + "; set lf_columns to project");
      ref.X = glam::project_columns(ref.X, glam::input_subset_map(map, static_cast<std::size_t>(ref.X.cols())));
    }
    const int workers = static_cast<int>(cfg->config.get_int("workers", 1));
    *metrics_json = copy_string(glam::to_json(glam::normalized_ws_error(m->model, ref, workers)).dump(2));
  });
}

glam_status glam_experiment(const glam_config* cfg, const char* out_dir, char** summary_json) {
  return guard([&] {
    require(cfg, "config");
    require(out_dir, "out_dir");
    const glam::ExperimentPlan plan = glam::experiment_plan_from(cfg->config);
    const glam::ExperimentReport report = glam::run_experiment(plan);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    const std::string summary = glam::summary_json(report).dump(2);
    glam::write_text_atomic(dir / "summary.json", summary);
    glam::write_text_atomic(dir / "rows.csv", glam::experiment_rows_csv(report));
    if (summary_json) *summary_json = copy_string(summary);
  });
}

}  // extern "C"
