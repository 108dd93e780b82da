#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "glam/glam.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const char* kSyntheticInput =
    "marginal = x1 uniform 0 2\nmarginal = x2 uniform 0 2\nmarginal = x3 uniform 0 2\nmarginal = x4 uniform 0 2\n";

std::string take(char* s) {
  std::string out = s ? s : "";
  glam_string_free(s);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / "glam_capi_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string path(const char* name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("version, defaults and errors") {
  CHECK(std::strlen(glam_version()) > 0);
  char* text = nullptr;
  REQUIRE(glam_defaults(&text) == GLAM_OK);
  CHECK(take(text).find("initial_shape = 0.13") != std::string::npos);

  glam_config* cfg = nullptr;
  CHECK(glam_config_parse("a = 1\nno equals sign\n", &cfg) == GLAM_ERR_USAGE);
  CHECK(cfg == nullptr);
  CHECK(std::string(glam_last_error()).find(":2") != std::string::npos);
  CHECK(glam_config_load("/nonexistent/glam.cfg", &cfg) == GLAM_ERR_IO);
  CHECK(glam_config_parse(nullptr, &cfg) == GLAM_ERR_USAGE);
  CHECK(glam_model_load("/nonexistent/model.json", nullptr) == GLAM_ERR_USAGE);
  glam_config_free(nullptr);
  glam_model_free(nullptr);
  glam_dataset_free(nullptr);
  glam_string_free(nullptr);
  CHECK(glam_simulate("earthquake", "hf", 10, 1, "/tmp/x.csv") == GLAM_ERR_USAGE);
}

TEST_CASE("simulate, fit, save, load and predict") {
  Workspace ws;
  REQUIRE(glam_simulate("synthetic", "hf", 200, 3, ws.path("hf.csv").c_str()) == GLAM_OK);
  REQUIRE(glam_simulate("synthetic", "hf", 200, 3, ws.path("hf2.csv").c_str()) == GLAM_OK);
  CHECK(slurp(ws.path("hf.csv")) == slurp(ws.path("hf2.csv")));
  CHECK(slurp(ws.path("hf.csv")).rfind("x1,x2,x3,x4,y\n", 0) == 0);

  glam_config* cfg = nullptr;
  REQUIRE(glam_config_parse(kSyntheticInput, &cfg) == GLAM_OK);
  REQUIRE(glam_config_set(cfg, "seed", "5") == GLAM_OK);
  glam_dataset* data = nullptr;
  REQUIRE(glam_dataset_load(ws.path("hf.csv").c_str(), cfg, 0, &data) == GLAM_OK);
  CHECK(glam_dataset_rows(data) == 200);

  glam_model* model = nullptr;
  char* report = nullptr;
  REQUIRE(glam_fit_glam(data, cfg, &model, &report) == GLAM_OK);
  const auto rj = nlohmann::json::parse(take(report));
  CHECK(rj.at("seed").get<std::uint64_t>() == 5);
  CHECK(rj.at("n_samples").get<int>() == 200);
  CHECK(glam_model_input_dim(model) == 4);

  REQUIRE(glam_model_save(model, ws.path("m.json").c_str()) == GLAM_OK);
  glam_model* loaded = nullptr;
  REQUIRE(glam_model_load(ws.path("m.json").c_str(), &loaded) == GLAM_OK);
  char *j1 = nullptr, *j2 = nullptr;
  REQUIRE(glam_model_to_json(model, &j1) == GLAM_OK);
  REQUIRE(glam_model_to_json(loaded, &j2) == GLAM_OK);
  CHECK(take(j1) == take(j2));

  const double x[8] = {0.5, 1.0, 1.5, 0.2, 1.9, 0.1, 0.7, 1.3};
  const double levels[3] = {0.1, 0.5, 0.9};
  double q[6], lam[8], mean[2], var[2];
  REQUIRE(glam_predict_quantiles(loaded, x, 2, levels, 3, q) == GLAM_OK);
  REQUIRE(glam_predict_lambda(loaded, x, 2, lam) == GLAM_OK);
  CHECK(q[0] < q[1]);
  CHECK(q[1] < q[2]);
  CHECK(lam[1] > 0);
  REQUIRE(glam_predict_moments(loaded, x, 2, mean, var) == GLAM_OK);
  CHECK(var[0] > 0);
  double dens[3];
  REQUIRE(glam_predict_pdf(loaded, x, 1, q, 3, dens) == GLAM_OK);
  for (double d : dens) CHECK(d > 0);
  CHECK(glam_predict_quantiles(loaded, nullptr, 2, levels, 3, q) == GLAM_ERR_USAGE);
  const double bad_level = 1.5;
  CHECK(glam_predict_quantiles(loaded, x, 1, &bad_level, 1, q) != GLAM_OK);

  // File prediction: inputs then predictions, one line per point.
  {
    std::ofstream pts(ws.path("pts.csv"));
    pts << "x1,x2,x3,x4\n0.5,1,1.5,0.2\n1.9,0.1,0.7,1.3\n";
  }
  REQUIRE(glam_predict_file(loaded, ws.path("pts.csv").c_str(), "quantiles", levels, 3,
                            ws.path("q.csv").c_str()) == GLAM_OK);
  const std::string qcsv = slurp(ws.path("q.csv"));
  CHECK(qcsv.rfind("x1,x2,x3,x4,q@0.1,q@0.5,q@0.9\n", 0) == 0);
  REQUIRE(glam_predict_file(loaded, ws.path("pts.csv").c_str(), "moments", nullptr, 0,
                            ws.path("mom.csv").c_str()) == GLAM_OK);
  CHECK(slurp(ws.path("mom.csv")).rfind("x1,x2,x3,x4,mean,variance\n", 0) == 0);
  CHECK(glam_predict_file(loaded, ws.path("pts.csv").c_str(), "median", nullptr, 0,
                          ws.path("bad.csv").c_str()) == GLAM_ERR_USAGE);

  // Validation against the model itself is exact.
  glam_config* vcfg = nullptr;
  REQUIRE(glam_config_parse("reference = model\ntest_points = 50\nseed = 1\n", &vcfg) == GLAM_OK);
  REQUIRE(glam_config_set(vcfg, "reference_model", ws.path("m.json").c_str()) == GLAM_OK);
  char* metrics = nullptr;
  REQUIRE(glam_validate(loaded, vcfg, &metrics) == GLAM_OK);
  CHECK(nlohmann::json::parse(take(metrics)).at("eps_w").get<double>() == 0.0);

  glam_config_free(vcfg);
  glam_model_free(loaded);
  glam_model_free(model);
  glam_dataset_free(data);
  glam_config_free(cfg);
}

TEST_CASE("fit errors map to status codes") {
  Workspace ws;
  REQUIRE(glam_simulate("synthetic", "hf", 5, 1, ws.path("tiny.csv").c_str()) == GLAM_OK);
  glam_config* cfg = nullptr;
  REQUIRE(glam_config_parse(kSyntheticInput, &cfg) == GLAM_OK);
  glam_dataset* data = nullptr;
  REQUIRE(glam_dataset_load(ws.path("tiny.csv").c_str(), cfg, 0, &data) == GLAM_OK);
  glam_model* model = nullptr;
  CHECK(glam_fit_glam(data, cfg, &model, nullptr) == GLAM_ERR_FIT);
  CHECK(model == nullptr);
  CHECK(std::strlen(glam_last_error()) > 0);

  {
    std::ofstream bad(ws.path("noy.csv"));
    bad << "x1,x2,x3,x4\n1,1,1,1\n";
  }
  glam_dataset* d2 = nullptr;
  CHECK(glam_dataset_load(ws.path("noy.csv").c_str(), cfg, 0, &d2) == GLAM_ERR_IO);
  CHECK(std::string(glam_last_error()).find("'y'") != std::string::npos);

  {
    std::ofstream bad(ws.path("bad.json"));
    bad << R"({"version": 1, "role": "glam"})";
  }
  glam_model* m = nullptr;
  CHECK(glam_model_load(ws.path("bad.json").c_str(), &m) == GLAM_ERR_SCHEMA);
  glam_dataset_free(data);
  glam_config_free(cfg);
}
