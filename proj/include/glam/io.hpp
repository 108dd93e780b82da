#pragma once

// File formats: CSV tables, flat key = value configuration files and JSON
// reports.

#include <Eigen/Dense>
#include <filesystem>
#include "json.hpp"
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "glam/fit_mf.hpp"
#include "glam/metrics.hpp"
#include "glam/simulators.hpp"

namespace glam {

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
// Whole-string parse; throws IoError naming `what` on failure.
double parse_double(std::string_view s, std::string_view what);

struct Table {
  std::vector<std::string> header;
  Eigen::MatrixXd values;  // one row per record

  // Throws IoError when the column is missing.
  Eigen::Index column(std::string_view name) const;
};

Table parse_csv(std::string_view text, std::string_view source = "<input>");
Table read_csv(const std::filesystem::path& path);
std::string to_csv(const Table& table);

std::string read_text(const std::filesystem::path& path);
// Writes through a temporary file renamed into place.
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

// Inputs in input-model order (by name) plus the response column.
Dataset dataset_from_table(const Table& table, const InputModel& input, std::string_view response = "y");
Table table_from_dataset(const Dataset& data, const InputModel& input, std::string_view response = "y");

// Flat configuration: "key = value" lines, '#' comments, repeatable keys.
class Config {
public:
  static Config parse(std::string_view text, std::string_view source = "<config>");
  static Config load(const std::filesystem::path& path);

  void set(std::string key, std::string value);  // replaces earlier values
  bool has(std::string_view key) const;
  std::vector<std::string> all(std::string_view key) const;
  std::string get(std::string_view key, std::string_view fallback) const;
  double get_double(std::string_view key, double fallback) const;
  long long get_int(std::string_view key, long long fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::vector<int> get_ints(std::string_view key, std::vector<int> fallback) const;
  std::vector<double> get_doubles(std::string_view key, std::vector<double> fallback) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// "marginal = <name> <uniform|gaussian|lognormal> <a> <b>" lines.
InputModel input_model_from_config(const Config& c);
FitConfig fit_config_from(const Config& c);
MfFitConfig mf_fit_config_from(const Config& c);
ExperimentPlan experiment_plan_from(const Config& c);

// Every recognized key with its default value, as a loadable config file.
std::string defaults_text();

nlohmann::json to_json(const FitReport& r);
nlohmann::json to_json(const MfFitReport& r);
nlohmann::json to_json(const MetricsReport& r);
nlohmann::json summary_json(const ExperimentReport& r);
std::string experiment_rows_csv(const ExperimentReport& r);

}  // namespace glam
