#include "glam/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "glam/error.hpp"
#include "glam/serialize.hpp"

namespace glam {
namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ",";
    if constexpr (std::is_floating_point_v<T>) s += format_double(v[k]);
    else s += std::to_string(v[k]);
  }
  return s;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json truncation_json(const TruncationSet& s) {
  return json{{"degree", s.degree}, {"qnorm", s.qnorm}, {"size", s.size()}, {"indices", s.indices}};
}

std::string stage_name(OptimStage s) { return s == OptimStage::TrustRegion ? "trust-region" : "cmaes"; }

ParamGrid grid_from(const Config& c, const std::string& prefix, const ParamGrid& fallback) {
  return ParamGrid{c.get_ints(prefix + ".degrees", fallback.degrees), c.get_doubles(prefix + ".qnorms", fallback.qnorms)};
}

bool any_key_with_prefix(const Config& c, std::string_view prefix) {
  for (const auto& [k, v] : c.entries())
    if (k.starts_with(prefix)) return true;
  return false;
}

OptimConfig optim_from(const Config& c) {
  OptimConfig o;
  o.trust_region_max_iterations = static_cast<int>(c.get_int("optim.max_iterations", o.trust_region_max_iterations));
  o.gradient_tolerance = c.get_double("optim.gradient_tolerance", o.gradient_tolerance);
  o.cmaes_budget = static_cast<int>(c.get_int("optim.cmaes_budget", o.cmaes_budget));
  o.enable_cmaes = c.get_bool("optim.enable_cmaes", o.enable_cmaes);
  if (o.trust_region_max_iterations < 1 || o.cmaes_budget < 0 || !(o.gradient_tolerance > 0.0))
    throw ConfigError("optimizer settings out of range");
  return o;
}

std::uint64_t seed_from(const Config& c) {
  const long long s = c.get_int("seed", 0);
  if (s < 0) throw ConfigError("seed must be nonnegative");
  return static_cast<std::uint64_t>(s);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, std::string_view what) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError(std::string(what) + ": '" + std::string(s) + "' is not a number");
  return v;
}

Eigen::Index Table::column(std::string_view name) const {
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k] == name) return static_cast<Eigen::Index>(k);
  throw IoError("missing column '" + std::string(name) + "'");
}

Table parse_csv(std::string_view text, std::string_view source) {
  Table t;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool have_header = false;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    const std::string_view line = trim(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    ++line_no;
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    if (!have_header) {
      for (auto f : fields) {
        if (f.empty()) throw IoError(where + ": empty column name");
        t.header.emplace_back(f);
      }
      for (std::size_t a = 0; a < t.header.size(); ++a)
        for (std::size_t b = a + 1; b < t.header.size(); ++b)
          if (t.header[a] == t.header[b]) throw IoError(where + ": duplicate column '" + t.header[a] + "'");
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size())
      throw IoError(where + ": expected " + std::to_string(t.header.size()) + " fields, found " +
                    std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::size_t k = 0; k < fields.size(); ++k) row.push_back(parse_double(fields[k], where + " column '" + t.header[k] + "'"));
    rows.push_back(std::move(row));
  }
  if (!have_header) throw IoError(std::string(source) + ": missing header row");
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  return t;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Table read_csv(const std::filesystem::path& path) { return parse_csv(read_text(path), path.string()); }

std::string to_csv(const Table& table) {
  std::string s;
  for (std::size_t k = 0; k < table.header.size(); ++k) {
    if (k) s += ',';
    s += table.header[k];
  }
  s += '\n';
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    for (Eigen::Index k = 0; k < table.values.cols(); ++k) {
      if (k) s += ',';
      s += format_double(table.values(i, k));
    }
    s += '\n';
  }
  return s;
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

Dataset dataset_from_table(const Table& table, const InputModel& input, std::string_view response) {
  Dataset d;
  const Eigen::Index n = table.values.rows();
  d.X.resize(n, static_cast<Eigen::Index>(input.dim()));
  for (std::size_t j = 0; j < input.dim(); ++j) d.X.col(static_cast<Eigen::Index>(j)) = table.values.col(table.column(input.names[j]));
  d.y = table.values.col(table.column(response));
  return d;
}

Table table_from_dataset(const Dataset& data, const InputModel& input, std::string_view response) {
  Table t;
  t.header = input.names;
  t.header.emplace_back(response);
  t.values.resize(data.X.rows(), data.X.cols() + 1);
  t.values.leftCols(data.X.cols()) = data.X;
  t.values.col(data.X.cols()) = data.y;
  return t;
}

Config Config::parse(std::string_view text, std::string_view source) {
  Config c;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++line_no;
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": empty key");
    c.entries_.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) { return parse(read_text(path), path.string()); }

void Config::set(std::string key, std::string value) {
  std::erase_if(entries_, [&](const auto& e) { return e.first == key; });
  entries_.emplace_back(std::move(key), std::move(value));
}

bool Config::has(std::string_view key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return true;
  return false;
}

std::vector<std::string> Config::all(std::string_view key) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_)
    if (k == key) out.push_back(v);
  return out;
}

std::string Config::get(std::string_view key, std::string_view fallback) const {
  std::string out(fallback);
  for (const auto& [k, v] : entries_)
    if (k == key) out = v;  // last one wins
  return out;
}

double Config::get_double(std::string_view key, double fallback) const {
  if (!has(key)) return fallback;
  try {
    return parse_double(get(key, ""), key);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
}

long long Config::get_int(std::string_view key, long long fallback) const {
  if (!has(key)) return fallback;
  const std::string s = get(key, "");
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError(std::string(key) + ": '" + s + "' is not an integer");
  return v;
}

bool Config::get_bool(std::string_view key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string s = get(key, "");
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(std::string(key) + ": '" + s + "' is not a boolean");
}

std::vector<int> Config::get_ints(std::string_view key, std::vector<int> fallback) const {
  if (!has(key)) return fallback;
  std::vector<int> out;
  const std::string s = get(key, "");
  for (auto f : split(s, ',')) {
    int v = 0;
    const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size())
      throw ConfigError(std::string(key) + ": '" + std::string(f) + "' is not an integer");
    out.push_back(v);
  }
  return out;
}

std::vector<double> Config::get_doubles(std::string_view key, std::vector<double> fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  const std::string s = get(key, "");
  try {
    for (auto f : split(s, ',')) out.push_back(parse_double(f, key));
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return out;
}

InputModel input_model_from_config(const Config& c) {
  InputModel in;
  for (const std::string& line : c.all("marginal")) {
    std::istringstream ss(line);
    std::string name, kind, a, b, extra;
    if (!(ss >> name >> kind >> a >> b) || (ss >> extra))
      throw ConfigError("marginal '" + line + "': expected '<name> <kind> <a> <b>'");
    Marginal m;
    m.kind = parse_marginal_kind(kind);
    try {
      m.a = parse_double(a, "marginal " + name);
      m.b = parse_double(b, "marginal " + name);
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
    in.marginals.push_back(m);
    in.names.push_back(name);
  }
  if (in.marginals.empty()) throw ConfigError("input model: no 'marginal' entries");
  in.validate();
  return in;
}

FitConfig fit_config_from(const Config& c) {
  FitConfig f;
  f.small_n_threshold = static_cast<std::size_t>(c.get_int("small_n_threshold", static_cast<long long>(f.small_n_threshold)));
  f.initial_shape = c.get_double("initial_shape", f.initial_shape);
  f.fgls_max_iterations = static_cast<int>(c.get_int("fgls_max_iterations", f.fgls_max_iterations));
  f.fgls_tolerance = c.get_double("fgls_tolerance", f.fgls_tolerance);
  f.optim = optim_from(c);
  f.seed = seed_from(c);
  f.workers = static_cast<int>(c.get_int("workers", 1));
  if (any_key_with_prefix(c, "grid.lambda")) {
    CandidateGrid g = CandidateGrid::standard();
    static const char* names[4] = {"grid.lambda1", "grid.lambda2", "grid.lambda3", "grid.lambda4"};
    for (std::size_t i = 0; i < 4; ++i) g.params[i] = grid_from(c, names[i], g.params[i]);
    g.validate();
    f.grid = g;
  }
  if (f.fgls_max_iterations < 1 || !(f.fgls_tolerance > 0.0)) throw ConfigError("FGLS settings out of range");
  return f;
}

MfFitConfig mf_fit_config_from(const Config& c) {
  MfFitConfig m;
  m.lf = fit_config_from(c);
  m.p = c.get_double("p", m.p);
  m.lf_columns = c.get_ints("lf_columns", {});
  m.small_n_threshold = m.lf.small_n_threshold;
  m.shape_discrepancy = c.get_bool("shape_discrepancy", m.shape_discrepancy);
  m.optim = m.lf.optim;
  m.max_widenings = static_cast<int>(c.get_int("max_widenings", m.max_widenings));
  m.seed = m.lf.seed;
  m.workers = m.lf.workers;
  if (any_key_with_prefix(c, "grid.delta")) {
    auto g = default_discrepancy_grid(1000000, 0);
    g[0] = grid_from(c, "grid.delta1", g[0]);
    g[1] = grid_from(c, "grid.delta2", g[1]);
    m.discrepancy_grid = g;
  }
  m.validate();
  return m;
}

ExperimentPlan experiment_plan_from(const Config& c) {
  ExperimentPlan p;
  p.example = parse_example(c.get("example", to_string(p.example)));
  std::vector<int> nh;
  for (std::size_t n : p.n_high) nh.push_back(static_cast<int>(n));
  p.n_high.clear();
  for (int n : c.get_ints("n_high", nh)) {
    if (n < 1) throw ConfigError("n_high entries must be positive");
    p.n_high.push_back(static_cast<std::size_t>(n));
  }
  auto count = [&](const char* key, std::size_t fallback) {
    const long long v = c.get_int(key, static_cast<long long>(fallback));
    if (v < 1) throw ConfigError(std::string(key) + " must be positive");
    return static_cast<std::size_t>(v);
  };
  p.n_low = count("n_low", p.n_low);
  p.repetitions = count("repetitions", p.repetitions);
  p.test_points = count("test_points", p.test_points);
  p.replications = count("replications", p.replications);
  p.p = c.get_double("p", p.p);
  p.seed = seed_from(c);
  p.workers = static_cast<int>(c.get_int("workers", 1));
  p.validate();
  return p;
}

std::string defaults_text() {
  const FitConfig f;
  const MfFitConfig m;
  const ExperimentPlan p;
  const CandidateGrid g = CandidateGrid::standard();
  const auto d = default_discrepancy_grid(1000000, 0);
  std::ostringstream s;
  s << "# Input model: one line per variable, in dataset column order.\n"
    << "# marginal = <name> <uniform|gaussian|lognormal> <a> <b>\n"
    << "\n# Common\n"
    << "seed = 0\n"
    << "workers = 1\n"
    << "\n# Single-fidelity fit\n"
    << "small_n_threshold = " << f.small_n_threshold << "\n"
    << "initial_shape = " << format_double(f.initial_shape) << "\n"
    << "fgls_max_iterations = " << f.fgls_max_iterations << "\n"
    << "fgls_tolerance = " << format_double(f.fgls_tolerance) << "\n";
  for (std::size_t i = 0; i < 4; ++i) {
    s << "# grid.lambda" << i + 1 << ".degrees = " << join(g.params[i].degrees) << "\n";
    s << "# grid.lambda" << i + 1 << ".qnorms = " << join(g.params[i].qnorms) << "\n";
  }
  s << "# Grids shrink automatically below small_n_threshold samples; giving any\n"
    << "# grid key fixes the grid instead.\n"
    << "\n# Optimizer\n"
    << "optim.max_iterations = " << f.optim.trust_region_max_iterations << "\n"
    << "optim.gradient_tolerance = " << format_double(f.optim.gradient_tolerance) << "\n"
    << "optim.cmaes_budget = " << f.optim.cmaes_budget << "\n"
    << "optim.enable_cmaes = " << (f.optim.enable_cmaes ? "true" : "false") << "\n"
    << "\n# Multi-fidelity fit\n"
    << "p = " << format_double(m.p) << "\n"
    << "# lf_columns = 0,1   (default: all HF columns)\n"
    << "shape_discrepancy = " << (m.shape_discrepancy ? "true" : "false") << "\n"
    << "max_widenings = " << m.max_widenings << "\n";
  for (std::size_t i = 0; i < 2; ++i) {
    s << "# grid.delta" << i + 1 << ".degrees = " << join(d[i].degrees) << "\n";
    s << "# grid.delta" << i + 1 << ".qnorms = " << join(d[i].qnorms) << "\n";
  }
  std::vector<std::size_t> nh = p.n_high;
  s << "\n# Experiment\n"
    << "example = " << to_string(p.example) << "\n"
    << "n_high = " << join(nh) << "\n"
    << "n_low = " << p.n_low << "\n"
    << "repetitions = " << p.repetitions << "\n"
    << "test_points = " << p.test_points << "\n"
    << "replications = " << p.replications << "\n";
  return s.str();
}

json to_json(const FitReport& r) {
  json cands = json::array();
  for (const auto& c : r.candidates)
    cands.push_back({{"lambda3", truncation_json(c.set3)},
                     {"lambda4", truncation_json(c.set4)},
                     {"n_params", c.n_params},
                     {"loglik", number(c.loglik)},
                     {"bic", number(c.bic)},
                     {"feasible", c.feasible},
                     {"stage", stage_name(c.stage)},
                     {"converged", c.converged}});
  json sel = json::object();
  static const char* keys[4] = {"lambda1", "lambda2", "lambda3", "lambda4"};
  for (std::size_t i = 0; i < 4; ++i) {
    json t = truncation_json(r.selected[i]);
    std::vector<double> c(r.coefficients[i].data(), r.coefficients[i].data() + r.coefficients[i].size());
    t["coefficients"] = c;
    sel[keys[i]] = t;
  }
  return json{{"n_samples", r.n_samples},  {"seed", r.seed},
              {"loglik", number(r.loglik)}, {"bic", number(r.bic)},
              {"fgls_iterations", r.fgls_iterations}, {"selected", sel},
              {"selected_candidate", r.selected_index}, {"candidates", cands},
              {"wall_time", r.wall_time}};
}

json to_json(const MfFitReport& r) {
  json cands = json::array();
  for (const auto& c : r.candidates)
    cands.push_back({{"delta1_degree", c.degree1},
                     {"delta1_qnorm", c.q1},
                     {"delta2_degree", c.degree2},
                     {"delta2_qnorm", c.q2},
                     {"n_params", c.n_params},
                     {"loglik", number(c.loglik)},
                     {"mf_bic", number(c.mf_bic)},
                     {"feasible", c.feasible},
                     {"stage", stage_name(c.stage)},
                     {"converged", c.converged}});
  std::vector<double> theta(r.theta.data(), r.theta.data() + r.theta.size());
  return json{{"lf", to_json(r.lf)},
              {"n_high", r.n_high},
              {"n_low", r.n_low},
              {"seed", r.seed},
              {"loglik", number(r.loglik)},
              {"mf_bic", number(r.mf_bic)},
              {"selected_candidate", r.selected_index},
              {"candidates", cands},
              {"theta", theta},
              {"wall_time", r.wall_time}};
}

json to_json(const MetricsReport& r) {
  return json{{"eps_w", number(r.eps_w)},
              {"nmse_mean", number(r.nmse_mean)},
              {"nmse_var", number(r.nmse_var)},
              {"total_variance", number(r.total_variance)},
              {"distances", r.distances}};
}

json summary_json(const ExperimentReport& r) {
  json cells = json::array();
  for (const auto& s : r.summary)
    cells.push_back({{"n_high", s.n_high},
                     {"model", s.model},
                     {"median_eps_w", number(s.median)},
                     {"iqr_eps_w", number(s.iqr)},
                     {"successes", s.successes},
                     {"failures", s.failures}});
  json failures = json::array();
  for (const auto& row : r.rows)
    if (!row.ok)
      failures.push_back({{"n_high", row.n_high}, {"repetition", row.repetition}, {"model", row.model}, {"message", row.message}});
  const ExperimentPlan& p = r.plan;
  return json{{"plan",
               {{"example", to_string(p.example)},
                {"n_high", p.n_high},
                {"n_low", p.n_low},
                {"repetitions", p.repetitions},
                {"test_points", p.test_points},
                {"replications", p.replications},
                {"p", p.p},
                {"seed", p.seed}}},
              {"cells", cells},
              {"failures", failures}};
}

std::string experiment_rows_csv(const ExperimentReport& r) {
  std::string s = "example,N_H,repetition,model,eps_W,nmse_mean,nmse_var,wall_time,seed\n";
  for (const auto& row : r.rows) {
    const auto metric = [&](double v) { return row.ok ? format_double(v) : std::string("nan"); };
    s += row.example + "," + std::to_string(row.n_high) + "," + std::to_string(row.repetition) + "," + row.model + "," +
         metric(row.eps_w) + "," + metric(row.nmse_mean) + "," + metric(row.nmse_var) + "," +
         format_double(row.wall_time) + "," + std::to_string(row.seed) + "\n";
  }
  return s;
}

}  // namespace glam
