#include "glam/model.hpp"

#include <cmath>

#include "glam/error.hpp"

namespace glam {

std::string to_string(Link link) { return link == Link::Exp ? "exp" : "identity"; }

Link parse_link(const std::string& s) {
  if (s == "exp") return Link::Exp;
  if (s == "identity") return Link::Identity;
  throw SchemaError("unknown link '" + s + "'");
}

double LambdaExpansion::series(std::span<const double> xi,
                               std::span<const PolyFamily> families) const {
  if (empty()) return 0.0;
  const auto psi = eval_basis(xi, truncation.indices, families);
  double s = 0.0;
  for (std::size_t k = 0; k < psi.size(); ++k) s += coefficients[static_cast<Eigen::Index>(k)] * psi[k];
  return s;
}

namespace {

void check_expansion(const LambdaExpansion& e, std::size_t slot, std::size_t dim,
                     const char* what) {
  if (static_cast<std::size_t>(e.coefficients.size()) != e.truncation.indices.size())
    throw SchemaError(std::string(what) + ": coefficient count differs from index count");
  if (e.link != required_link(slot))
    throw SchemaError(std::string(what) + ": lambda" + std::to_string(slot + 1) +
                      " must use the " + to_string(required_link(slot)) + " link");
  for (const auto& a : e.truncation.indices) {
    if (a.size() != dim) throw SchemaError(std::string(what) + ": multi-index dimension mismatch");
    for (int d : a)
      if (d < 0) throw SchemaError(std::string(what) + ": negative multi-index entry");
  }
  for (Eigen::Index k = 0; k < e.coefficients.size(); ++k)
    if (!std::isfinite(e.coefficients[k]))
      throw SchemaError(std::string(what) + ": non-finite coefficient");
}

std::vector<double> pick(std::span<const double> x, const std::vector<int>& cols) {
  std::vector<double> out;
  out.reserve(cols.size());
  for (int c : cols) out.push_back(x[static_cast<std::size_t>(c)]);
  return out;
}

}  // namespace

void GlamModel::validate() const {
  input.validate();
  for (std::size_t i = 0; i < 4; ++i) {
    check_expansion(expansions[i], i, input.dim(), "GLaM expansion");
    if (expansions[i].empty()) throw SchemaError("GLaM expansion must not be empty");
  }
}

void MfGlamModel::validate() const {
  input.validate();
  if (lf_columns.empty()) throw SchemaError("MF-GLaM: empty low-fidelity column map");
  std::vector<bool> seen(input.dim(), false);
  for (int c : lf_columns) {
    if (c < 0 || static_cast<std::size_t>(c) >= input.dim())
      throw SchemaError("MF-GLaM: low-fidelity column out of range");
    if (seen[static_cast<std::size_t>(c)]) throw SchemaError("MF-GLaM: duplicate low-fidelity column");
    seen[static_cast<std::size_t>(c)] = true;
  }
  for (std::size_t i = 0; i < 4; ++i) {
    check_expansion(lf_expansions[i], i, lf_columns.size(), "MF-GLaM LF expansion");
    if (lf_expansions[i].empty()) throw SchemaError("MF-GLaM LF expansion must not be empty");
    check_expansion(discrepancy_expansions[i], i, input.dim(), "MF-GLaM discrepancy");
  }
}

GlamModel MfGlamModel::lf_model() const {
  return GlamModel{input.subset(lf_columns), lf_expansions};
}

const InputModel& input_of(const AnyModel& m) {
  return std::visit([](const auto& v) -> const InputModel& { return v.input; }, m);
}

GldParams eval_lambda(const GlamModel& model, std::span<const double> x) {
  const auto xi = model.input.to_standard(x);
  const auto fam = model.input.families();
  std::array<double, 4> s{};
  for (std::size_t i = 0; i < 4; ++i) s[i] = model.expansions[i].series(xi, fam);
  return GldParams{s[0], std::exp(s[1]), s[2], s[3]};
}

MfSeries eval_series(const MfGlamModel& model, std::span<const double> x) {
  const auto xi = model.input.to_standard(x);
  const auto fam = model.input.families();
  const auto xi_lf = pick(xi, model.lf_columns);
  std::vector<PolyFamily> fam_lf;
  for (int c : model.lf_columns) fam_lf.push_back(fam[static_cast<std::size_t>(c)]);
  MfSeries out{};
  for (std::size_t i = 0; i < 4; ++i) {
    out.lf[i] = model.lf_expansions[i].series(xi_lf, fam_lf);
    out.discrepancy[i] = model.discrepancy_expansions[i].series(xi, fam);
  }
  return out;
}

GldParams eval_lambda(const MfGlamModel& model, std::span<const double> x) {
  const MfSeries s = eval_series(model, x);
  return GldParams{s.lf[0] + s.discrepancy[0], std::exp(s.lf[1] + s.discrepancy[1]),
                   s.lf[2] + s.discrepancy[2], s.lf[3] + s.discrepancy[3]};
}

GldParams eval_lambda(const AnyModel& model, std::span<const double> x) {
  return std::visit([&](const auto& m) { return eval_lambda(m, x); }, model);
}

std::vector<double> predict_quantiles(const AnyModel& model, std::span<const double> x,
                                      std::span<const double> levels) {
  const GldParams p = eval_lambda(model, x);
  std::vector<double> out;
  out.reserve(levels.size());
  for (double u : levels) out.push_back(quantile(u, p));
  return out;
}

std::vector<double> predict_pdf(const AnyModel& model, std::span<const double> x,
                                std::span<const double> ys) {
  const GldParams p = eval_lambda(model, x);
  std::vector<double> out;
  out.reserve(ys.size());
  for (double y : ys) out.push_back(pdf(y, p));
  return out;
}

std::optional<Moments> predict_moments(const AnyModel& model, std::span<const double> x) {
  return moments(eval_lambda(model, x));
}

std::vector<double> sample_response(const AnyModel& model, std::span<const double> x,
                                    std::size_t n, Rng& rng) {
  return sample(eval_lambda(model, x), n, rng);
}

bool in_input_domain(const AnyModel& model, std::span<const double> x) {
  return input_of(model).in_domain(x);
}

}  // namespace glam
