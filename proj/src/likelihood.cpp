#include "glam/likelihood.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "glam/error.hpp"

namespace glam {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::MatrixXd basis_for(const Eigen::MatrixXd& xi, const TruncationSet& set,
                          const std::vector<PolyFamily>& families) {
  return basis_matrix(xi, set.indices, families);
}

Eigen::MatrixXd columns(const Eigen::MatrixXd& m, const std::vector<int>& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(cols[k]);
  return out;
}

LambdaExpansion expansion(const TruncationSet& set, const Eigen::VectorXd& theta,
                          Eigen::Index offset, std::size_t slot) {
  const auto n = static_cast<Eigen::Index>(set.size());
  return LambdaExpansion{set, theta.segment(offset, n), required_link(slot)};
}

}  // namespace

void Dataset::validate() const {
  if (y.size() == 0) throw ConfigError("dataset is empty");
  if (X.rows() != y.size()) throw ConfigError("dataset: input and response row counts differ");
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (!std::isfinite(y[i])) throw ConfigError("dataset: non-finite response");
}

std::size_t GlamStructure::parameter_count() const {
  std::size_t n = 0;
  for (const auto& s : sets) n += s.size();
  return n;
}

std::array<Eigen::Index, 4> GlamStructure::offsets() const {
  std::array<Eigen::Index, 4> off{};
  Eigen::Index o = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    off[i] = o;
    o += static_cast<Eigen::Index>(sets[i].size());
  }
  return off;
}

GlamModel GlamStructure::make_model(const Eigen::VectorXd& theta) const {
  if (static_cast<std::size_t>(theta.size()) != parameter_count())
    throw ConfigError("coefficient vector length does not match structure");
  const auto off = offsets();
  GlamModel m;
  m.input = input;
  for (std::size_t i = 0; i < 4; ++i) m.expansions[i] = expansion(sets[i], theta, off[i], i);
  return m;
}

Eigen::VectorXd GlamStructure::coefficients_of(const GlamModel& model) const {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(parameter_count()));
  const auto off = offsets();
  for (std::size_t i = 0; i < 4; ++i)
    theta.segment(off[i], static_cast<Eigen::Index>(sets[i].size())) = model.expansions[i].coefficients;
  return theta;
}

std::size_t MfStructure::lf_parameter_count() const {
  std::size_t n = 0;
  for (const auto& s : lf_sets) n += s.size();
  return n;
}

std::size_t MfStructure::parameter_count() const {
  std::size_t n = lf_parameter_count();
  for (const auto& s : discrepancy_sets) n += s.size();
  return n;
}

MfGlamModel MfStructure::make_model(const Eigen::VectorXd& theta) const {
  if (static_cast<std::size_t>(theta.size()) != parameter_count())
    throw ConfigError("coefficient vector length does not match structure");
  MfGlamModel m;
  m.input = input;
  m.lf_columns = lf_columns;
  Eigen::Index o = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    m.lf_expansions[i] = expansion(lf_sets[i], theta, o, i);
    o += static_cast<Eigen::Index>(lf_sets[i].size());
  }
  for (std::size_t i = 0; i < 4; ++i) {
    m.discrepancy_expansions[i] = expansion(discrepancy_sets[i], theta, o, i);
    o += static_cast<Eigen::Index>(discrepancy_sets[i].size());
  }
  return m;
}

FidelityWeights fidelity_weights(double p, std::size_t n_low, std::size_t n_high) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("fidelity weight p must lie in (0, 1)");
  if (n_low == 0 || n_high == 0) throw ConfigError("both fidelity datasets must be nonempty");
  const double total = static_cast<double>(n_low + n_high);
  return {p * total / static_cast<double>(n_low), (1.0 - p) * total / static_cast<double>(n_high)};
}

LikelihoodObjective::LikelihoodObjective(std::vector<Block> blocks, Eigen::Index n_params)
    : blocks_(std::move(blocks)), n_params_(n_params) {
  for (const auto& b : blocks_)
    for (const auto& ts : b.terms)
      for (const auto& t : ts) {
        if (t.basis.rows() != b.y.size()) throw ConfigError("likelihood term row mismatch");
        if (t.offset < 0 || t.offset + t.basis.cols() > n_params_)
          throw ConfigError("likelihood term exceeds parameter vector");
      }
}

Eigen::MatrixXd LikelihoodObjective::lambdas(const Block& b, const Eigen::VectorXd& theta) const {
  Eigen::MatrixXd lam = Eigen::MatrixXd::Zero(b.y.size(), 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (const auto& t : b.terms[i])
      lam.col(static_cast<Eigen::Index>(i)).noalias() += t.basis * theta.segment(t.offset, t.basis.cols());
  lam.col(1) = lam.col(1).array().exp();
  return lam;
}

double LikelihoodObjective::evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
  if (theta.size() != n_params_) throw ConfigError("coefficient vector has wrong length");
  if (grad) grad->setZero(n_params_);
  std::vector<double> block_sums;
  block_sums.reserve(blocks_.size());
  std::vector<double> rows;
  for (const auto& b : blocks_) {
    const Eigen::MatrixXd lam = lambdas(b, theta);
    const Eigen::Index n = b.y.size();
    rows.assign(static_cast<std::size_t>(n), 0.0);
    Eigen::MatrixXd g;
    if (grad) g.resize(n, 4);
    for (Eigen::Index r = 0; r < n; ++r) {
      const GldParams p{lam(r, 0), lam(r, 1), lam(r, 2), lam(r, 3)};
      if (!is_valid(p)) return kNegInf;
      double lp;
      if (grad) {
        double gr[4];
        lp = log_pdf_with_gradient(b.y[r], p, gr);
        // lambda2 = exp(series): chain through the link.
        g.row(r) << gr[0], gr[1] * p.lambda2, gr[2], gr[3];
      } else {
        lp = log_pdf(b.y[r], p);
      }
      if (!std::isfinite(lp)) return kNegInf;
      rows[static_cast<std::size_t>(r)] = lp;
    }
    block_sums.push_back(b.weight * pairwise_sum(rows));
    if (grad) {
      if (!g.allFinite()) return kNegInf;
      for (std::size_t i = 0; i < 4; ++i)
        for (const auto& t : b.terms[i])
          grad->segment(t.offset, t.basis.cols()).noalias() +=
              b.weight * (t.basis.transpose() * g.col(static_cast<Eigen::Index>(i)));
    }
  }
  return pairwise_sum(block_sums);
}

double LikelihoodObjective::value(const Eigen::VectorXd& theta) const {
  return evaluate(theta, nullptr);
}

double LikelihoodObjective::value_and_gradient(const Eigen::VectorXd& theta,
                                               Eigen::VectorXd& grad) const {
  return evaluate(theta, &grad);
}

std::size_t LikelihoodObjective::infeasible_count(const Eigen::VectorXd& theta) const {
  std::size_t bad = 0;
  for (const auto& b : blocks_) {
    const Eigen::MatrixXd lam = lambdas(b, theta);
    for (Eigen::Index r = 0; r < b.y.size(); ++r) {
      const GldParams p{lam(r, 0), lam(r, 1), lam(r, 2), lam(r, 3)};
      if (!is_valid(p)) {
        ++bad;
        continue;
      }
      const Support s = support(p);
      if (!(b.y[r] > s.lower && b.y[r] < s.upper)) ++bad;
    }
  }
  return bad;
}

LikelihoodObjective make_single_objective(const Dataset& data, const GlamStructure& s) {
  data.validate();
  const Eigen::MatrixXd xi = s.input.to_standard(data.X);
  const auto fam = s.input.families();
  LikelihoodObjective::Block b;
  b.y = data.y;
  const auto off = s.offsets();
  for (std::size_t i = 0; i < 4; ++i)
    b.terms[i].push_back({basis_for(xi, s.sets[i], fam), off[i]});
  std::vector<LikelihoodObjective::Block> blocks;
  blocks.push_back(std::move(b));
  return LikelihoodObjective(std::move(blocks), static_cast<Eigen::Index>(s.parameter_count()));
}

LikelihoodObjective make_mf_objective(const Dataset& hf, const Dataset& lf,
                                      const MfStructure& s, double p) {
  hf.validate();
  lf.validate();
  const FidelityWeights w = fidelity_weights(p, lf.size(), hf.size());
  const InputModel lf_input = s.input.subset(s.lf_columns);
  if (static_cast<std::size_t>(lf.X.cols()) != lf_input.dim())
    throw ConfigError("low-fidelity dataset width does not match the column map");

  const auto fam = s.input.families();
  const auto fam_lf = lf_input.families();
  const Eigen::MatrixXd xi_h = s.input.to_standard(hf.X);
  const Eigen::MatrixXd xi_h_lf = columns(xi_h, s.lf_columns);
  const Eigen::MatrixXd xi_l = lf_input.to_standard(lf.X);

  LikelihoodObjective::Block low, high;
  low.y = lf.y;
  low.weight = w.low;
  high.y = hf.y;
  high.weight = w.high;
  Eigen::Index o = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    low.terms[i].push_back({basis_for(xi_l, s.lf_sets[i], fam_lf), o});
    high.terms[i].push_back({basis_for(xi_h_lf, s.lf_sets[i], fam_lf), o});
    o += static_cast<Eigen::Index>(s.lf_sets[i].size());
  }
  for (std::size_t i = 0; i < 4; ++i) {
    if (!s.discrepancy_sets[i].indices.empty())
      high.terms[i].push_back({basis_for(xi_h, s.discrepancy_sets[i], fam), o});
    o += static_cast<Eigen::Index>(s.discrepancy_sets[i].size());
  }
  std::vector<LikelihoodObjective::Block> blocks;
  blocks.push_back(std::move(low));
  blocks.push_back(std::move(high));
  return LikelihoodObjective(std::move(blocks), o);
}

double single_loglik(const Eigen::VectorXd& c, const Dataset& data, const GlamStructure& s) {
  return make_single_objective(data, s).value(c);
}

double mf_loglik(const Eigen::VectorXd& theta, const Dataset& hf, const Dataset& lf,
                 const MfStructure& s, double p) {
  return make_mf_objective(hf, lf, s, p).value(theta);
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

}  // namespace glam
