#pragma once

// Log-likelihood objectives of single- and multi-fidelity GLaMs over a flat
// coefficient vector theta, with analytic gradients.

#include <Eigen/Dense>
#include <array>
#include <span>
#include <vector>

#include "glam/model.hpp"

namespace glam {

enum class Fidelity { High, Low };

struct Dataset {
  Eigen::MatrixXd X;  // one row per sample, physical units
  Eigen::VectorXd y;
  Fidelity fidelity = Fidelity::High;

  std::size_t size() const { return static_cast<std::size_t>(y.size()); }
  void validate() const;
};

// Truncation sets of a single-fidelity GLaM; theta = (c1, c2, c3, c4).
struct GlamStructure {
  InputModel input;
  std::array<TruncationSet, 4> sets;

  std::size_t parameter_count() const;
  std::array<Eigen::Index, 4> offsets() const;
  GlamModel make_model(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd coefficients_of(const GlamModel& model) const;
};

// MF-GLaM structure; theta = (c1..c4, d1..d4).
struct MfStructure {
  InputModel input;  // high-fidelity
  std::vector<int> lf_columns;
  std::array<TruncationSet, 4> lf_sets;
  std::array<TruncationSet, 4> discrepancy_sets;

  std::size_t lf_parameter_count() const;
  std::size_t parameter_count() const;
  MfGlamModel make_model(const Eigen::VectorXd& theta) const;
};

// Importance weights of the LF and HF log-likelihood sums.
struct FidelityWeights {
  double low;
  double high;
};
FidelityWeights fidelity_weights(double p, std::size_t n_low, std::size_t n_high);

// Precomputed weighted sum of GLD log-densities, each lambda_i being a sum
// of basis-matrix times coefficient-segment terms.
class LikelihoodObjective {
public:
  struct Term {
    Eigen::MatrixXd basis;
    Eigen::Index offset;
  };
  struct Block {
    Eigen::VectorXd y;
    double weight = 1.0;
    std::array<std::vector<Term>, 4> terms;
  };

  LikelihoodObjective(std::vector<Block> blocks, Eigen::Index n_params);

  Eigen::Index dim() const { return n_params_; }

  // -infinity when some response lies outside its conditional support.
  double value(const Eigen::VectorXd& theta) const;
  double value_and_gradient(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const;

  // Number of responses strictly outside their support at theta.
  std::size_t infeasible_count(const Eigen::VectorXd& theta) const;

private:
  Eigen::MatrixXd lambdas(const Block& b, const Eigen::VectorXd& theta) const;
  double evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const;

  std::vector<Block> blocks_;
  Eigen::Index n_params_;
};

LikelihoodObjective make_single_objective(const Dataset& data, const GlamStructure& s);

// HF rows use the fused parameters; LF rows (inputs already restricted to
// lf_columns) use the LF expansions alone.
LikelihoodObjective make_mf_objective(const Dataset& hf, const Dataset& lf,
                                      const MfStructure& s, double p);

double single_loglik(const Eigen::VectorXd& c, const Dataset& data, const GlamStructure& s);
double mf_loglik(const Eigen::VectorXd& theta, const Dataset& hf, const Dataset& lf,
                 const MfStructure& s, double p);

// Pairwise summation in a fixed order, so results are reproducible.
double pairwise_sum(std::span<const double> v);

}  // namespace glam
