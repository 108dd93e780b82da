#pragma once

// Fitted emulators: each GLD parameter is a polynomial chaos expansion of the
// standardized input, lambda2 through an exponential link.

#include <Eigen/Dense>
#include <array>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "glam/gld.hpp"
#include "glam/input_model.hpp"
#include "glam/pce.hpp"
#include "glam/rng.hpp"

namespace glam {

enum class Link { Identity, Exp };

std::string to_string(Link link);
Link parse_link(const std::string& s);

struct LambdaExpansion {
  TruncationSet truncation;
  Eigen::VectorXd coefficients;
  Link link = Link::Identity;

  bool empty() const { return truncation.indices.empty(); }
  // Sum of coefficient * basis value at a standardized point (link not applied).
  double series(std::span<const double> xi, std::span<const PolyFamily> families) const;
};

// Link required for parameter slot i (0-based): exp for lambda2.
constexpr Link required_link(std::size_t i) { return i == 1 ? Link::Exp : Link::Identity; }

struct GlamModel {
  InputModel input;
  std::array<LambdaExpansion, 4> expansions;

  void validate() const;
};

struct MfGlamModel {
  InputModel input;             // high-fidelity inputs
  std::vector<int> lf_columns;  // HF columns seen by the low-fidelity expansions
  std::array<LambdaExpansion, 4> lf_expansions;
  // Discrepancies over the full HF input; lambda3/lambda4 are usually empty.
  // The lambda2 discrepancy is added inside the exponential.
  std::array<LambdaExpansion, 4> discrepancy_expansions;

  void validate() const;
  // The low-fidelity part as a stand-alone single-fidelity model.
  GlamModel lf_model() const;
};

using AnyModel = std::variant<GlamModel, MfGlamModel>;

const InputModel& input_of(const AnyModel& m);

GldParams eval_lambda(const GlamModel& model, std::span<const double> x);
GldParams eval_lambda(const MfGlamModel& model, std::span<const double> x);
GldParams eval_lambda(const AnyModel& model, std::span<const double> x);

// The two additive pieces of an MF parameter vector at x: low-fidelity series
// and discrepancy series, both before the lambda2 link.
struct MfSeries {
  std::array<double, 4> lf;
  std::array<double, 4> discrepancy;
};
MfSeries eval_series(const MfGlamModel& model, std::span<const double> x);

std::vector<double> predict_quantiles(const AnyModel& model, std::span<const double> x,
                                      std::span<const double> levels);
std::vector<double> predict_pdf(const AnyModel& model, std::span<const double> x,
                                std::span<const double> ys);
// nullopt when the predicted shape parameters make the moments undefined.
std::optional<Moments> predict_moments(const AnyModel& model, std::span<const double> x);
std::vector<double> sample_response(const AnyModel& model, std::span<const double> x,
                                    std::size_t n, Rng& rng);

// True when x lies inside the support of every input marginal. Predictions
// outside are still produced (polynomials extrapolate).
bool in_input_domain(const AnyModel& model, std::span<const double> x);

}  // namespace glam
