#include "glam/metrics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>

#include "glam/error.hpp"
#include "glam/likelihood.hpp"
#include "glam/parallel.hpp"

namespace glam {
namespace {

using Gauss16 = boost::math::quadrature::gauss<double, 16>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool square_integrable(const GldParams& p) { return p.lambda3 > -0.5 && p.lambda4 > -0.5; }

double population_variance(std::span<const double> v) {
  double m = pairwise_sum(v) / static_cast<double>(v.size());
  std::vector<double> d(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) d[i] = (v[i] - m) * (v[i] - m);
  return pairwise_sum(d) / static_cast<double>(v.size());
}

}  // namespace

double wasserstein2(const QuantileFn& q1, const QuantileFn& q2, const W2Options& opts) {
  if (!(opts.epsilon > 0.0 && opts.epsilon < 0.5) || opts.panels < 1)
    throw ConfigError("invalid Wasserstein quadrature options");
  const double t_max = std::log1p(-opts.epsilon) - std::log(opts.epsilon);
  const double h = 2.0 * t_max / opts.panels;
  const auto& x = Gauss16::abscissa();
  const auto& w = Gauss16::weights();
  std::vector<double> panel_sums(static_cast<std::size_t>(opts.panels));
  for (int k = 0; k < opts.panels; ++k) {
    const double mid = -t_max + (k + 0.5) * h;
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      // Abscissae are the nonnegative half; zero appears once for odd orders.
      for (double sign : {-1.0, 1.0}) {
        if (x[j] == 0.0 && sign > 0.0) continue;
        const double t = mid + sign * 0.5 * h * x[j];
        const double u = 1.0 / (1.0 + std::exp(-t));
        const double jac = u * (1.0 - u);
        const double d = q1(u) - q2(u);
        s += w[j] * d * d * jac;
      }
    }
    panel_sums[static_cast<std::size_t>(k)] = 0.5 * h * s;
  }
  return std::sqrt(std::max(pairwise_sum(panel_sums), 0.0));
}

std::optional<double> wasserstein2(const GldParams& a, const GldParams& b, const W2Options& opts) {
  validate(a);
  validate(b);
  if (!square_integrable(a) || !square_integrable(b)) return std::nullopt;
  return wasserstein2([&](double u) { return quantile(u, a); }, [&](double u) { return quantile(u, b); },
                      opts);
}

double empirical_quantile(std::span<const double> sorted, double u) {
  if (sorted.empty()) throw DomainError("empirical quantile of an empty sample");
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("quantile level outside [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * u;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

void ReferenceSet::validate() const {
  if (references.empty()) throw ConfigError("reference set is empty");
  if (static_cast<std::size_t>(X.rows()) != references.size())
    throw ConfigError("reference set: one reference per test point required");
  for (const auto& r : references)
    if (const auto* e = std::get_if<EmpiricalReference>(&r); e && e->sorted.empty())
      throw ConfigError("reference set: empty replication sample");
}

MetricsReport normalized_ws_error(const AnyModel& model, const ReferenceSet& reference, int workers) {
  reference.validate();
  const std::size_t n = reference.references.size();
  MetricsReport rep;
  rep.distances.assign(n, 0.0);
  std::vector<double> ref_mean(n, kNaN), ref_var(n, kNaN), pred_mean(n, kNaN), pred_var(n, kNaN);
  std::vector<char> undefined(n, 0);
  bool analytic = true;
  for (const auto& r : reference.references) analytic = analytic && std::holds_alternative<GldParams>(r);

  parallel_for(n, workers, [&](std::size_t i) {
    const Eigen::VectorXd row = reference.X.row(static_cast<Eigen::Index>(i));
    const GldParams p = eval_lambda(model, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    if (!is_valid(p) || !square_integrable(p)) {
      undefined[i] = 1;
      return;
    }
    if (const auto* g = std::get_if<GldParams>(&reference.references[i])) {
      const auto d = wasserstein2(p, *g);
      const auto mr = moments(*g);
      const auto mp = moments(p);
      if (!d || !mr) {
        undefined[i] = 1;
        return;
      }
      rep.distances[i] = *d;
      ref_mean[i] = mr->mean;
      ref_var[i] = mr->variance;
      if (mp) {
        pred_mean[i] = mp->mean;
        pred_var[i] = mp->variance;
      }
    } else {
      const auto& e = std::get<EmpiricalReference>(reference.references[i]);
      rep.distances[i] = wasserstein2([&](double u) { return quantile(u, p); },
                                      [&](double u) { return empirical_quantile(e.sorted, u); });
    }
  });
  for (std::size_t i = 0; i < n; ++i)
    if (undefined[i])
      throw DomainError("metric undefined: Wasserstein distance is not finite at test point " +
                        std::to_string(i));

  if (analytic) {
    rep.total_variance = pairwise_sum(ref_var) / static_cast<double>(n) + population_variance(ref_mean);
  } else {
    std::vector<double> pooled;
    for (const auto& r : reference.references) {
      const auto& s = std::get<EmpiricalReference>(r).sorted;
      pooled.insert(pooled.end(), s.begin(), s.end());
    }
    rep.total_variance = population_variance(pooled);
  }
  if (!(rep.total_variance > 0.0) || !std::isfinite(rep.total_variance))
    throw DomainError("metric undefined: total response variance is zero");

  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = rep.distances[i] * rep.distances[i];
  rep.eps_w = pairwise_sum(sq) / static_cast<double>(n) / rep.total_variance;

  rep.nmse_mean = kNaN;
  rep.nmse_var = kNaN;
  const bool moments_ok = analytic && n >= 2 &&
                          std::none_of(pred_mean.begin(), pred_mean.end(), [](double v) { return std::isnan(v); });
  if (moments_ok) {
    try {
      rep.nmse_mean = nmse(pred_mean, ref_mean);
      rep.nmse_var = nmse(pred_var, ref_var);
    } catch (const DomainError&) {
      // Constant reference moments: NMSE stays undefined.
    }
  }
  return rep;
}

double nmse(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size()) throw ConfigError("nmse: length mismatch");
  if (truth.size() < 2) throw ConfigError("nmse needs at least two points");
  const double m = pairwise_sum(truth) / static_cast<double>(truth.size());
  std::vector<double> num(truth.size()), den(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    num[i] = (predicted[i] - truth[i]) * (predicted[i] - truth[i]);
    den[i] = (truth[i] - m) * (truth[i] - m);
  }
  const double d = pairwise_sum(den);
  if (!(d > 0.0)) throw DomainError("metric undefined: truth is constant");
  return pairwise_sum(num) / d;
}

}  // namespace glam
