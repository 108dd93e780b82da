#include "glam/gld.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "glam/error.hpp"

namespace glam {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Largest |logit(u)| the root finder explores; far beyond any double-precision
// probability, but ln(u) stays exact in logit space.
constexpr double kMaxLogit = 1e7;

// Shape magnitude below which the closed-form variance is interpolated
// across zero; the Beta-function expression cancels catastrophically there.
constexpr double kMomentShapeGap = 1e-4;

struct LogProbs {
  double log_u;
  double log_1mu;
};

LogProbs log_probs(double t) {
  if (t > 0.0) {
    double log_u = -std::log1p(std::exp(-t));
    return {log_u, log_u - t};
  }
  double log_1mu = -std::log1p(std::exp(t));
  return {t + log_1mu, log_1mu};
}

// (e^{lL} - 1)/l evaluated from L = ln(u).
double box_cox_log(double log_u, double l) {
  if (std::abs(l) < kShapeLimit) return log_u;
  return std::expm1(l * log_u) / l;
}

// d/dl of (u^l - 1)/l, written as L^2 * phi(l L) with
// phi(z) = (z e^z - e^z + 1) / z^2.
double box_cox_dshape(double log_u, double l) {
  if (std::isinf(log_u)) {
    // u = 0: finite only for l > 0, where (u^l - 1)/l = -1/l.
    return l > 0.0 ? 1.0 / (l * l) : -kInf;
  }
  const double z = l * log_u;
  double phi;
  if (std::abs(z) < 1e-3) {
    phi = 0.5 + z * (1.0 / 3.0 + z * (1.0 / 8.0 + z * (1.0 / 30.0)));
  } else {
    phi = (z * std::exp(z) - std::expm1(z)) / (z * z);
  }
  return log_u * log_u * phi;
}

double quantile_from_logs(const LogProbs& lp, const GldParams& p) {
  return p.lambda1 +
         (box_cox_log(lp.log_u, p.lambda3) - box_cox_log(lp.log_1mu, p.lambda4)) /
             p.lambda2;
}

// dQ/dt with t = logit(u): (u^l3 (1-u) + (1-u)^l4 u) / l2.
double quantile_dlogit(const LogProbs& lp, const GldParams& p) {
  return (std::exp(p.lambda3 * lp.log_u + lp.log_1mu) +
          std::exp(p.lambda4 * lp.log_1mu + lp.log_u)) /
         p.lambda2;
}

// ln(u^{l3-1} + (1-u)^{l4-1}) together with the two normalized weights.
struct DensityTerms {
  double log_denominator;
  double left_weight;   // u^{l3-1} / D
  double right_weight;  // (1-u)^{l4-1} / D
};

double power_exponent(double shape, double log_prob) {
  // x^0 = 1 even at x = 0.
  return shape == 1.0 ? 0.0 : (shape - 1.0) * log_prob;
}

DensityTerms density_terms(const LogProbs& lp, const GldParams& p) {
  const double a = power_exponent(p.lambda3, lp.log_u);
  const double b = power_exponent(p.lambda4, lp.log_1mu);
  const double m = std::max(a, b);
  if (std::isinf(m)) {
    if (m > 0) return {kInf, a > b ? 1.0 : 0.0, a > b ? 0.0 : 1.0};
    return {-kInf, 0.5, 0.5};
  }
  const double ea = std::exp(a - m);
  const double eb = std::exp(b - m);
  const double s = ea + eb;
  return {m + std::log(s), ea / s, eb / s};
}

double variance_closed_form(double a, double b) {
  const double d1 = 1.0 / (a * (a + 1.0)) - 1.0 / (b * (b + 1.0));
  const double d2 = 1.0 / (a * a * (2.0 * a + 1.0)) -
                    2.0 * std::beta(a + 1.0, b + 1.0) / (a * b) +
                    1.0 / (b * b * (2.0 * b + 1.0));
  return d2 - d1 * d1;
}

// Variance at unit scale, linearly interpolated across |shape| < gap.
double unit_variance(double a, double b) {
  if (std::abs(a) < kMomentShapeGap) {
    const double w = (a + kMomentShapeGap) / (2.0 * kMomentShapeGap);
    return (1.0 - w) * unit_variance(-kMomentShapeGap, b) +
           w * unit_variance(kMomentShapeGap, b);
  }
  if (std::abs(b) < kMomentShapeGap) {
    const double w = (b + kMomentShapeGap) / (2.0 * kMomentShapeGap);
    return (1.0 - w) * unit_variance(a, -kMomentShapeGap) +
           w * unit_variance(a, kMomentShapeGap);
  }
  return variance_closed_form(a, b);
}

}  // namespace

bool is_valid(const GldParams& p) {
  return std::isfinite(p.lambda1) && std::isfinite(p.lambda2) && p.lambda2 > 0.0 &&
         std::isfinite(p.lambda3) && std::isfinite(p.lambda4);
}

void validate(const GldParams& p) {
  if (!is_valid(p)) {
    std::ostringstream os;
    os << "invalid GLD parameters (" << p.lambda1 << ", " << p.lambda2 << ", "
       << p.lambda3 << ", " << p.lambda4 << "): lambda2 must be > 0 and all finite";
    throw DomainError(os.str());
  }
}

double box_cox(double u, double l) { return box_cox_log(std::log(u), l); }

double quantile(double u, const GldParams& p) {
  validate(p);
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("quantile level outside [0, 1]");
  return p.lambda1 + (box_cox(u, p.lambda3) - box_cox(1.0 - u, p.lambda4)) / p.lambda2;
}

double quantile_density(double u, const GldParams& p) {
  validate(p);
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("quantile level outside [0, 1]");
  return (std::pow(u, p.lambda3 - 1.0) + std::pow(1.0 - u, p.lambda4 - 1.0)) / p.lambda2;
}

Support support(const GldParams& p) {
  Support s{-kInf, kInf};
  if (p.lambda3 >= kShapeLimit)
    s.lower = p.lambda1 - 1.0 / (p.lambda2 * p.lambda3);
  if (p.lambda4 >= kShapeLimit)
    s.upper = p.lambda1 + 1.0 / (p.lambda2 * p.lambda4);
  return s;
}

std::optional<LogitRoot> inverse_quantile_logit(double y, const GldParams& p,
                                                const InverseOptions& opts) {
  validate(p);
  if (std::isnan(y)) return std::nullopt;
  const Support s = support(p);
  if (y < s.lower || y > s.upper) return std::nullopt;
  if (y == s.lower) return LogitRoot{-kInf, -kInf, 0.0};
  if (y == s.upper) return LogitRoot{kInf, 0.0, -kInf};

  auto residual = [&](double t) { return quantile_from_logs(log_probs(t), p) - y; };

  // Exact for l3 = l4 = 0 (logistic); a good start otherwise.
  double t = std::clamp(p.lambda2 * (y - p.lambda1), -700.0, 700.0);
  double f = residual(t);
  if (f == 0.0) {
    const LogProbs lp = log_probs(t);
    return LogitRoot{t, lp.log_u, lp.log_1mu};
  }

  // Bracket the root by doubling steps away from the start.
  double lo = t, hi = t, flo = f, fhi = f;
  const double dir = f > 0.0 ? -1.0 : 1.0;
  double step = 1.0;
  for (;;) {
    const double next = std::clamp(t + dir * step, -kMaxLogit, kMaxLogit);
    const double fn = residual(next);
    if (dir < 0) {
      lo = next;
      flo = fn;
    } else {
      hi = next;
      fhi = fn;
    }
    if ((dir < 0 && fn <= 0.0) || (dir > 0 && fn >= 0.0)) break;
    if (std::abs(next) >= kMaxLogit) {
      // Root beyond representable logits; report the extreme.
      const LogProbs lp = log_probs(next);
      return LogitRoot{next, lp.log_u, lp.log_1mu};
    }
    if (dir < 0) {
      hi = next;
      fhi = fn;
    } else {
      lo = next;
      flo = fn;
    }
    t = next;
    step *= 2.0;
  }
  if (flo == 0.0) hi = lo;
  if (fhi == 0.0) lo = hi;

  // Newton in logit space, falling back to bisection outside the bracket.
  t = 0.5 * (lo + hi);
  if (std::isfinite(flo) && std::isfinite(fhi) && fhi != flo) {
    const double secant = lo - flo * (hi - lo) / (fhi - flo);
    if (secant > lo && secant < hi) t = secant;
  }
  for (int it = 0; it < opts.max_iterations; ++it) {
    const LogProbs lp = log_probs(t);
    const double ft = quantile_from_logs(lp, p) - y;
    if (ft == 0.0) return LogitRoot{t, lp.log_u, lp.log_1mu};
    if (ft > 0.0)
      hi = t;
    else
      lo = t;
    const double dq = quantile_dlogit(lp, p);
    double next = t - ft / dq;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    const double tol = opts.tolerance * std::max(1.0, std::abs(next));
    if (std::abs(next - t) <= tol || hi - lo <= tol) {
      const LogProbs ln = log_probs(next);
      return LogitRoot{next, ln.log_u, ln.log_1mu};
    }
    t = next;
  }
  const LogProbs lp = log_probs(t);
  return LogitRoot{t, lp.log_u, lp.log_1mu};
}

std::optional<double> inverse_quantile(double y, const GldParams& p,
                                       const InverseOptions& opts) {
  auto root = inverse_quantile_logit(y, p, opts);
  if (!root) return std::nullopt;
  return std::exp(root->log_u);
}

double log_pdf(double y, const GldParams& p) {
  auto root = inverse_quantile_logit(y, p);
  if (!root) return -kInf;
  const DensityTerms dt = density_terms({root->log_u, root->log_1mu}, p);
  return std::log(p.lambda2) - dt.log_denominator;
}

double pdf(double y, const GldParams& p) { return std::exp(log_pdf(y, p)); }

double log_pdf_with_gradient(double y, const GldParams& p, double grad[4]) {
  auto root = inverse_quantile_logit(y, p);
  if (!root) return -kInf;
  const LogProbs lp{root->log_u, root->log_1mu};
  const DensityTerms dt = density_terms(lp, p);
  const double logf = std::log(p.lambda2) - dt.log_denominator;
  if (!std::isfinite(logf)) return logf;

  // Implicit dependence through u = Q^{-1}(y):  du/dl_k = -f * dQ/dl_k.
  // (d log f / du) * f, assembled from f/u and f/(1-u) to stay finite.
  const double f_over_u = std::exp(logf - lp.log_u);
  const double f_over_v = std::exp(logf - lp.log_1mu);
  const double dlogf_du_times_f =
      -((p.lambda3 - 1.0) * dt.left_weight * f_over_u -
        (p.lambda4 - 1.0) * dt.right_weight * f_over_v);

  const double h3 = box_cox_log(lp.log_u, p.lambda3);
  const double h4 = box_cox_log(lp.log_1mu, p.lambda4);
  const double dq[4] = {
      1.0,
      -(h3 - h4) / (p.lambda2 * p.lambda2),
      box_cox_dshape(lp.log_u, p.lambda3) / p.lambda2,
      -box_cox_dshape(lp.log_1mu, p.lambda4) / p.lambda2,
  };
  const double explicit_part[4] = {
      0.0,
      1.0 / p.lambda2,
      std::isinf(lp.log_u) ? 0.0 : -dt.left_weight * lp.log_u,
      std::isinf(lp.log_1mu) ? 0.0 : -dt.right_weight * lp.log_1mu,
  };
  for (int k = 0; k < 4; ++k) grad[k] = explicit_part[k] - dlogf_du_times_f * dq[k];
  return logf;
}

std::optional<Moments> moments(const GldParams& p) {
  validate(p);
  if (!(p.lambda3 > -0.5 && p.lambda4 > -0.5)) return std::nullopt;
  const double m =
      p.lambda1 - (1.0 / (p.lambda3 + 1.0) - 1.0 / (p.lambda4 + 1.0)) / p.lambda2;
  const double v = std::max(0.0, unit_variance(p.lambda3, p.lambda4)) /
                   (p.lambda2 * p.lambda2);
  return Moments{m, v};
}

std::optional<double> mean(const GldParams& p) {
  auto m = moments(p);
  if (!m) return std::nullopt;
  return m->mean;
}

std::optional<double> variance(const GldParams& p) {
  auto m = moments(p);
  if (!m) return std::nullopt;
  return m->variance;
}

std::vector<double> sample(const GldParams& p, std::size_t n, Rng& rng) {
  validate(p);
  std::vector<double> out(n);
  for (auto& v : out) v = quantile(rng.uniform(), p);
  return out;
}

}  // namespace glam
