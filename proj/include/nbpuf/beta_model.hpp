#ifndef NBPUF_BETA_MODEL_HPP
#define NBPUF_BETA_MODEL_HPP

/**
 * @file beta_model.hpp
 * @brief Beta distribution numerics for one-probability populations.
 *
 * Density, CDF (regularized incomplete beta), quantile inversion and
 * parameter estimation for Beta(alpha, beta). PUF populations are strongly
 * U-shaped (shapes of order 1e-3), so everything is evaluated in log space
 * and points of [0, 1] can be carried as a UnitPoint holding log(p) and
 * log(1 - p). That keeps both tails resolvable even when p itself would
 * underflow a double.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "nbpuf/error.hpp"

namespace nbpuf {

/// Shape parameters of a beta distribution. Both strictly positive and finite.
class BetaParams {
 public:
  BetaParams(double alpha, double beta) : alpha_(alpha), beta_(beta) {
    if (!(std::isfinite(alpha) && alpha > 0.0) || !(std::isfinite(beta) && beta > 0.0)) {
      throw ParameterError("beta shape parameters must be positive and finite (alpha=" +
                           std::to_string(alpha) + ", beta=" + std::to_string(beta) + ")");
    }
  }

  [[nodiscard]] double alpha() const noexcept { return alpha_; }
  [[nodiscard]] double beta() const noexcept { return beta_; }
  [[nodiscard]] double mean() const noexcept { return alpha_ / (alpha_ + beta_); }

  friend bool operator==(const BetaParams&, const BetaParams&) = default;

 private:
  double alpha_;
  double beta_;
};

enum class FitMethod { Moments, MaxLikelihood };

inline const char* to_string(FitMethod m) noexcept {
  return m == FitMethod::Moments ? "moments" : "mle";
}

struct FitReport {
  BetaParams params;
  FitMethod method;
  std::size_t sample_count;
  std::optional<double> log_likelihood;  // total, MaxLikelihood only
  bool converged;
  std::size_t iterations = 0;
};

namespace detail {

/// log(1 - exp(x)) for x <= 0.
inline double log1m_exp(double x) noexcept {
  if (x > -std::numbers::ln2) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

// lgamma(x) minus its Stirling approximation, valid for x >= 10.
inline double stirling_tail(double x) noexcept {
  const double r = 1.0 / x;
  const double r2 = r * r;
  return r * (1.0 / 12 - r2 * (1.0 / 360 - r2 * (1.0 / 1260 - r2 * (1.0 / 1680 - r2 / 1188))));
}

inline double log_gamma(double x) { return boost::math::lgamma(x); }

/// log B(a, b). Large arguments are grouped so their lgamma terms do not cancel.
inline double log_beta(double a, double b) {
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  if (hi < 10.0) return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
  const double sum = lo + hi;
  const double corr = stirling_tail(hi) - stirling_tail(sum);
  if (lo < 10.0) {
    // lgamma(hi) - lgamma(hi + lo) via Stirling
    return log_gamma(lo) - (hi - 0.5) * std::log1p(lo / hi) - lo * std::log(sum) + lo + corr;
  }
  return 0.5 * std::log(2.0 * std::numbers::pi) + lo * std::log(lo / sum) + hi * std::log(hi / sum) +
         0.5 * (std::log(sum) - std::log(lo) - std::log(hi)) + stirling_tail(lo) + corr;
}

/// Continued fraction for I_x(a, b) (modified Lentz). Converges quickly for
/// x < (a + 1) / (a + b + 2).
inline double incomplete_beta_cf(double x, double a, double b) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-15;
  const int max_iter = 1000 + static_cast<int>(50.0 * std::sqrt(a + b));
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) return h;
  }
  throw ConvergenceError("incomplete beta continued fraction did not converge (x=" + std::to_string(x) +
                             ", a=" + std::to_string(a) + ", b=" + std::to_string(b) + ")",
                         x, x);
}

}  // namespace detail

/// A point p of [0, 1] stored as (log p, log(1 - p)).
struct UnitPoint {
  double log_lower;
  double log_upper;

  static UnitPoint from_value(double p) { return {std::log(p), std::log1p(-p)}; }
  static UnitPoint from_log_lower(double lp) { return {lp, detail::log1m_exp(lp)}; }
  static UnitPoint from_log_upper(double lq) { return {detail::log1m_exp(lq), lq}; }

  /// p rounded to double; underflows to 0 (or rounds to 1) in the far tails.
  [[nodiscard]] double value() const noexcept {
    return log_lower < log_upper ? std::exp(log_lower) : -std::expm1(log_upper);
  }
  [[nodiscard]] UnitPoint reflected() const noexcept { return {log_upper, log_lower}; }
};

/// log I_x(a, b) and log(1 - I_x(a, b)), each computed without cancellation.
struct TailLogs {
  double log_lower;
  double log_upper;
};

/// Regularized incomplete beta function for arbitrary positive a, b.
inline TailLogs incomplete_beta_tails(UnitPoint x, double a, double b) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  if (x.log_lower == neg_inf) return {neg_inf, 0.0};
  if (x.log_upper == neg_inf) return {0.0, neg_inf};
  const double xv = std::exp(x.log_lower);
  const double yv = std::exp(x.log_upper);
  const double front = a * x.log_lower + b * x.log_upper - detail::log_beta(a, b);
  if (xv < (a + 1.0) / (a + b + 2.0)) {
    const double ll = std::min(0.0, front - std::log(a) + std::log(detail::incomplete_beta_cf(xv, a, b)));
    return {ll, detail::log1m_exp(ll)};
  }
  const double lu = std::min(0.0, front - std::log(b) + std::log(detail::incomplete_beta_cf(yv, b, a)));
  return {detail::log1m_exp(lu), lu};
}

inline double regularized_incomplete_beta(double x, double a, double b) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete beta argument outside [0, 1]: " + std::to_string(x));
  if (!(a > 0.0 && b > 0.0)) throw ParameterError("incomplete beta shapes must be positive");
  return std::exp(incomplete_beta_tails(UnitPoint::from_value(x), a, b).log_lower);
}

/// Beta density. Endpoints where the density diverges (alpha < 1 at 0,
/// beta < 1 at 1) are domain errors.
inline double beta_pdf(double p, const BetaParams& params) {
  const double a = params.alpha();
  const double b = params.beta();
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("density argument outside [0, 1]: " + std::to_string(p));
  if ((p == 0.0 && a < 1.0) || (p == 1.0 && b < 1.0)) {
    throw DomainError("density diverges at endpoint p=" + std::to_string(p));
  }
  const double lb = detail::log_beta(a, b);
  if (p == 0.0) return a == 1.0 ? std::exp(-lb) : 0.0;
  if (p == 1.0) return b == 1.0 ? std::exp(-lb) : 0.0;
  return std::exp((a - 1.0) * std::log(p) + (b - 1.0) * std::log1p(-p) - lb);
}

inline double beta_cdf(UnitPoint p, const BetaParams& params) {
  return std::exp(incomplete_beta_tails(p, params.alpha(), params.beta()).log_lower);
}

inline double beta_cdf(double p, const BetaParams& params) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("CDF argument outside [0, 1]: " + std::to_string(p));
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  return beta_cdf(UnitPoint::from_value(p), params);
}

/// Upper tail 1 - F(p), accurate when F(p) is close to 1.
inline double beta_sf(double p, const BetaParams& params) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("CDF argument outside [0, 1]: " + std::to_string(p));
  if (p == 0.0) return 1.0;
  if (p == 1.0) return 0.0;
  return std::exp(incomplete_beta_tails(UnitPoint::from_value(p), params.alpha(), params.beta()).log_upper);
}

namespace detail {

// Solves log I_{exp(u)}(a, b) = log_target for u <= u_hi, given that the
// left-hand side at u_hi is at least log_target. Newton on the log-log curve
// (near-linear in the power-law tail), bisection whenever Newton leaves the
// bracket.
inline double solve_lower_tail(double log_target, double a, double b, double u_hi) {
  auto log_tail = [a, b](double u) { return incomplete_beta_tails(UnitPoint::from_log_lower(u), a, b).log_lower; };
  const double lb = log_beta(a, b);

  double hi = u_hi;
  if (log_tail(hi) - log_target <= 0.0) return hi;

  // I_x(a, b) ~ x^a / (a B(a, b)) as x -> 0
  const double guess = (log_target + std::log(a) + lb) / a;
  double lo = std::min(guess, hi - 1.0);
  for (double step = 1.0; log_tail(lo) >= log_target; step *= 2.0) {
    lo -= step;
    if (!std::isfinite(lo)) throw ConvergenceError("quantile bracket search diverged", 0.0, std::exp(hi));
  }

  double u = (guess > lo && guess < hi) ? guess : 0.5 * (lo + hi);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (int iter = 0; iter < 400; ++iter) {
    const double lt = log_tail(u);
    const double g = lt - log_target;
    if (g == 0.0) return u;
    if (g < 0.0) {
      lo = u;
    } else {
      hi = u;
    }
    const double log_xf = a * u + (b - 1.0) * log1m_exp(u) - lb;
    const double slope = std::exp(log_xf - lt);
    double next = u - g / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double scale = std::max(1.0, std::fabs(u));
    if (std::fabs(next - u) <= 2.0 * eps * scale || hi - lo <= 2.0 * eps * scale) return next;
    u = next;
  }
  throw ConvergenceError("beta quantile iteration budget exhausted", std::exp(lo), std::exp(hi));
}

}  // namespace detail

/// Quantile as a UnitPoint: resolves targets whose p lies below the double
/// range (tiny shapes push tail quantiles to 1e-1000 and beyond).
inline UnitPoint beta_quantile_point(double q, const BetaParams& params) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level outside [0, 1]: " + std::to_string(q));
  if (q == 0.0) return {neg_inf, 0.0};
  if (q == 1.0) return {0.0, neg_inf};
  const double a = params.alpha();
  const double b = params.beta();
  const double log_sum = std::log(a + b);
  const UnitPoint pivot{std::log(a) - log_sum, std::log(b) - log_sum};
  const TailLogs at_pivot = incomplete_beta_tails(pivot, a, b);

  UnitPoint result{};
  if (std::log(q) <= at_pivot.log_lower) {
    result = UnitPoint::from_log_lower(detail::solve_lower_tail(std::log(q), a, b, pivot.log_lower));
  } else {
    // 1 - F_{a,b}(p) = F_{b,a}(1 - p)
    result = UnitPoint::from_log_upper(detail::solve_lower_tail(std::log1p(-q), b, a, pivot.log_upper));
  }
  const double achieved = beta_cdf(result, params);
  if (!(std::fabs(achieved - q) <= 1e-12)) {
    throw ConvergenceError("beta quantile missed tolerance (q=" + std::to_string(q) +
                               ", F=" + std::to_string(achieved) + ")",
                           result.value(), result.value());
  }
  return result;
}

/// Inverse CDF: p with |F(p) - q| <= 1e-12. quantile(0) = 0, quantile(1) = 1.
inline double beta_quantile(double q, const BetaParams& params) {
  return beta_quantile_point(q, params).value();
}

namespace detail {

inline void check_open_unit_samples(std::span<const double> samples) {
  if (samples.size() < 2) throw DegenerateSampleError("at least 2 samples are required for a beta fit");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double x = samples[i];
    if (!(x > 0.0 && x < 1.0)) {
      throw DomainError("sample " + std::to_string(i) + " = " + std::to_string(x) +
                        " is not strictly inside (0, 1); re-scale before fitting");
    }
  }
}

inline bool all_equal(std::span<const double> samples) {
  return std::all_of(samples.begin(), samples.end(), [first = samples.front()](double x) { return x == first; });
}

struct LogMeans {
  double log_x;
  double log_1mx;
};

inline LogMeans log_means(std::span<const double> samples) {
  double s1 = 0.0;
  double s2 = 0.0;
  for (double x : samples) {
    s1 += std::log(x);
    s2 += std::log1p(-x);
  }
  const double n = static_cast<double>(samples.size());
  return {s1 / n, s2 / n};
}

inline double mean_log_likelihood(const LogMeans& lm, double a, double b) {
  return (a - 1.0) * lm.log_x + (b - 1.0) * lm.log_1mx - log_beta(a, b);
}

}  // namespace detail

/// Method-of-moments fit using the (biased) sample variance.
inline FitReport fit_moments(std::span<const double> samples) {
  detail::check_open_unit_samples(samples);
  if (detail::all_equal(samples)) throw DegenerateSampleError("sample variance is zero");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : samples) var += (x - mean) * (x - mean);
  var /= n;
  if (!(var > 0.0)) throw DegenerateSampleError("sample variance is zero");
  const double c = mean * (1.0 - mean) / var - 1.0;
  if (!(c > 0.0)) throw DegenerateSampleError("sample variance too large for a beta fit (c=" + std::to_string(c) + ")");
  return FitReport{BetaParams(mean * c, (1.0 - mean) * c), FitMethod::Moments, samples.size(), std::nullopt, true, 0};
}

struct MleOptions {
  double gradient_tolerance = 1e-9;
  double min_shape = 1e-6;
  double max_shape = 1e6;
  int max_iterations = 500;
};

/// Maximum-likelihood fit by damped Newton on the score equations
///   psi(a) - psi(a+b) = mean log x,   psi(b) - psi(a+b) = mean log(1-x).
/// The log-likelihood is strictly concave in (a, b), so step halving on the
/// likelihood is enough to keep the iteration ascending. The gradient is that
/// of the per-sample mean log-likelihood.
inline FitReport fit_mle(std::span<const double> samples, const BetaParams& init, const MleOptions& opt = {}) {
  using boost::math::digamma;
  using boost::math::trigamma;
  detail::check_open_unit_samples(samples);
  if (detail::all_equal(samples)) throw DegenerateSampleError("sample variance is zero");
  const detail::LogMeans lm = detail::log_means(samples);
  auto clamp = [&opt](double v) { return std::clamp(v, opt.min_shape, opt.max_shape); };

  double a = clamp(init.alpha());
  double b = clamp(init.beta());
  double ll = detail::mean_log_likelihood(lm, a, b);
  bool converged = false;
  int iter = 0;
  for (; iter < opt.max_iterations; ++iter) {
    const double psi_ab = digamma(a + b);
    const double ga = lm.log_x - digamma(a) + psi_ab;
    const double gb = lm.log_1mx - digamma(b) + psi_ab;
    if (std::hypot(ga, gb) < opt.gradient_tolerance) {
      converged = true;
      break;
    }
    const double t_ab = trigamma(a + b);
    const double haa = t_ab - trigamma(a);
    const double hbb = t_ab - trigamma(b);
    const double hab = t_ab;
    const double det = haa * hbb - hab * hab;
    // Newton direction -H^{-1} g
    double da = -(hbb * ga - hab * gb) / det;
    double db = -(haa * gb - hab * ga) / det;
    if (!(std::isfinite(da) && std::isfinite(db))) break;

    double step = 1.0;
    bool moved = false;
    for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
      const double na = a + step * da;
      const double nb = b + step * db;
      if (!(na > 0.0 && nb > 0.0)) continue;
      const double ca = clamp(na);
      const double cb = clamp(nb);
      const double nll = detail::mean_log_likelihood(lm, ca, cb);
      if (nll >= ll) {
        moved = (ca != a || cb != b);
        a = ca;
        b = cb;
        ll = nll;
        break;
      }
    }
    if (!moved) {
      // Stuck at a clamp bound or at floating-point resolution.
      const double psi = digamma(a + b);
      converged = std::hypot(lm.log_x - digamma(a) + psi, lm.log_1mx - digamma(b) + psi) < opt.gradient_tolerance;
      break;
    }
  }
  return FitReport{BetaParams(a, b),
                   FitMethod::MaxLikelihood,
                   samples.size(),
                   ll * static_cast<double>(samples.size()),
                   converged,
                   static_cast<std::size_t>(iter)};
}

/// MLE seeded from the moment estimate, or from (0.5, 0.5) when moments fail.
inline FitReport fit_mle(std::span<const double> samples) {
  detail::check_open_unit_samples(samples);
  BetaParams init(0.5, 0.5);
  try {
    init = fit_moments(samples).params;
  } catch (const DegenerateSampleError&) {
    // moment condition c <= 0; keep the U-shaped default start
  }
  return fit_mle(samples, init);
}

inline FitReport fit(std::span<const double> samples, FitMethod method) {
  return method == FitMethod::Moments ? fit_moments(samples) : fit_mle(samples);
}

}  // namespace nbpuf

#endif  // NBPUF_BETA_MODEL_HPP
