#include "nbpuf/beta_model.hpp"

#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace nbpuf {
namespace {

using std::numbers::pi;

// Draws from Beta(a, b) through the gamma representation with the standard
// library generators: independent of the quantile code under test.
std::vector<double> gamma_ratio_samples(double a, double b, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  std::vector<double> out;
  out.reserve(n);
  while (out.size() < n) {
    const double x = ga(rng);
    const double y = gb(rng);
    const double p = x / (x + y);
    if (p > 0.0 && p < 1.0) out.push_back(p);
  }
  return out;
}

TEST(BetaParams, RejectsNonPositiveAndNonFinite) {
  EXPECT_THROW(BetaParams(0.0, 1.0), ParameterError);
  EXPECT_THROW(BetaParams(1.0, -2.0), ParameterError);
  EXPECT_THROW(BetaParams(std::nan(""), 1.0), ParameterError);
  EXPECT_THROW(BetaParams(1.0, INFINITY), ParameterError);
  EXPECT_NO_THROW(BetaParams(1e-3, 10.0));
}

TEST(BetaPdf, ClosedForms) {
  EXPECT_NEAR(beta_pdf(0.3, {1, 1}), 1.0, 1e-14);
  EXPECT_NEAR(beta_pdf(0.5, {2, 2}), 1.5, 1e-14);
  EXPECT_NEAR(beta_pdf(0.5, {0.5, 0.5}), 2.0 / pi, 1e-14);
  for (double p : {0.01, 0.2, 0.77, 0.999}) {
    EXPECT_NEAR(beta_pdf(p, {2, 2}), 6 * p * (1 - p), 1e-13);
    EXPECT_NEAR(beta_pdf(p, {0.5, 0.5}), 1.0 / (pi * std::sqrt(p * (1 - p))), 1e-10);
  }
}

TEST(BetaPdf, Endpoints) {
  EXPECT_DOUBLE_EQ(beta_pdf(0.0, {1, 3}), 3.0);
  EXPECT_DOUBLE_EQ(beta_pdf(1.0, {2, 2}), 0.0);
  EXPECT_THROW(beta_pdf(0.0, {0.5, 2}), DomainError);
  EXPECT_THROW(beta_pdf(1.0, {2, 0.5}), DomainError);
  EXPECT_THROW(beta_pdf(-0.1, {2, 2}), DomainError);
  EXPECT_THROW(beta_pdf(1.5, {2, 2}), DomainError);
}

TEST(BetaCdf, ClosedForms) {
  EXPECT_NEAR(beta_cdf(0.25, {1, 1}), 0.25, 1e-15);
  EXPECT_NEAR(beta_cdf(0.5, {0.5, 0.5}), 0.5, 1e-14);
  EXPECT_NEAR(beta_cdf(0.25, {2, 2}), 0.15625, 1e-15);
  EXPECT_EQ(beta_cdf(0.0, {0.003, 0.002}), 0.0);
  EXPECT_EQ(beta_cdf(1.0, {0.003, 0.002}), 1.0);
  EXPECT_THROW(beta_cdf(1.0000001, {1, 1}), DomainError);
}

TEST(BetaCdf, AgreesWithBoostIbeta) {
  const std::vector<double> shapes{1e-3, 3.2e-3, 0.05, 0.5, 1.0, 2.5, 10.0, 80.0};
  const std::vector<double> points{1e-12, 1e-6, 1e-3, 0.05, 0.3, 0.5, 0.7, 0.95, 0.999, 1 - 1e-6};
  for (double a : shapes)
    for (double b : shapes)
      for (double x : points) {
        const double expected = boost::math::ibeta(a, b, x);
        const double got = beta_cdf(x, {a, b});
        EXPECT_NEAR(got, expected, 1e-13 + 1e-11 * expected) << "a=" << a << " b=" << b << " x=" << x;
        const double sf_expected = boost::math::ibetac(a, b, x);
        EXPECT_NEAR(beta_sf(x, {a, b}), sf_expected, 1e-13 + 1e-11 * sf_expected) << "a=" << a << " b=" << b << " x=" << x;
      }
}

TEST(BetaCdf, LargeShapesAgreeWithBoost) {
  // binomial tails use shapes up to ~1e6
  for (auto [a, b, x] : {std::tuple{5e5, 5e5, 0.4995}, {1e6, 3.0, 0.999998}, {2e3, 7e5, 0.003}, {12.0, 40.0, 0.2}}) {
    const double expected = boost::math::ibeta(a, b, x);
    EXPECT_NEAR(regularized_incomplete_beta(x, a, b), expected, 1e-12 + 1e-8 * expected) << a << " " << b << " " << x;
  }
}

TEST(BetaCdf, MonotoneInP) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const BetaParams& prm : {BetaParams{0.0032, 0.0028}, BetaParams{0.5, 3}, BetaParams{8, 8}}) {
    for (int i = 0; i < 2000; ++i) {
      double p1 = u(rng), p2 = u(rng);
      if (p1 > p2) std::swap(p1, p2);
      if (p1 == p2) continue;
      EXPECT_LT(beta_cdf(p1, prm), beta_cdf(p2, prm));
    }
  }
}

TEST(BetaCdf, SymmetricShapes) {
  for (double s : {1e-3, 0.0032, 0.3, 1.0, 4.0, 10.0}) {
    const BetaParams prm{s, s};
    EXPECT_NEAR(beta_cdf(0.5, prm), 0.5, 1e-12) << s;
    for (double p : {0x1p-17, 0.125, 0.375}) {  // 1 - p exact
      EXPECT_NEAR(beta_pdf(p, prm), beta_pdf(1 - p, prm), 1e-12 * beta_pdf(p, prm));
    }
  }
}

TEST(BetaPdf, IntegratesToOne) {
  // quadrature over [eps, 1 - eps] plus the analytic tail mass outside it
  const double eps = 1e-6;
  boost::math::quadrature::tanh_sinh<double> integrator;
  for (double a : {0.0032, 0.05, 0.5, 1.0, 3.0})
    for (double b : {0.0028, 0.2, 1.0, 6.0}) {
      const BetaParams prm{a, b};
      const double body = integrator.integrate([&](double p) { return beta_pdf(p, prm); }, eps, 1 - eps);
      const double tails = beta_cdf(eps, prm) + (1.0 - beta_cdf(1 - eps, prm));
      EXPECT_NEAR(body + tails, 1.0, 1e-6) << "a=" << a << " b=" << b;
    }
}

TEST(BetaQuantile, ClosedForms) {
  EXPECT_NEAR(beta_quantile(0.75, {1, 1}), 0.75, 1e-12);
  EXPECT_NEAR(beta_quantile(0.25, {0.5, 0.5}), std::pow(std::sin(pi / 8), 2), 1e-12);
  EXPECT_NEAR(beta_quantile(0.15625, {2, 2}), 0.25, 1e-12);
  EXPECT_EQ(beta_quantile(0.0, {2, 2}), 0.0);
  EXPECT_EQ(beta_quantile(1.0, {2, 2}), 1.0);
  EXPECT_THROW(beta_quantile(-0.01, {2, 2}), DomainError);
}

TEST(BetaQuantile, AgreesWithBoostIbetaInv) {
  for (double a : {0.0032, 0.05, 0.7, 3.0, 10.0})
    for (double b : {0.0028, 0.4, 1.0, 9.0})
      for (double q : {0.001, 0.2, 0.5, 0.8, 0.999}) {
        const double expected = boost::math::ibeta_inv(a, b, q);
        if (expected < 1e-300 || 1 - expected < 1e-15) continue;  // outside double resolution
        const double got = beta_quantile(q, {a, b});
        EXPECT_NEAR(got, expected, 1e-9 * std::min(expected, 1 - expected) + 1e-15) << a << " " << b << " " << q;
      }
}

TEST(BetaQuantile, RoundTripIncludingSubnormalTails) {
  // Tiny shapes put low quantiles far below the double range; the point form
  // still round-trips exactly.
  for (double a : {1e-3, 0.0032, 0.1, 1.0, 10.0})
    for (double b : {1e-3, 0.0028, 0.1, 1.0, 10.0})
      for (double q : {1e-6, 1e-3, 0.01, 0.3, 0.5, 0.9, 0.999, 1 - 1e-6}) {
        const BetaParams prm{a, b};
        const UnitPoint p = beta_quantile_point(q, prm);
        EXPECT_NEAR(beta_cdf(p, prm), q, 1e-12) << a << " " << b << " " << q;
      }
}

TEST(UnitPoint, ValueRecoversBothTails) {
  EXPECT_DOUBLE_EQ(UnitPoint::from_value(0.25).value(), 0.25);
  EXPECT_DOUBLE_EQ(UnitPoint::from_value(1 - 1e-9).value(), 1 - 1e-9);
  EXPECT_EQ(UnitPoint::from_log_lower(-5000.0).value(), 0.0);
  EXPECT_NEAR(UnitPoint::from_log_upper(std::log(1e-12)).value(), 1 - 1e-12, 1e-16);
}

TEST(FitMoments, ExactUniformMoments) {
  const double d = std::sqrt(1.0 / 12.0);
  const std::vector<double> s{0.5 - d, 0.5 + d};
  const FitReport f = fit_moments(s);
  EXPECT_NEAR(f.params.alpha(), 1.0, 1e-12);
  EXPECT_NEAR(f.params.beta(), 1.0, 1e-12);
  EXPECT_EQ(f.method, FitMethod::Moments);
  EXPECT_EQ(f.sample_count, 2u);
}

TEST(FitMoments, Errors) {
  EXPECT_THROW(fit_moments(std::vector<double>{0.4, 0.4, 0.4}), DegenerateSampleError);
  EXPECT_THROW(fit_moments(std::vector<double>{0.4}), DegenerateSampleError);
  EXPECT_THROW(fit_moments(std::vector<double>{0.0, 0.4}), DomainError);
  EXPECT_THROW(fit_moments(std::vector<double>{0.4, 1.0}), DomainError);
}

TEST(FitMoments, RecoversBeta25) {
  const auto s = gamma_ratio_samples(2.0, 5.0, 1'000'000, 11);
  const FitReport f = fit_moments(s);
  EXPECT_NEAR(f.params.alpha(), 2.0, 0.05 * 2.0);
  EXPECT_NEAR(f.params.beta(), 5.0, 0.05 * 5.0);
}

TEST(FitMle, RecoversBeta25AndSatisfiesScore) {
  const auto s = gamma_ratio_samples(2.0, 5.0, 1'000'000, 12);
  const FitReport f = fit_mle(s);
  ASSERT_TRUE(f.converged);
  EXPECT_NEAR(f.params.alpha(), 2.0, 0.03 * 2.0);
  EXPECT_NEAR(f.params.beta(), 5.0, 0.03 * 5.0);
  ASSERT_TRUE(f.log_likelihood.has_value());

  // independent check of the score equations at the reported optimum
  double s1 = 0, s2 = 0;
  for (double x : s) {
    s1 += std::log(x);
    s2 += std::log1p(-x);
  }
  s1 /= static_cast<double>(s.size());
  s2 /= static_cast<double>(s.size());
  const double a = f.params.alpha(), b = f.params.beta();
  using boost::math::digamma;
  EXPECT_LT(std::hypot(s1 - digamma(a) + digamma(a + b), s2 - digamma(b) + digamma(a + b)), 1e-9);
}

TEST(FitMle, UniformGrid) {
  const int n = 100000;
  std::vector<double> s;
  for (int i = 1; i <= n; ++i) s.push_back(static_cast<double>(i) / (n + 1));
  const FitReport f = fit_mle(s);
  EXPECT_TRUE(f.converged);
  EXPECT_NEAR(f.params.alpha(), 1.0, 0.02);
  EXPECT_NEAR(f.params.beta(), 1.0, 0.02);
}

TEST(FitMle, UShapedSamples) {
  // shapes small enough to be U-shaped, large enough that doubles hold the samples
  const auto s = gamma_ratio_samples(0.4, 0.3, 200000, 5);
  const FitReport f = fit_mle(s);
  EXPECT_TRUE(f.converged);
  EXPECT_NEAR(f.params.alpha(), 0.4, 0.03 * 0.4);
  EXPECT_NEAR(f.params.beta(), 0.3, 0.03 * 0.3);
}

TEST(FitMle, LikelihoodIsMaximal) {
  const auto s = gamma_ratio_samples(0.7, 1.8, 5000, 99);
  const FitReport f = fit_mle(s);
  auto ll = [&](double a, double b) {
    double t = 0;
    for (double x : s) t += (a - 1) * std::log(x) + (b - 1) * std::log1p(-x);
    return t - static_cast<double>(s.size()) * detail::log_beta(a, b);
  };
  const double best = ll(f.params.alpha(), f.params.beta());
  EXPECT_NEAR(*f.log_likelihood, best, 1e-6 * std::fabs(best));
  for (double da : {-0.01, 0.01})
    for (double db : {-0.01, 0.01}) EXPECT_LT(ll(f.params.alpha() + da, f.params.beta() + db), best);
}

TEST(FitMle, DegenerateAndDomainErrors) {
  EXPECT_THROW(fit_mle(std::vector<double>{0.4, 0.4, 0.4}), DegenerateSampleError);
  EXPECT_THROW(fit_mle(std::vector<double>{0.0, 0.4, 0.5}), DomainError);
}

}  // namespace
}  // namespace nbpuf
