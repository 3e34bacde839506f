#include <doctest.h>

#include <cmath>
#include <numeric>

#include "kls/analysis.hpp"
#include "kls/error.hpp"
#include "oracles/oracles.hpp"

using namespace kls;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc{};
}

const SpectralDecomposition& bm512() {
  static const auto dec = decompose(make_brownian_motion(1), build_uniform(0, 1, 512));
  return dec;
}

std::vector<double> synthetic_mu(std::size_t r, double alpha) {
  std::vector<double> mu(r);
  for (std::size_t i = 0; i < r; ++i) mu[i] = std::pow(static_cast<double>(i + 1), -alpha);
  return mu;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  return sxy / sxx;
}

}  // namespace

TEST_CASE("norm weights and predicted tails") {
  const std::vector<double> mu{0.5, 0.25, 0.125};
  CHECK(norm_weights(mu, NormSpec::l2()) == std::vector{1.0, 1.0, 1.0});
  const auto w = norm_weights(mu, NormSpec::power(0.5));
  CHECK(w[2] == doctest::Approx(std::pow(0.125, -0.5)));
  const std::vector<std::size_t> m{0, 1, 3};
  const auto l2 = predicted_tails(mu, NormSpec::l2(), m);
  CHECK(l2[0] == doctest::Approx(0.875));
  CHECK(l2[1] == doctest::Approx(0.375));
  CHECK(l2[2] == 0.0);
  const auto pw = predicted_tails(mu, NormSpec::power(0.5), m);
  CHECK(pw[0] == doctest::Approx(std::sqrt(0.5) + 0.5 + std::sqrt(0.125)));
  CHECK(code_of([] { NormSpec::power(0); }) == Errc::invalid_argument);
  const std::vector<std::size_t> bad{4};
  CHECK(code_of([&] { predicted_tails(mu, NormSpec::l2(), bad); }) == Errc::invalid_argument);
}

TEST_CASE("truncation error curve, L2") {
  const auto& dec = bm512();
  const std::vector<std::size_t> m{0, 5, 10, 50, dec.rank()};
  const auto rep = truncation_error_curve(dec, CoefficientLaw::gaussian(), NormSpec::l2(), m, 10000, 1);
  CHECK(rep.predicted_tail[0] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(rep.predicted_tail[2] == doctest::Approx(oracle::bm_tail(10)).epsilon(1e-3));
  CHECK(rep.predicted_tail[4] == 0.0);
  CHECK(rep.empirical_mse[4] == 0.0);
  for (std::size_t k = 0; k + 1 < m.size(); ++k) {
    CAPTURE(m[k]);
    CHECK(std::abs(rep.empirical_mse[k] - rep.predicted_tail[k]) < 3 * rep.empirical_stderr[k]);
    CHECK(rep.predicted_tail[k + 1] <= rep.predicted_tail[k]);
    CHECK(rep.empirical_mse[k + 1] <= rep.empirical_mse[k]);
  }
  CHECK(code_of([&] { truncation_error_curve(dec, CoefficientLaw::gaussian(), NormSpec::l2(), m, 50, 1); }) ==
        Errc::invalid_argument);
}

TEST_CASE("power-norm tail identity holds for every law at two sample sizes") {
  const auto& dec = bm512();
  const std::vector<std::size_t> m{0, 20};
  const auto norm = NormSpec::power(0.8);
  for (const auto& law : {CoefficientLaw::gaussian(), CoefficientLaw::student_t(9)}) {
    CAPTURE(law.name());
    std::vector<double> se;
    for (std::size_t R : {1000u, 16000u}) {
      const auto rep = truncation_error_curve(dec, law, norm, m, R, 99, {.threads = 2});
      for (std::size_t k = 0; k < m.size(); ++k)
        CHECK(std::abs(rep.empirical_mse[k] - rep.predicted_tail[k]) < 3.5 * rep.empirical_stderr[k]);
      se.push_back(rep.empirical_stderr[0]);
    }
    // Standard error shrinks like R^-1/2: a factor 4 here.
    CHECK(se[0] / se[1] == doctest::Approx(4.0).epsilon(0.25));
  }
  const auto rad = truncation_error_curve(dec, CoefficientLaw::rademacher(), norm, m, 100, 5);
  for (std::size_t k = 0; k < m.size(); ++k)
    CHECK(rad.empirical_mse[k] == doctest::Approx(rad.predicted_tail[k]).epsilon(1e-12));
}

TEST_CASE("predicted power-norm tails follow the Sobolev rate") {
  // mu_i = i^(-2m/d), m = 2, d = 1; power norm with beta -> s = (1 - beta) m.
  const double msob = 2.0, d = 1.0, beta = 0.6, s = (1 - beta) * msob;
  const auto mu = synthetic_mu(200000, 2 * msob / d);
  std::vector<std::size_t> m;
  std::vector<double> x, y;
  for (std::size_t t = 16; t <= 256; t *= 2) m.push_back(t);
  const auto tails = predicted_tails(mu, NormSpec::power(beta), m);
  for (std::size_t k = 0; k < m.size(); ++k) {
    x.push_back(std::log(static_cast<double>(m[k])));
    y.push_back(std::log(tails[k]));
  }
  const double expected = -2 * (msob - s) / d + 1;
  CHECK(slope(x, y) == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("pointwise variance residual") {
  const auto& dec = bm512();
  const auto k = make_brownian_motion(1);
  CHECK(pointwise_variance_residual(dec, k, 0, 0.37) == doctest::Approx(0.37));
  for (std::size_t m : {0u, 5u, 100u}) CHECK(std::abs(pointwise_variance_residual(dec, k, m, 0.0)) < 1e-12);
  const double r = pointwise_variance_residual(dec, k, 20, 0.5);
  CHECK(r == doctest::Approx(oracle::bm_pointwise_tail(20, 0.5)).epsilon(0.03));
  CHECK(r == doctest::Approx(0.0049).epsilon(0.1));
  CHECK(code_of([&] { pointwise_variance_residual(dec, k, dec.rank() + 1, 0.5); }) == Errc::invalid_argument);
}

TEST_CASE("decay fit") {
  const auto mu = synthetic_mu(200, 2.0);
  const auto fit = fit_decay(mu, FitRange{1, 200});
  CHECK(std::abs(fit.alpha_hat - 2.0) < 1e-10);
  CHECK(std::abs(fit.log_c_hat) < 1e-10);
  CHECK(fit.rms_residual < 1e-10);

  // Rescaling shifts only the intercept.
  std::vector<double> scaled(mu);
  for (double& v : scaled) v *= 37.0;
  const auto fs = fit_decay(scaled, FitRange{1, 200});
  CHECK(std::abs(fs.alpha_hat - fit.alpha_hat) < 1e-12);
  CHECK(fs.log_c_hat == doctest::Approx(std::log(37.0)));

  const auto bm = decompose(make_brownian_motion(1), build_uniform(0, 1, 1024));
  CHECK(std::abs(fit_decay(bm, FitRange{5, 100}).alpha_hat - 2.0) < 0.05);
  const auto ou = decompose(make_ornstein_uhlenbeck(1, 1), build_uniform(0, 1, 1024));
  const auto fou = fit_decay(ou);
  CHECK(std::abs(fou.alpha_hat - 2.0) < 0.1);
  CHECK(fou.alpha_ci_low < fou.alpha_hat);
  CHECK(fou.alpha_ci_high > fou.alpha_hat);
  CHECK(default_fit_range(1024, 1024) == FitRange{5, 102});

  CHECK(code_of([&] { fit_decay(mu, FitRange{1, 4}); }) == Errc::invalid_argument);
  CHECK(code_of([&] { fit_decay(mu, FitRange{190, 201}); }) == Errc::invalid_argument);
}

TEST_CASE("smoothness certificate") {
  DecayFit fit;
  fit.alpha_hat = 2.0;
  auto c = smoothness_certificate(fit, 1);
  CHECK(c.m_hat == doctest::Approx(1.0));
  CHECK_FALSE(c.empty);
  CHECK(c.range_low == 0.0);
  CHECK(c.range_high == doctest::Approx(0.5));
  fit.alpha_hat = 4.0;
  CHECK(smoothness_certificate(fit, 1).range_high == doctest::Approx(1.5));
  fit.alpha_hat = 1.0;
  c = smoothness_certificate(fit, 1);
  CHECK(c.m_hat == doctest::Approx(0.5));
  CHECK(c.empty);
  fit.alpha_hat = 3.0;
  CHECK(smoothness_certificate(fit, 2).range_high == doctest::Approx(2.0));
}

TEST_CASE("small ball preconditions") {
  const auto& dec = bm512();
  const auto fit = fit_decay(dec);
  const std::vector<double> eps{0.05, 0.08, 0.12, 0.2, 0.3};
  CHECK(code_of([&] { small_ball_estimate(dec, fit, 0.5, eps, 10000, 1); }) == Errc::hypothesis_violated);
  CHECK(code_of([&] { small_ball_estimate(dec, fit, 1.0, eps, 9999, 1); }) == Errc::invalid_argument);
  const std::vector<double> three{0.05, 0.1, 0.3};
  CHECK(code_of([&] { small_ball_estimate(dec, fit, 1.0, three, 10000, 1); }) == Errc::invalid_argument);
  const std::vector<double> narrow{0.1, 0.15, 0.2, 0.3};
  CHECK(code_of([&] { small_ball_estimate(dec, fit, 1.0, narrow, 10000, 1); }) == Errc::invalid_argument);
  const std::vector<double> huge{10, 20, 40, 80};
  CHECK(code_of([&] { small_ball_estimate(dec, fit, 1.0, huge, 10000, 1); }) == Errc::insufficient_data);

  // At R = 1e4 only radii with P >~ 1e-3 are resolvable.
  const std::vector<double> wide{0.15, 0.2, 0.3, 0.45, 0.6};
  const auto rep = small_ball_estimate(dec, fit, 1.0, wide, 10000, 3);
  CHECK(rep.predicted_exponent == doctest::Approx(2 / (fit.alpha_hat - 1)));
  for (std::size_t k = 0; k + 1 < wide.size(); ++k) CHECK(rep.survival[k] <= rep.survival[k + 1]);
  CHECK(rep.fitted_exponent > 1.2);
  CHECK(rep.fitted_exponent < 2.5);
}

TEST_CASE("dichotomy probe") {
  const auto& dec = bm512();
  const auto rad = dichotomy_probe(dec, CoefficientLaw::rademacher(), 0.6, 100, 1);
  double s = 0;
  for (std::size_t m = 0; m < dec.rank(); ++m) {
    s += std::pow(dec.mu()[m], 0.6);
    CHECK(rad.mean_partial_sums[m] == doctest::Approx(s).epsilon(1e-12));
  }
  CHECK((rad.converged_fraction == 0.0 || rad.converged_fraction == 1.0));

  CHECK(dichotomy_probe(dec, CoefficientLaw::gaussian(), 0.75, 400, 2).converged_fraction >= 0.95);
  CHECK(dichotomy_probe(dec, CoefficientLaw::gaussian(), 0.4, 400, 2).converged_fraction <= 0.05);
  const auto t1 = dichotomy_probe(dec, CoefficientLaw::student_t(8), 0.75, 300, 4);
  const auto t4 = dichotomy_probe(dec, CoefficientLaw::student_t(8), 0.75, 300, 4, {.threads = 4});
  CHECK(t1.mean_partial_sums == t4.mean_partial_sums);
  CHECK(t1.converged_fraction == t4.converged_fraction);

  CHECK(code_of([&] { dichotomy_probe(dec.truncated(49), CoefficientLaw::gaussian(), 0.75, 100, 1); }) ==
        Errc::insufficient_rank);
  CHECK(code_of([&] { dichotomy_probe(dec, CoefficientLaw::gaussian(), 0.75, 99, 1); }) ==
        Errc::invalid_argument);
}
