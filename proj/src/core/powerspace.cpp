#include "kls/powerspace.hpp"

#include <cmath>
#include <limits>

#include "kls/error.hpp"

namespace kls {

PowerExponent::PowerExponent(double value) : value_(value) {
  if (!(value > 0.0 && value <= 1.0))
    fail(Errc::invalid_argument, "power exponent must lie in (0, 1]");
}

CoeffVector fourier_coeffs(std::span<const double> path_vals, const SpectralDecomposition& dec) {
  const Grid& grid = dec.grid();
  if (path_vals.size() != grid.size())
    fail(Errc::invalid_argument, "fourier_coeffs: path length does not match grid");
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::VectorXd wx(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    wx(j) = grid.weights()[sj] * path_vals[sj];
  }
  const Eigen::VectorXd z = dec.efuns() * wx;
  return {std::vector<double>(z.data(), z.data() + z.size())};
}

double power_norm(std::span<const double> z, std::span<const double> mu, PowerExponent gamma) {
  if (z.size() != mu.size())
    fail(Errc::invalid_argument, "power_norm: coefficient length does not match rank");
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double term = std::pow(mu[i], -gamma.value()) * z[i] * z[i];
    if (!std::isfinite(term)) fail(Errc::numeric_error, "power_norm: term overflow");
    s += term;
  }
  if (!std::isfinite(s)) fail(Errc::numeric_error, "power_norm: sum overflow");
  return std::sqrt(s);
}

double power_norm(const CoeffVector& z, const SpectralDecomposition& dec, PowerExponent gamma) {
  return power_norm(z.z, dec.mu(), gamma);
}

double power_kernel(const SpectralDecomposition& dec, const KernelSpec* spec,
                    PowerExponent gamma, double s, double t) {
  const auto es = efuns_at(dec, spec, s);
  const auto et = (s == t) ? es : efuns_at(dec, spec, t);
  double v = 0.0;
  for (std::size_t i = 0; i < es.size(); ++i)
    v += std::pow(dec.mu()[i], gamma.value()) * es[i] * et[i];
  return v;
}

const char* verdict_name(Verdict v) noexcept {
  switch (v) {
    case Verdict::finite: return "finite";
    case Verdict::infinite: return "infinite";
    case Verdict::indeterminate: return "indeterminate";
  }
  return "?";
}

Summability summability(std::span<const double> mu, double beta, const DecayFit& fit) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    fail(Errc::invalid_argument, "summability: beta must be positive");
  Summability out;
  for (double m : mu) out.partial += std::pow(m, beta);

  const double inf = std::numeric_limits<double>::infinity();
  const double ab = fit.alpha_hat * beta;
  const double ab_low = fit.alpha_ci_low * beta;
  const double ab_high = fit.alpha_ci_high * beta;
  if (ab_low <= 1.0 && ab_high > 1.0)
    out.verdict = Verdict::indeterminate;
  else
    out.verdict = ab > 1.0 ? Verdict::finite : Verdict::infinite;

  if (ab > 1.0) {
    // sum_{i>r} C^beta i^-ab lies between the integrals from r+1 and from r.
    const double r = static_cast<double>(mu.size());
    const double cb = std::exp(beta * fit.log_c_hat);
    out.tail_low = cb * std::pow(r + 1.0, 1.0 - ab) / (ab - 1.0);
    out.tail_high = cb * std::pow(r, 1.0 - ab) / (ab - 1.0);
    if (out.verdict == Verdict::indeterminate) out.tail_high = inf;
  } else {
    out.tail_low = out.verdict == Verdict::infinite ? inf : 0.0;
    out.tail_high = inf;
  }
  return out;
}

Summability summability(const SpectralDecomposition& dec, double beta, const DecayFit& fit) {
  return summability(dec.mu(), beta, fit);
}

Summability nuclear_dominance(std::span<const double> mu, double beta, const DecayFit& fit) {
  if (!(beta > 0.0 && beta < 1.0))
    fail(Errc::invalid_argument, "nuclear_dominance: beta must lie in (0, 1)");
  return summability(mu, 1.0 - beta, fit);
}

}  // namespace kls
