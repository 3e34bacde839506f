#include "kls/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "kls/error.hpp"
#include "kls/parallel.hpp"

namespace kls {

namespace {

constexpr std::size_t kBlock = 64;

std::string fmt_g(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// sum_i w_i z_i^2 over i >= m for every m, from the back.
void suffix_sums(std::span<const double> w, std::span<const double> z, std::vector<double>& out) {
  out.assign(z.size() + 1, 0.0);
  for (std::size_t i = z.size(); i-- > 0;) out[i] = out[i + 1] + w[i] * z[i] * z[i];
}

}  // namespace

NormSpec NormSpec::power(double beta) {
  if (!(beta > 0.0 && beta <= 1.0))
    fail(Errc::invalid_argument, "power norm needs beta in (0, 1]");
  return {Kind::power, beta};
}

std::string NormSpec::tag() const {
  return kind == Kind::l2 ? std::string("L2") : "power(1-beta), beta=" + fmt_g(beta, 17);
}

std::vector<double> norm_weights(std::span<const double> mu, const NormSpec& norm) {
  std::vector<double> w(mu.size(), 1.0);
  if (norm.kind == NormSpec::Kind::power) {
    for (std::size_t i = 0; i < mu.size(); ++i) {
      w[i] = std::pow(mu[i], norm.beta - 1.0);
      if (!std::isfinite(w[i]))
        fail(Errc::numeric_error, "power-norm weight overflow at i = " + std::to_string(i + 1));
    }
  }
  return w;
}

std::vector<double> predicted_tails(std::span<const double> mu, const NormSpec& norm,
                                    std::span<const std::size_t> truncations) {
  std::vector<double> term(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    term[i] = norm.kind == NormSpec::Kind::l2 ? mu[i] : std::pow(mu[i], norm.beta);
  std::vector<double> suffix(mu.size() + 1, 0.0);
  for (std::size_t i = mu.size(); i-- > 0;) suffix[i] = suffix[i + 1] + term[i];
  std::vector<double> out;
  out.reserve(truncations.size());
  for (std::size_t m : truncations) {
    if (m > mu.size()) fail(Errc::invalid_argument, "truncation exceeds rank");
    out.push_back(suffix[m]);
  }
  return out;
}

TruncationReport truncation_error_curve(const SpectralDecomposition& dec,
                                        const CoefficientLaw& law, const NormSpec& norm,
                                        std::span<const std::size_t> truncations,
                                        std::size_t replicates, std::uint64_t seed,
                                        const McOptions& opts) {
  validate(law);
  if (replicates < 100) fail(Errc::invalid_argument, "truncation_error_curve: need R >= 100");
  TruncationReport rep;
  rep.truncations.assign(truncations.begin(), truncations.end());
  rep.predicted_tail = predicted_tails(dec.mu(), norm, truncations);
  rep.replicates = replicates;
  rep.norm = norm;

  const auto w = norm_weights(dec.mu(), norm);
  const std::size_t nt = truncations.size();
  std::vector<double> tails(replicates * nt);
  parallel_blocks(replicates, kBlock, opts.threads, [&](std::size_t, std::size_t b, std::size_t e) {
    std::vector<double> suffix;
    for (std::size_t r = b; r < e; ++r) {
      RandomStream stream(seed, r);
      const auto z = sample_coefficients(dec, law, stream);
      suffix_sums(w, z.z, suffix);
      for (std::size_t k = 0; k < nt; ++k) tails[r * nt + k] = suffix[truncations[k]];
    }
  });

  const double rr = static_cast<double>(replicates);
  rep.empirical_mse.assign(nt, 0.0);
  rep.empirical_stderr.assign(nt, 0.0);
  for (std::size_t k = 0; k < nt; ++k) {
    double mean = 0.0;
    for (std::size_t r = 0; r < replicates; ++r) mean += tails[r * nt + k];
    mean /= rr;
    double var = 0.0;
    for (std::size_t r = 0; r < replicates; ++r) {
      const double d = tails[r * nt + k] - mean;
      var += d * d;
    }
    var /= rr - 1.0;
    rep.empirical_mse[k] = mean;
    rep.empirical_stderr[k] = std::sqrt(var / rr);
  }
  return rep;
}

double pointwise_variance_residual(const SpectralDecomposition& dec, const KernelSpec& spec,
                                   std::size_t m, double t) {
  if (m > dec.rank()) fail(Errc::invalid_argument, "pointwise_variance_residual: m exceeds rank");
  const double k = eval(spec, t, t);
  if (m == 0) return k;
  const auto e = efuns_at(dec, &spec, t);
  double s = 0.0;
  for (std::size_t j = 0; j < m; ++j) s += dec.mu()[j] * e[j] * e[j];
  return k - s;
}

SmoothnessCertificate smoothness_certificate(const DecayFit& fit, int d) {
  if (d < 1) fail(Errc::invalid_argument, "smoothness_certificate: d must be positive");
  SmoothnessCertificate cert;
  cert.d = d;
  cert.m_hat = fit.alpha_hat * d / 2.0;
  const double hi = cert.m_hat - d / 2.0;
  cert.empty = !(hi > 0.0);
  cert.range_high = cert.empty ? 0.0 : hi;
  cert.basis = "mu_i ~ i^-" + fmt_g(fit.alpha_hat) + " (fit over i in [" +
               std::to_string(fit.fit_lo) + ", " + std::to_string(fit.fit_hi) +
               "]) <=> entropy numbers of H -> L2 ~ i^-m/d, so H embeds in W^m with m = " +
               fmt_g(cert.m_hat) + ", d = " + std::to_string(d) + "; ";
  if (cert.empty)
    cert.basis += "m <= d/2: no Besov order certified";
  else
    cert.basis += "paths lie in B^s_{2,2}(T) a.s. for 0 < s < m - d/2 = " + fmt_g(hi) +
                  "; the endpoint s = m - d/2 is excluded (sharp for Gaussian processes)";
  return cert;
}

SmallBallReport small_ball_estimate(const SpectralDecomposition& dec, const DecayFit& fit,
                                    double beta, std::span<const double> epsilons,
                                    std::size_t replicates, std::uint64_t seed,
                                    const CoefficientLaw& law, const SmallBallOptions& opts) {
  validate(law);
  if (!(beta > 0.0 && beta <= 1.0))
    fail(Errc::invalid_argument, "small_ball_estimate: beta must lie in (0, 1]");
  if ((fit.alpha_hat - opts.hypothesis_margin) * beta <= 1.0)
    fail(Errc::hypothesis_violated,
         "small-ball exponent needs alpha beta > 1; got alpha_hat = " + fmt_g(fit.alpha_hat) +
             ", beta = " + fmt_g(beta) + " (margin " + fmt_g(opts.hypothesis_margin) + ")");
  if (replicates < 10000) fail(Errc::invalid_argument, "small_ball_estimate: need R >= 1e4");
  if (epsilons.size() < 4) fail(Errc::invalid_argument, "small_ball_estimate: need >= 4 epsilons");
  const auto [emin, emax] = std::minmax_element(epsilons.begin(), epsilons.end());
  if (!(*emin > 0.0) || !std::isfinite(*emax))
    fail(Errc::invalid_argument, "small_ball_estimate: epsilons must be positive");
  if (*emax < 4.0 * *emin)
    fail(Errc::invalid_argument, "small_ball_estimate: epsilons must span a factor of 4");

  const auto w = norm_weights(dec.mu(), NormSpec::power(beta));
  std::vector<double> sq_norms(replicates);
  parallel_blocks(replicates, kBlock, opts.threads, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      RandomStream stream(seed, r);
      const auto z = sample_coefficients(dec, law, stream);
      double s = 0.0;
      for (std::size_t i = 0; i < z.z.size(); ++i) s += w[i] * z.z[i] * z.z[i];
      sq_norms[r] = s;
    }
  });
  std::sort(sq_norms.begin(), sq_norms.end());

  SmallBallReport rep;
  rep.beta = beta;
  rep.replicates = replicates;
  rep.epsilons.assign(epsilons.begin(), epsilons.end());
  rep.predicted_exponent = 2.0 / (fit.alpha_hat * beta - 1.0);
  std::vector<double> x, y;
  for (double eps : epsilons) {
    const auto count = static_cast<std::size_t>(
        std::upper_bound(sq_norms.begin(), sq_norms.end(), eps * eps) - sq_norms.begin());
    const double p = static_cast<double>(count) / static_cast<double>(replicates);
    const bool usable = count > 0 && count < replicates;
    rep.survival.push_back(p);
    rep.used.push_back(usable);
    if (usable) {
      x.push_back(std::log(eps));
      y.push_back(std::log(-std::log(p)));
    }
  }
  if (x.size() < 3)
    fail(Errc::insufficient_data, "small_ball_estimate: fewer than 3 epsilons with 0 < P < 1");
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  rep.fitted_exponent = -sxy / sxx;
  return rep;
}

DichotomyReport dichotomy_probe(const SpectralDecomposition& dec, const CoefficientLaw& law,
                                double beta, std::size_t replicates, std::uint64_t seed,
                                const DichotomyOptions& opts) {
  validate(law);
  if (!(beta > 0.0 && beta <= 1.0))
    fail(Errc::invalid_argument, "dichotomy_probe: beta must lie in (0, 1]");
  if (replicates < 100) fail(Errc::invalid_argument, "dichotomy_probe: need R >= 100");
  if (!(opts.window > 0.0 && opts.window < 1.0) || !(opts.threshold > 0.0))
    fail(Errc::invalid_argument, "dichotomy_probe: bad window or threshold");
  const std::size_t r = dec.rank();
  if (r < 50) fail(Errc::insufficient_rank, "dichotomy_probe: rank must be >= 50");

  const auto w = norm_weights(dec.mu(), NormSpec::power(beta));
  const auto window_start =
      static_cast<std::size_t>(std::floor((1.0 - opts.window) * static_cast<double>(r)));
  const std::size_t blocks = (replicates + kBlock - 1) / kBlock;
  std::vector<std::vector<double>> block_sums(blocks, std::vector<double>(r, 0.0));
  std::vector<std::size_t> block_converged(blocks, 0);

  parallel_blocks(replicates, kBlock, opts.threads,
                  [&](std::size_t blk, std::size_t b, std::size_t e) {
                    auto& sums = block_sums[blk];
                    for (std::size_t rep = b; rep < e; ++rep) {
                      RandomStream stream(seed, rep);
                      const auto z = sample_coefficients(dec, law, stream);
                      double s = 0.0, s_window = 0.0;
                      for (std::size_t i = 0; i < r; ++i) {
                        s += w[i] * z.z[i] * z.z[i];
                        sums[i] += s;
                        if (i + 1 == window_start) s_window = s;
                      }
                      if (s - s_window < opts.threshold * s) ++block_converged[blk];
                    }
                  });

  DichotomyReport out;
  out.replicates = replicates;
  out.mean_partial_sums.assign(r, 0.0);
  std::size_t converged = 0;
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    converged += block_converged[blk];
    for (std::size_t i = 0; i < r; ++i) out.mean_partial_sums[i] += block_sums[blk][i];
  }
  for (double& v : out.mean_partial_sums) v /= static_cast<double>(replicates);
  out.converged_fraction = static_cast<double>(converged) / static_cast<double>(replicates);
  return out;
}

}  // namespace kls
