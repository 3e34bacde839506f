#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kls/decay.hpp"
#include "kls/kernels.hpp"
#include "kls/sampling.hpp"
#include "kls/spectral.hpp"

namespace kls {

/// L2(nu), or the power norm of [H]^(1-beta) with weights mu_i^(beta-1).
struct NormSpec {
  enum class Kind { l2, power } kind = Kind::l2;
  double beta = 1.0;

  static NormSpec l2() { return {Kind::l2, 1.0}; }
  static NormSpec power(double beta);

  std::string tag() const;
};

/// Weights w_i such that ||sum_i z_i e_i||^2 = sum_i w_i z_i^2 in `norm`.
std::vector<double> norm_weights(std::span<const double> mu, const NormSpec& norm);

/// Exact expected squared tail: sum_{i > m} mu_i (L2) or sum_{i > m} mu_i^beta.
std::vector<double> predicted_tails(std::span<const double> mu, const NormSpec& norm,
                                    std::span<const std::size_t> truncations);

struct TruncationReport {
  std::vector<std::size_t> truncations;
  std::vector<double> empirical_mse;
  std::vector<double> empirical_stderr;
  std::vector<double> predicted_tail;
  std::size_t replicates = 0;
  NormSpec norm;
};

struct McOptions {
  unsigned threads = 1;
};

TruncationReport truncation_error_curve(const SpectralDecomposition& dec,
                                        const CoefficientLaw& law, const NormSpec& norm,
                                        std::span<const std::size_t> truncations,
                                        std::size_t replicates, std::uint64_t seed,
                                        const McOptions& opts = {});

/// k(t,t) - sum_{j <= m} mu_j e_j(t)^2, the variance of the rank-m
/// truncation error at t.
double pointwise_variance_residual(const SpectralDecomposition& dec, const KernelSpec& spec,
                                   std::size_t m, double t);

struct SmoothnessCertificate {
  double m_hat = 0.0;  // Sobolev order alpha_hat d / 2
  int d = 1;
  bool empty = true;
  double range_low = 0.0;   // open interval (0, m_hat - d/2)
  double range_high = 0.0;
  std::string basis;
};

SmoothnessCertificate smoothness_certificate(const DecayFit& fit, int d);

struct SmallBallReport {
  double beta = 1.0;
  std::vector<double> epsilons;
  std::vector<double> survival;
  std::vector<bool> used;  // false where the estimate is 0 or 1
  double fitted_exponent = 0.0;
  double predicted_exponent = 0.0;
  std::size_t replicates = 0;
};

struct SmallBallOptions {
  unsigned threads = 1;
  /// alpha_hat is lowered by this much before testing alpha beta > 1.
  double hypothesis_margin = 0.1;
};

SmallBallReport small_ball_estimate(const SpectralDecomposition& dec, const DecayFit& fit,
                                    double beta, std::span<const double> epsilons,
                                    std::size_t replicates, std::uint64_t seed,
                                    const CoefficientLaw& law = CoefficientLaw::gaussian(),
                                    const SmallBallOptions& opts = {});

struct DichotomyReport {
  double converged_fraction = 0.0;
  std::vector<double> mean_partial_sums;  // mean of S_m, m = 1..rank
  std::size_t replicates = 0;
};

struct DichotomyOptions {
  unsigned threads = 1;
  double window = 0.1;      // compare S_r with S_{(1 - window) r}
  double threshold = 0.01;  // converged when the increment < threshold S_r
};

/// S_m = sum_{i <= m} mu_i^(beta-1) z_i^2 per replicate.
DichotomyReport dichotomy_probe(const SpectralDecomposition& dec, const CoefficientLaw& law,
                                double beta, std::size_t replicates, std::uint64_t seed,
                                const DichotomyOptions& opts = {});

}  // namespace kls
