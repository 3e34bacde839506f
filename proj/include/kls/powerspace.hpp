#pragma once

#include <span>
#include <vector>

#include "kls/decay.hpp"
#include "kls/kernels.hpp"
#include "kls/spectral.hpp"

namespace kls {

/// Exponent of a power space [H]^gamma, restricted to (0, 1].
class PowerExponent {
 public:
  explicit PowerExponent(double value);
  double value() const noexcept { return value_; }

 private:
  double value_;
};

/// KL coefficients aligned with a decomposition's eigenvalues.
struct CoeffVector {
  std::vector<double> z;
};

/// z_i = sum_j w_j x(t_j) e_i(t_j).
CoeffVector fourier_coeffs(std::span<const double> path_vals, const SpectralDecomposition& dec);

/// (sum_i mu_i^-gamma z_i^2)^1/2.
double power_norm(const CoeffVector& z, const SpectralDecomposition& dec, PowerExponent gamma);
double power_norm(std::span<const double> z, std::span<const double> mu, PowerExponent gamma);

/// sum_i mu_i^gamma e_i(s) e_i(t). Off-grid points need the analytic
/// source kernel; pass nullptr to restrict to grid nodes.
double power_kernel(const SpectralDecomposition& dec, const KernelSpec* spec,
                    PowerExponent gamma, double s, double t);

enum class Verdict { finite, infinite, indeterminate };
const char* verdict_name(Verdict v) noexcept;

struct Summability {
  double partial = 0.0;    // sum_{i <= r} mu_i^beta
  double tail_low = 0.0;   // bracket on sum_{i > r} under the fitted power law
  double tail_high = 0.0;
  Verdict verdict = Verdict::indeterminate;
};

/// Decides whether sum_i mu_i^beta converges, using the fitted decay for the
/// unresolved tail.
Summability summability(std::span<const double> mu, double beta, const DecayFit& fit);
Summability summability(const SpectralDecomposition& dec, double beta, const DecayFit& fit);

/// Whether sum_i mu_i^(1-beta) < inf, i.e. whether the kernel is nuclearly
/// dominated by its own beta-power.
Summability nuclear_dominance(std::span<const double> mu, double beta, const DecayFit& fit);

}  // namespace kls
