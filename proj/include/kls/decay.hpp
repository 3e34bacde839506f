#pragma once

#include <optional>
#include <span>
#include <utility>

namespace kls {

class SpectralDecomposition;

/// Least-squares fit of log mu_i = log_c - alpha log i over a 1-based,
/// inclusive index range.
struct DecayFit {
  double alpha_hat = 0.0;
  double log_c_hat = 0.0;
  std::size_t fit_lo = 0;
  std::size_t fit_hi = 0;
  double rms_residual = 0.0;
  double alpha_ci_low = 0.0;   // alpha_hat - 2 se(slope)
  double alpha_ci_high = 0.0;  // alpha_hat + 2 se(slope)
};

using FitRange = std::pair<std::size_t, std::size_t>;

/// [5, min(floor(0.8 rank), max(grid_size / 10, 9))]: skips the leading
/// pre-asymptotic modes and the grid-polluted tail.
FitRange default_fit_range(std::size_t rank, std::size_t grid_size);

DecayFit fit_decay(std::span<const double> mu, std::optional<FitRange> range = std::nullopt,
                   std::optional<std::size_t> grid_size = std::nullopt);
DecayFit fit_decay(const SpectralDecomposition& dec,
                   std::optional<FitRange> range = std::nullopt);

}  // namespace kls
