#include "kls/decay.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "kls/error.hpp"
#include "kls/spectral.hpp"

namespace kls {

FitRange default_fit_range(std::size_t rank, std::size_t grid_size) {
  const std::size_t hi = std::min(rank * 4 / 5, std::max<std::size_t>(grid_size / 10, 9));
  return {5, hi};
}

DecayFit fit_decay(std::span<const double> mu, std::optional<FitRange> range,
                   std::optional<std::size_t> grid_size) {
  const FitRange fr = range ? *range : default_fit_range(mu.size(), grid_size.value_or(mu.size()));
  const auto [lo, hi] = fr;
  if (lo < 1 || hi > mu.size() || hi < lo || hi - lo + 1 < 5)
    fail(Errc::invalid_argument, "fit_decay: fit range needs at least 5 indices within the rank");

  std::vector<double> x, y;
  for (std::size_t i = lo; i <= hi; ++i) {
    if (!(mu[i - 1] > 0.0)) continue;
    x.push_back(std::log(static_cast<double>(i)));
    y.push_back(std::log(mu[i - 1]));
  }
  if (x.size() < 5) fail(Errc::invalid_argument, "fit_decay: fewer than 5 positive eigenvalues");

  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ssr = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - (intercept + slope * x[k]);
    ssr += r * r;
  }
  const double se = std::sqrt(ssr / (n - 2.0) / sxx);

  DecayFit fit;
  fit.alpha_hat = -slope;
  fit.log_c_hat = intercept;
  fit.fit_lo = lo;
  fit.fit_hi = hi;
  fit.rms_residual = std::sqrt(ssr / n);
  fit.alpha_ci_low = fit.alpha_hat - 2.0 * se;
  fit.alpha_ci_high = fit.alpha_hat + 2.0 * se;
  return fit;
}

DecayFit fit_decay(const SpectralDecomposition& dec, std::optional<FitRange> range) {
  return fit_decay(dec.mu(), range, dec.grid().size());
}

}  // namespace kls
