#include <cstdlib>
#include <cstring>
#include <string>

#include "kls/analysis.hpp"
#include "kls/error.hpp"
#include "kls/kls.h"
#include "kls/powerspace.hpp"
#include "kls/sampling.hpp"
#include "kls/spectral.hpp"

struct kls_grid {
  kls::Grid value;
};
struct kls_kernel {
  kls::KernelSpec value;
};
struct kls_decomposition {
  kls::SpectralDecomposition value;
};

namespace {

thread_local std::string last_error;

kls_status to_status(kls::Errc code) {
  using kls::Errc;
  switch (code) {
    case Errc::invalid_argument: return KLS_ERR_INVALID_ARGUMENT;
    case Errc::invalid_density: return KLS_ERR_INVALID_DENSITY;
    case Errc::degenerate_measure: return KLS_ERR_DEGENERATE_MEASURE;
    case Errc::unsupported_point: return KLS_ERR_UNSUPPORTED_POINT;
    case Errc::grid_mismatch: return KLS_ERR_GRID_MISMATCH;
    case Errc::numeric_error: return KLS_ERR_NUMERIC;
    case Errc::degenerate_kernel: return KLS_ERR_DEGENERATE_KERNEL;
    case Errc::unsupported: return KLS_ERR_UNSUPPORTED;
    case Errc::hypothesis_violated: return KLS_ERR_HYPOTHESIS_VIOLATED;
    case Errc::insufficient_data: return KLS_ERR_INSUFFICIENT_DATA;
    case Errc::insufficient_rank: return KLS_ERR_INSUFFICIENT_RANK;
  }
  return KLS_ERR_INTERNAL;
}

template <class Fn>
kls_status guarded(Fn&& fn) {
  try {
    fn();
    return KLS_OK;
  } catch (const kls::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown exception";
  }
  return KLS_ERR_INTERNAL;
}

void require(bool ok, const char* what) {
  if (!ok) kls::fail(kls::Errc::invalid_argument, what);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

kls::CoefficientLaw to_law(kls_law law) {
  switch (law.kind) {
    case KLS_LAW_GAUSSIAN: return kls::CoefficientLaw::gaussian();
    case KLS_LAW_RADEMACHER: return kls::CoefficientLaw::rademacher();
    case KLS_LAW_STUDENT_T: return kls::CoefficientLaw::student_t(law.dof);
  }
  kls::fail(kls::Errc::invalid_argument, "unknown law kind");
}

kls::DecayFit to_fit(const kls_decay_fit& f) {
  return {f.alpha_hat, f.log_c_hat, f.fit_lo, f.fit_hi, f.rms_residual, f.alpha_ci_low,
          f.alpha_ci_high};
}

kls_grid* new_grid(kls::Grid g) { return new kls_grid{std::move(g)}; }
kls_kernel* new_kernel(kls::KernelSpec k) { return new kls_kernel{std::move(k)}; }
kls_decomposition* new_dec(kls::SpectralDecomposition d) {
  return new kls_decomposition{std::move(d)};
}

}  // namespace

extern "C" {

const char* kls_version(void) { return "1.0.0"; }
const char* kls_last_error(void) { return last_error.c_str(); }

const char* kls_status_name(kls_status status) {
  switch (status) {
    case KLS_OK: return "ok";
    case KLS_ERR_INTERNAL: return "internal-error";
    default: break;
  }
  if (status >= KLS_ERR_INVALID_ARGUMENT && status <= KLS_ERR_INSUFFICIENT_RANK)
    return kls::errc_name(static_cast<kls::Errc>(status));
  return "unknown";
}

void kls_string_free(char* s) { std::free(s); }

void kls_set_warning_callback(kls_warning_fn fn, void* user) {
  if (fn == nullptr)
    kls::set_warning_handler(nullptr);
  else
    kls::set_warning_handler([fn, user](const std::string& m) { fn(m.c_str(), user); });
}

/* grids */

kls_status kls_grid_uniform(double a, double b, size_t n, kls_grid** out) {
  return guarded([&] {
    require(out, "null output");
    *out = new_grid(kls::build_uniform(a, b, n));
  });
}

kls_status kls_grid_gauss(double a, double b, size_t n, kls_grid** out) {
  return guarded([&] {
    require(out, "null output");
    *out = new_grid(kls::build_gauss(a, b, n));
  });
}

kls_status kls_grid_create(double a, double b, const double* nodes, const double* weights,
                           size_t n, kls_rule rule, kls_grid** out) {
  return guarded([&] {
    require(out && nodes && weights, "null argument");
    require(rule >= KLS_RULE_UNIFORM_MIDPOINT && rule <= KLS_RULE_WEIGHTED, "unknown rule");
    *out = new_grid(kls::Grid(a, b, std::vector<double>(nodes, nodes + n),
                              std::vector<double>(weights, weights + n),
                              static_cast<kls::RuleTag>(rule)));
  });
}

kls_status kls_grid_reweight(const kls_grid* grid, kls_density_fn density, void* user,
                             kls_grid** out) {
  return guarded([&] {
    require(grid && density && out, "null argument");
    *out = new_grid(kls::reweight(grid->value, [&](double t) { return density(t, user); }));
  });
}

kls_status kls_grid_from_json(const char* json, kls_grid** out) {
  return guarded([&] {
    require(json && out, "null argument");
    *out = new_grid(kls::grid_from_json(json));
  });
}

kls_status kls_grid_to_json(const kls_grid* grid, char** out) {
  return guarded([&] {
    require(grid && out, "null argument");
    *out = copy_string(kls::grid_to_json(grid->value));
  });
}

void kls_grid_free(kls_grid* grid) { delete grid; }
size_t kls_grid_size(const kls_grid* grid) { return grid ? grid->value.size() : 0; }
double kls_grid_a(const kls_grid* grid) { return grid->value.a(); }
double kls_grid_b(const kls_grid* grid) { return grid->value.b(); }
kls_rule kls_grid_rule(const kls_grid* grid) {
  return static_cast<kls_rule>(grid->value.rule_tag());
}

void kls_grid_nodes(const kls_grid* grid, double* out) {
  std::copy(grid->value.nodes().begin(), grid->value.nodes().end(), out);
}

void kls_grid_weights(const kls_grid* grid, double* out) {
  std::copy(grid->value.weights().begin(), grid->value.weights().end(), out);
}

kls_status kls_grid_inner(const kls_grid* grid, const double* f, const double* g, size_t n,
                          double* out) {
  return guarded([&] {
    require(grid && f && g && out, "null argument");
    *out = kls::inner({f, n}, {g, n}, grid->value);
  });
}

/* kernels */

kls_status kls_kernel_brownian_motion(double sigma2, kls_kernel** out) {
  return guarded([&] {
    require(out, "null output");
    *out = new_kernel(kls::make_brownian_motion(sigma2));
  });
}

kls_status kls_kernel_brownian_bridge(double sigma2, kls_kernel** out) {
  return guarded([&] {
    require(out, "null output");
    *out = new_kernel(kls::make_brownian_bridge(sigma2));
  });
}

kls_status kls_kernel_ornstein_uhlenbeck(double a, double sigma, kls_kernel** out) {
  return guarded([&] {
    require(out, "null output");
    *out = new_kernel(kls::make_ornstein_uhlenbeck(a, sigma));
  });
}

kls_status kls_kernel_matern(double a, double sigma, double alpha, int d, kls_kernel** out) {
  return guarded([&] {
    require(out, "null output");
    *out = new_kernel(kls::make_matern(a, sigma, alpha, d));
  });
}

kls_status kls_kernel_tabulated(const kls_grid* grid, const double* gram, size_t n,
                                kls_kernel** out) {
  return guarded([&] {
    require(grid && gram && out, "null argument");
    require(n == grid->value.size(), "gram size does not match grid");
    const auto en = static_cast<Eigen::Index>(n);
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        g(gram, en, en);
    *out = new_kernel(kls::make_tabulated(grid->value, g));
  });
}

kls_status kls_kernel_from_json(const char* json, kls_kernel** out) {
  return guarded([&] {
    require(json && out, "null argument");
    *out = new_kernel(kls::kernel_from_json(json));
  });
}

kls_status kls_kernel_to_json(const kls_kernel* kernel, char** out) {
  return guarded([&] {
    require(kernel && out, "null argument");
    *out = copy_string(kls::kernel_to_json(kernel->value));
  });
}

void kls_kernel_free(kls_kernel* kernel) { delete kernel; }

kls_status kls_kernel_eval(const kls_kernel* kernel, double s, double t, double* out) {
  return guarded([&] {
    require(kernel && out, "null argument");
    *out = kls::eval(kernel->value, s, t);
  });
}

kls_status kls_kernel_gram(const kls_kernel* kernel, const kls_grid* grid, double* out) {
  return guarded([&] {
    require(kernel && grid && out, "null argument");
    const Eigen::MatrixXd g = kls::gram(kernel->value, grid->value);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        out, g.rows(), g.cols()) = g;
  });
}

kls_status kls_kernel_trace(const kls_kernel* kernel, const kls_grid* grid, double* out) {
  return guarded([&] {
    require(kernel && grid && out, "null argument");
    *out = kls::trace_nu(kernel->value, grid->value);
  });
}

kls_status kls_kernel_tag(const kls_kernel* kernel, char** out) {
  return guarded([&] {
    require(kernel && out, "null argument");
    *out = copy_string(kls::kernel_tag(kernel->value));
  });
}

/* decompositions */

kls_status kls_decompose(const kls_kernel* kernel, const kls_grid* grid, size_t max_rank,
                         double drop_tol, kls_decomposition** out) {
  return guarded([&] {
    require(kernel && grid && out, "null argument");
    kls::DecomposeOptions opts;
    if (max_rank > 0) opts.max_rank = max_rank;
    opts.drop_tol = drop_tol;
    *out = new_dec(kls::decompose(kernel->value, grid->value, opts));
  });
}

kls_status kls_decomposition_create(const kls_grid* grid, const double* mu, const double* efuns,
                                    size_t rank, const char* kernel_tag, double drop_tol,
                                    kls_decomposition** out) {
  return guarded([&] {
    require(grid && mu && efuns && out, "null argument");
    const auto n = static_cast<Eigen::Index>(grid->value.size());
    const auto r = static_cast<Eigen::Index>(rank);
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        e(efuns, r, n);
    *out = new_dec(kls::SpectralDecomposition(grid->value, std::vector<double>(mu, mu + rank),
                                              Eigen::MatrixXd(e),
                                              kernel_tag ? kernel_tag : "", drop_tol));
  });
}

kls_status kls_decomposition_truncate(const kls_decomposition* dec, size_t m,
                                      kls_decomposition** out) {
  return guarded([&] {
    require(dec && out, "null argument");
    *out = new_dec(dec->value.truncated(m));
  });
}

void kls_decomposition_free(kls_decomposition* dec) { delete dec; }
size_t kls_decomposition_rank(const kls_decomposition* dec) { return dec ? dec->value.rank() : 0; }
size_t kls_decomposition_grid_size(const kls_decomposition* dec) {
  return dec ? dec->value.grid().size() : 0;
}
double kls_decomposition_drop_tol(const kls_decomposition* dec) { return dec->value.drop_tol(); }

void kls_decomposition_mu(const kls_decomposition* dec, double* out) {
  std::copy(dec->value.mu().begin(), dec->value.mu().end(), out);
}

void kls_decomposition_efuns(const kls_decomposition* dec, double* out) {
  const auto& e = dec->value.efuns();
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      out, e.rows(), e.cols()) = e;
}

kls_status kls_decomposition_grid(const kls_decomposition* dec, kls_grid** out) {
  return guarded([&] {
    require(dec && out, "null argument");
    *out = new_grid(dec->value.grid());
  });
}

kls_status kls_decomposition_kernel_tag(const kls_decomposition* dec, char** out) {
  return guarded([&] {
    require(dec && out, "null argument");
    *out = copy_string(dec->value.kernel_tag());
  });
}

kls_status kls_nystrom_extend(const kls_decomposition* dec, const kls_kernel* kernel, double t,
                              double* out) {
  return guarded([&] {
    require(dec && kernel && out, "null argument");
    const auto e = kls::nystrom_extend(dec->value, kernel->value, t);
    std::copy(e.begin(), e.end(), out);
  });
}

kls_status kls_mercer_residual(const kls_decomposition* dec, const kls_kernel* kernel,
                               const double* probe_s, const double* probe_t, size_t count,
                               double* max_abs, double* max_rel_diag) {
  return guarded([&] {
    require(dec && kernel && max_abs && max_rel_diag, "null argument");
    require(count == 0 || (probe_s && probe_t), "null probes");
    std::vector<std::pair<double, double>> probes(count);
    for (size_t k = 0; k < count; ++k) probes[k] = {probe_s[k], probe_t[k]};
    const auto res = kls::mercer_residual(dec->value, kernel->value, probes);
    *max_abs = res.max_abs;
    *max_rel_diag = res.max_rel_diag;
  });
}

kls_status kls_check_invariants(const kls_decomposition* dec, const kls_kernel* kernel) {
  return guarded([&] {
    require(dec && kernel, "null argument");
    const auto problem = kls::check_invariants(dec->value, kernel->value);
    if (!problem.empty()) kls::fail(kls::Errc::numeric_error, problem);
  });
}

/* power spaces */

kls_status kls_fourier_coeffs(const kls_decomposition* dec, const double* path, size_t n,
                              double* out) {
  return guarded([&] {
    require(dec && path && out, "null argument");
    const auto z = kls::fourier_coeffs({path, n}, dec->value);
    std::copy(z.z.begin(), z.z.end(), out);
  });
}

kls_status kls_power_norm(const kls_decomposition* dec, const double* z, size_t r, double gamma,
                          double* out) {
  return guarded([&] {
    require(dec && z && out, "null argument");
    *out = kls::power_norm({z, r}, dec->value.mu(), kls::PowerExponent(gamma));
  });
}

kls_status kls_power_kernel(const kls_decomposition* dec, const kls_kernel* kernel, double gamma,
                            double s, double t, double* out) {
  return guarded([&] {
    require(dec && out, "null argument");
    *out = kls::power_kernel(dec->value, kernel ? &kernel->value : nullptr,
                             kls::PowerExponent(gamma), s, t);
  });
}

kls_status kls_summability_check(const kls_decomposition* dec, double beta,
                                 const kls_decay_fit* fit, kls_summability* out) {
  return guarded([&] {
    require(dec && fit && out, "null argument");
    const auto s = kls::summability(dec->value, beta, to_fit(*fit));
    *out = {s.partial, s.tail_low, s.tail_high, static_cast<kls_verdict>(s.verdict)};
  });
}

/* sampling */

kls_status kls_sample_coefficients(const kls_decomposition* dec, kls_law law, uint64_t seed,
                                   uint64_t stream_id, double* out) {
  return guarded([&] {
    require(dec && out, "null argument");
    kls::RandomStream stream(seed, stream_id);
    const auto z = kls::sample_coefficients(dec->value, to_law(law), stream);
    std::copy(z.z.begin(), z.z.end(), out);
  });
}

kls_status kls_synthesize_path(const kls_decomposition* dec, const double* z, size_t r, size_t m,
                               double* out) {
  return guarded([&] {
    require(dec && z && out, "null argument");
    const auto path = kls::synthesize_path(dec->value, {std::vector<double>(z, z + r)}, m);
    std::copy(path.values.begin(), path.values.end(), out);
  });
}

kls_status kls_sample_batch(const kls_decomposition* dec, kls_law law, size_t m,
                            size_t replicates, uint64_t seed, uint64_t first_replicate,
                            unsigned threads, double* values, double* coeffs) {
  return guarded([&] {
    require(dec && values, "null argument");
    const auto batch = kls::sample_batch(dec->value, to_law(law), m, replicates, seed,
                                         {first_replicate, threads});
    const size_t n = dec->value.grid().size();
    const size_t r = dec->value.rank();
    for (size_t k = 0; k < batch.size(); ++k) {
      std::copy(batch[k].values.begin(), batch[k].values.end(), values + k * n);
      if (coeffs) std::copy(batch[k].coeffs.z.begin(), batch[k].coeffs.z.end(), coeffs + k * r);
    }
  });
}

/* analysis */

kls_status kls_truncation_curve(const kls_decomposition* dec, kls_law law, kls_norm_kind norm,
                                double beta, const size_t* truncations, size_t count,
                                size_t replicates, uint64_t seed, unsigned threads,
                                double* empirical, double* stderr_out, double* predicted) {
  return guarded([&] {
    require(dec && truncations && empirical && stderr_out && predicted, "null argument");
    const auto ns = norm == KLS_NORM_L2 ? kls::NormSpec::l2() : kls::NormSpec::power(beta);
    const auto rep = kls::truncation_error_curve(dec->value, to_law(law), ns,
                                                 {truncations, count}, replicates, seed,
                                                 {threads});
    std::copy(rep.empirical_mse.begin(), rep.empirical_mse.end(), empirical);
    std::copy(rep.empirical_stderr.begin(), rep.empirical_stderr.end(), stderr_out);
    std::copy(rep.predicted_tail.begin(), rep.predicted_tail.end(), predicted);
  });
}

kls_status kls_pointwise_variance_residual(const kls_decomposition* dec, const kls_kernel* kernel,
                                           size_t m, double t, double* out) {
  return guarded([&] {
    require(dec && kernel && out, "null argument");
    *out = kls::pointwise_variance_residual(dec->value, kernel->value, m, t);
  });
}

kls_status kls_fit_decay(const kls_decomposition* dec, size_t fit_lo, size_t fit_hi,
                         kls_decay_fit* out) {
  return guarded([&] {
    require(dec && out, "null argument");
    std::optional<kls::FitRange> range;
    if (fit_lo != 0 || fit_hi != 0) range = kls::FitRange{fit_lo, fit_hi};
    const auto f = kls::fit_decay(dec->value, range);
    *out = {f.alpha_hat, f.log_c_hat, f.fit_lo, f.fit_hi, f.rms_residual, f.alpha_ci_low,
            f.alpha_ci_high};
  });
}

kls_status kls_smoothness_certificate(const kls_decay_fit* fit, int d, kls_certificate* out,
                                      char** basis) {
  return guarded([&] {
    require(fit && out, "null argument");
    const auto c = kls::smoothness_certificate(to_fit(*fit), d);
    *out = {c.m_hat, c.d, c.empty ? 1 : 0, c.range_low, c.range_high};
    if (basis) *basis = copy_string(c.basis);
  });
}

kls_status kls_small_ball(const kls_decomposition* dec, const kls_decay_fit* fit, double beta,
                          const double* epsilons, size_t count, size_t replicates, uint64_t seed,
                          kls_law law, unsigned threads, double hypothesis_margin,
                          double* survival, int* used, double* fitted_exponent,
                          double* predicted_exponent) {
  return guarded([&] {
    require(dec && fit && epsilons && survival && used && fitted_exponent && predicted_exponent,
            "null argument");
    const auto rep = kls::small_ball_estimate(dec->value, to_fit(*fit), beta, {epsilons, count},
                                              replicates, seed, to_law(law),
                                              {threads, hypothesis_margin});
    for (size_t k = 0; k < count; ++k) {
      survival[k] = rep.survival[k];
      used[k] = rep.used[k] ? 1 : 0;
    }
    *fitted_exponent = rep.fitted_exponent;
    *predicted_exponent = rep.predicted_exponent;
  });
}

kls_status kls_dichotomy_probe(const kls_decomposition* dec, kls_law law, double beta,
                               size_t replicates, uint64_t seed, unsigned threads, double window,
                               double threshold, double* converged_fraction,
                               double* mean_partial_sums) {
  return guarded([&] {
    require(dec && converged_fraction, "null argument");
    const auto rep = kls::dichotomy_probe(dec->value, to_law(law), beta, replicates, seed,
                                          {threads, window, threshold});
    *converged_fraction = rep.converged_fraction;
    if (mean_partial_sums)
      std::copy(rep.mean_partial_sums.begin(), rep.mean_partial_sums.end(), mean_partial_sums);
  });
}

}  // extern "C"
