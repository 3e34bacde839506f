#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kls/powerspace.hpp"
#include "kls/rng.hpp"
#include "kls/spectral.hpp"

namespace kls {

enum class LawKind { gaussian, rademacher, student_t };

/// Law of the standardised variables xi_i (mean 0, variance 1); the KL
/// coefficients are z_i = sqrt(mu_i) xi_i.
struct CoefficientLaw {
  LawKind kind = LawKind::gaussian;
  double dof = 0.0;  // student_t only, must exceed 4

  static CoefficientLaw gaussian() { return {LawKind::gaussian, 0.0}; }
  static CoefficientLaw rademacher() { return {LawKind::rademacher, 0.0}; }
  static CoefficientLaw student_t(double dof);

  std::string name() const;
};

void validate(const CoefficientLaw& law);

/// One standardised draw. Gaussian and Student-t use the inverse CDF of a
/// single uniform; Rademacher uses the sign of one uniform.
double draw_standardized(const CoefficientLaw& law, RandomStream& stream);

CoeffVector sample_coefficients(std::span<const double> mu, const CoefficientLaw& law,
                                RandomStream& stream);
CoeffVector sample_coefficients(const SpectralDecomposition& dec, const CoefficientLaw& law,
                                RandomStream& stream);

struct SamplePath {
  std::shared_ptr<const Grid> grid;
  std::vector<double> values;  // values[j] = sum_{i <= truncation} z_i e_i(t_j)
  CoeffVector coeffs;
  std::size_t truncation = 0;
  std::uint64_t seed = 0;
  std::uint64_t replicate_index = 0;
};

/// Partial KL sum with the leading m terms; m = 0 gives the zero path.
SamplePath synthesize_path(const SpectralDecomposition& dec, const CoeffVector& z,
                           std::size_t m);

struct BatchOptions {
  std::uint64_t first_replicate = 0;
  unsigned threads = 1;
};

/// Replicate r (global index first_replicate + k) draws its coefficients from
/// RandomStream(seed, r); output does not depend on `threads`.
std::vector<SamplePath> sample_batch(const SpectralDecomposition& dec, const CoefficientLaw& law,
                                     std::size_t m, std::size_t replicates, std::uint64_t seed,
                                     const BatchOptions& opts = {});

}  // namespace kls
