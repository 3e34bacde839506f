#include "kls/sampling.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "kls/error.hpp"
#include "kls/parallel.hpp"

namespace kls {

CoefficientLaw CoefficientLaw::student_t(double dof) {
  CoefficientLaw law{LawKind::student_t, dof};
  validate(law);
  return law;
}

std::string CoefficientLaw::name() const {
  switch (kind) {
    case LawKind::gaussian: return "Gaussian";
    case LawKind::rademacher: return "Rademacher";
    case LawKind::student_t: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "StudentT{dof=%.17g}", dof);
      return buf;
    }
  }
  return "?";
}

void validate(const CoefficientLaw& law) {
  if (law.kind == LawKind::student_t && !(law.dof > 4.0 && std::isfinite(law.dof)))
    fail(Errc::invalid_argument, "StudentT law needs dof > 4 (finite fourth moment)");
}

double draw_standardized(const CoefficientLaw& law, RandomStream& stream) {
  const double u = stream.next_uniform();
  switch (law.kind) {
    case LawKind::gaussian:
      return boost::math::quantile(boost::math::normal_distribution<double>(), u);
    case LawKind::rademacher:
      return u < 0.5 ? -1.0 : 1.0;
    case LawKind::student_t:
      return boost::math::quantile(boost::math::students_t_distribution<double>(law.dof), u) *
             std::sqrt((law.dof - 2.0) / law.dof);
  }
  return 0.0;
}

CoeffVector sample_coefficients(std::span<const double> mu, const CoefficientLaw& law,
                                RandomStream& stream) {
  validate(law);
  CoeffVector out{std::vector<double>(mu.size())};
  for (std::size_t i = 0; i < mu.size(); ++i)
    out.z[i] = std::sqrt(mu[i]) * draw_standardized(law, stream);
  return out;
}

CoeffVector sample_coefficients(const SpectralDecomposition& dec, const CoefficientLaw& law,
                                RandomStream& stream) {
  return sample_coefficients(dec.mu(), law, stream);
}

namespace {

std::vector<double> partial_sum(const SpectralDecomposition& dec, std::span<const double> z,
                                std::size_t m) {
  const auto n = static_cast<Eigen::Index>(dec.grid().size());
  Eigen::VectorXd values = Eigen::VectorXd::Zero(n);
  if (m > 0) {
    const Eigen::Map<const Eigen::VectorXd> zm(z.data(), static_cast<Eigen::Index>(m));
    values = dec.efuns().topRows(static_cast<Eigen::Index>(m)).transpose() * zm;
  }
  return std::vector<double>(values.data(), values.data() + n);
}

}  // namespace

SamplePath synthesize_path(const SpectralDecomposition& dec, const CoeffVector& z,
                           std::size_t m) {
  if (z.z.size() != dec.rank())
    fail(Errc::invalid_argument, "synthesize_path: coefficient length does not match rank");
  if (m > dec.rank()) fail(Errc::invalid_argument, "synthesize_path: m exceeds rank");
  SamplePath path;
  path.grid = std::make_shared<const Grid>(dec.grid());
  path.values = partial_sum(dec, z.z, m);
  path.coeffs = z;
  path.truncation = m;
  return path;
}

std::vector<SamplePath> sample_batch(const SpectralDecomposition& dec, const CoefficientLaw& law,
                                     std::size_t m, std::size_t replicates, std::uint64_t seed,
                                     const BatchOptions& opts) {
  validate(law);
  if (replicates == 0) fail(Errc::invalid_argument, "sample_batch: replicates must be >= 1");
  if (m > dec.rank()) fail(Errc::invalid_argument, "sample_batch: m exceeds rank");
  const auto grid = std::make_shared<const Grid>(dec.grid());
  std::vector<SamplePath> out(replicates);
  parallel_blocks(replicates, 16, opts.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const std::uint64_t r = opts.first_replicate + k;
      RandomStream stream(seed, r);
      SamplePath& path = out[k];
      path.grid = grid;
      path.coeffs = sample_coefficients(dec, law, stream);
      path.values = partial_sum(dec, path.coeffs.z, m);
      path.truncation = m;
      path.seed = seed;
      path.replicate_index = r;
    }
  });
  return out;
}

}  // namespace kls
