#include "kls/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "kls/error.hpp"

namespace kls {

SpectralDecomposition::SpectralDecomposition(Grid grid, std::vector<double> mu,
                                             Eigen::MatrixXd efuns, std::string kernel_tag,
                                             double drop_tol)
    : grid_(std::move(grid)),
      mu_(std::move(mu)),
      efuns_(std::move(efuns)),
      kernel_tag_(std::move(kernel_tag)),
      drop_tol_(drop_tol) {
  if (static_cast<std::size_t>(efuns_.rows()) != mu_.size() ||
      static_cast<std::size_t>(efuns_.cols()) != grid_.size())
    fail(Errc::invalid_argument, "decomposition: efuns must be rank x n");
  for (std::size_t i = 0; i < mu_.size(); ++i) {
    if (!std::isfinite(mu_[i]) || !(mu_[i] > 0.0))
      fail(Errc::invalid_argument, "decomposition: eigenvalues must be positive");
    if (i > 0 && mu_[i] > mu_[i - 1])
      fail(Errc::invalid_argument, "decomposition: eigenvalues must be non-increasing");
  }
}

SpectralDecomposition SpectralDecomposition::truncated(std::size_t m) const {
  if (m > rank()) fail(Errc::invalid_argument, "truncated: m exceeds rank");
  return SpectralDecomposition(grid_, std::vector<double>(mu_.begin(), mu_.begin() + m),
                               efuns_.topRows(static_cast<Eigen::Index>(m)), kernel_tag_,
                               drop_tol_);
}

namespace {

// Index of the entry that fixes the sign: the lowest index whose magnitude is
// within a relative 1e-8 of the largest. Symmetric kernels produce mirrored
// eigenvectors whose extreme entries tie only up to rounding.
Eigen::Index sign_anchor(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  const double top = row.cwiseAbs().maxCoeff();
  Eigen::Index j = 0;
  while (std::abs(row(j)) < top * (1.0 - 1e-8)) ++j;
  return j;
}

struct WeightedEigen {
  Eigen::VectorXd sqrt_w;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
};

// B = D^1/2 G D^1/2 is symmetric and similar to G D.
WeightedEigen weighted_eigen(Eigen::MatrixXd b, std::span<const double> weights,
                             bool vectors) {
  const auto n = static_cast<Eigen::Index>(weights.size());
  if (b.rows() != n || b.cols() != n)
    fail(Errc::invalid_argument, "gram size does not match weights");
  WeightedEigen out;
  out.sqrt_w.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) out.sqrt_w(j) = std::sqrt(weights[static_cast<std::size_t>(j)]);
  b = out.sqrt_w.asDiagonal() * b * out.sqrt_w.asDiagonal();
  out.solver.compute(b, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (out.solver.info() != Eigen::Success)
    fail(Errc::numeric_error, "symmetric eigensolver did not converge");
  return out;
}

}  // namespace

std::vector<double> operator_spectrum(const Eigen::MatrixXd& gram,
                                      std::span<const double> weights) {
  const auto we = weighted_eigen(gram, weights, false);
  const auto& lambda = we.solver.eigenvalues();
  std::vector<double> out(lambda.data(), lambda.data() + lambda.size());
  std::reverse(out.begin(), out.end());
  return out;
}

SpectralDecomposition decompose(const KernelSpec& spec, const Grid& grid,
                                const DecomposeOptions& opts) {
  if (!(opts.drop_tol >= 0.0)) fail(Errc::invalid_argument, "drop_tol must be >= 0");
  if (opts.max_rank && *opts.max_rank == 0) fail(Errc::invalid_argument, "max_rank must be positive");
  const auto n = static_cast<Eigen::Index>(grid.size());
  const auto we = weighted_eigen(gram(spec, grid), grid.weights(), true);
  const auto& sqrt_w = we.sqrt_w;
  const auto& solver = we.solver;

  const Eigen::VectorXd& lambda = solver.eigenvalues();  // ascending
  const double lambda_max = lambda(n - 1);
  if (!std::isfinite(lambda_max) || !(lambda_max > 0.0))
    fail(Errc::degenerate_kernel, "kernel has no positive eigenvalue on this grid");
  if (lambda(0) < -1e-8 * lambda_max)
    fail(Errc::numeric_error, "kernel is not positive semi-definite (eigenvalue " +
                                  std::to_string(lambda(0)) + ")");

  const double cutoff = opts.drop_tol * lambda_max;
  std::size_t keep = 0;
  for (Eigen::Index i = n - 1; i >= 0 && lambda(i) > cutoff && lambda(i) > 0.0; --i) ++keep;
  if (opts.max_rank) keep = std::min(keep, *opts.max_rank);

  std::vector<double> mu(keep);
  Eigen::MatrixXd efuns(static_cast<Eigen::Index>(keep), n);
  for (std::size_t r = 0; r < keep; ++r) {
    const Eigen::Index src = n - 1 - static_cast<Eigen::Index>(r);
    mu[r] = lambda(src);
    auto row = efuns.row(static_cast<Eigen::Index>(r));
    row = solver.eigenvectors().col(src).transpose().cwiseQuotient(sqrt_w.transpose());
    if (row(sign_anchor(row)) < 0.0) row = -row;
  }
  return SpectralDecomposition(grid, std::move(mu), std::move(efuns), kernel_tag(spec),
                               opts.drop_tol);
}

std::vector<double> nystrom_extend(const SpectralDecomposition& dec, const KernelSpec& spec,
                                   double t) {
  if (is_tabulated(spec))
    fail(Errc::unsupported, "Nystrom extension needs an analytic kernel");
  const Grid& grid = dec.grid();
  if (!std::isfinite(t) || !grid.contains(t))
    fail(Errc::invalid_argument, "Nystrom extension point outside the grid interval");
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::VectorXd kw(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    kw(j) = grid.weights()[sj] * eval(spec, t, grid.nodes()[sj]);
  }
  const Eigen::VectorXd proj = dec.efuns() * kw;
  std::vector<double> out(dec.rank());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = proj(static_cast<Eigen::Index>(i)) / dec.mu()[i];
  return out;
}

std::vector<double> efuns_at(const SpectralDecomposition& dec, const KernelSpec* spec,
                             double t) {
  const long j = dec.grid().find_node(t);
  if (j >= 0) {
    const Eigen::VectorXd col = dec.efuns().col(j);
    return std::vector<double>(col.data(), col.data() + col.size());
  }
  if (spec == nullptr || is_tabulated(*spec))
    fail(Errc::unsupported_point, "off-grid point needs an analytic source kernel");
  return nystrom_extend(dec, *spec, t);
}

MercerResidual mercer_residual(const SpectralDecomposition& dec, const KernelSpec& spec,
                               std::span<const std::pair<double, double>> probes) {
  MercerResidual res;
  for (const auto& [s, t] : probes) {
    const auto es = efuns_at(dec, &spec, s);
    const auto et = (s == t) ? es : efuns_at(dec, &spec, t);
    double recon = 0.0;
    for (std::size_t i = 0; i < es.size(); ++i) recon += dec.mu()[i] * es[i] * et[i];
    const double k = eval(spec, s, t);
    const double defect = std::abs(k - recon);
    res.max_abs = std::max(res.max_abs, defect);
    if (s == t) res.max_rel_diag = std::max(res.max_rel_diag, k > 0.0 ? defect / k : defect);
  }
  return res;
}

std::string check_invariants(const SpectralDecomposition& dec, const KernelSpec& spec) {
  const Grid& grid = dec.grid();
  const auto r = static_cast<Eigen::Index>(dec.rank());
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (r == 0) return "empty decomposition";
  Eigen::VectorXd w(n);
  for (Eigen::Index j = 0; j < n; ++j) w(j) = grid.weights()[static_cast<std::size_t>(j)];

  const Eigen::MatrixXd& e = dec.efuns();
  const Eigen::MatrixXd gramian = e * w.asDiagonal() * e.transpose();
  const double ortho = (gramian - Eigen::MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff();
  if (ortho > 1e-10) return "orthonormality defect " + std::to_string(ortho);

  const double mu1 = dec.mu()[0];
  const Eigen::MatrixXd applied = e * w.asDiagonal() * gram(spec, grid);  // r x n
  for (Eigen::Index i = 0; i < r; ++i) {
    const double defect =
        (applied.row(i) - dec.mu()[static_cast<std::size_t>(i)] * e.row(i)).cwiseAbs().maxCoeff();
    if (defect > 1e-8 * mu1)
      return "eigen-relation defect " + std::to_string(defect) + " for i = " +
             std::to_string(i + 1);
  }

  double sum = 0.0;
  for (double m : dec.mu()) sum += m;
  const double tr = trace_nu(spec, grid);
  if (sum > tr + 1e-8 * std::abs(tr)) return "eigenvalue sum exceeds the trace";

  for (Eigen::Index i = 0; i < r; ++i) {
    if (e(i, sign_anchor(e.row(i))) < 0.0) return "sign convention violated for i = " + std::to_string(i + 1);
  }
  return {};
}

}  // namespace kls
