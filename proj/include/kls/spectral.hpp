#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kls/grid.hpp"
#include "kls/kernels.hpp"

namespace kls {

struct DecomposeOptions {
  std::optional<std::size_t> max_rank;  // nullopt keeps every eigenpair above drop_tol
  double drop_tol = 1e-12;              // relative to the largest eigenvalue
};

/// Discrete eigenpairs (mu_i, e_i) of the integral operator
/// f -> int k(., t) f(t) dnu(t) on a quadrature grid.
///
/// Row i of efuns() holds e_i at the grid nodes; the rows are orthonormal in
/// the weighted inner product and mu is non-increasing and strictly positive.
class SpectralDecomposition {
 public:
  SpectralDecomposition(Grid grid, std::vector<double> mu, Eigen::MatrixXd efuns,
                        std::string kernel_tag, double drop_tol);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t rank() const noexcept { return mu_.size(); }
  std::span<const double> mu() const noexcept { return mu_; }
  const Eigen::MatrixXd& efuns() const noexcept { return efuns_; }
  const std::string& kernel_tag() const noexcept { return kernel_tag_; }
  double drop_tol() const noexcept { return drop_tol_; }

  /// Leading m eigenpairs.
  SpectralDecomposition truncated(std::size_t m) const;

 private:
  Grid grid_;
  std::vector<double> mu_;
  Eigen::MatrixXd efuns_;  // rank x n
  std::string kernel_tag_;
  double drop_tol_;
};

SpectralDecomposition decompose(const KernelSpec& spec, const Grid& grid,
                                const DecomposeOptions& opts = {});

/// All eigenvalues (descending) of D^1/2 G D^1/2 for an arbitrary node
/// ordering; the spectrum of the discretised operator.
std::vector<double> operator_spectrum(const Eigen::MatrixXd& gram,
                                      std::span<const double> weights);

/// e_i(t) = mu_i^-1 sum_j w_j k(t, t_j) e_i(t_j), for every retained i.
std::vector<double> nystrom_extend(const SpectralDecomposition& dec, const KernelSpec& spec,
                                   double t);

/// Eigenfunction values at t: the stored column when t is a node, otherwise
/// the Nystrom extension (which needs a non-tabulated source kernel).
std::vector<double> efuns_at(const SpectralDecomposition& dec, const KernelSpec* spec,
                             double t);

struct MercerResidual {
  double max_abs = 0.0;       // max |k(s,t) - sum_i mu_i e_i(s) e_i(t)|
  double max_rel_diag = 0.0;  // max |defect(t,t)| / k(t,t) over diagonal probes
};

MercerResidual mercer_residual(const SpectralDecomposition& dec, const KernelSpec& spec,
                               std::span<const std::pair<double, double>> probes);

/// Post-hoc check of orthonormality (1e-10), the eigen-relation (1e-8 mu_1),
/// the trace bound, ordering and the sign convention. Returns an empty string
/// when every invariant holds, else a description of the first violation.
std::string check_invariants(const SpectralDecomposition& dec, const KernelSpec& spec);

}  // namespace kls
