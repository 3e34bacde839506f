#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "kls/grid.hpp"

namespace kls {

/// sigma2 * min(s, t) on [0, inf).
struct BrownianMotion {
  double sigma2 = 1.0;
};

/// sigma2 * (min(s, t) - s t) on [0, 1].
struct BrownianBridge {
  double sigma2 = 1.0;
};

/// a * exp(-sigma |s - t|).
struct OrnsteinUhlenbeck {
  double a = 1.0;
  double sigma = 1.0;
};

/// Unnormalised Matern kernel a (sigma r)^alpha K_alpha(sigma r), r = |s - t|.
/// The diagonal is the limit a 2^(alpha-1) Gamma(alpha). `d` is the ambient
/// dimension used by the smoothness formulas; evaluation itself is 1-D.
struct Matern {
  double a = 1.0;
  double sigma = 1.0;
  double alpha = 0.5;
  int d = 1;
};

/// Gram matrix tabulated on a fixed grid; evaluable only at its nodes.
struct Tabulated {
  std::shared_ptr<const Grid> grid;
  Eigen::MatrixXd gram;  // symmetrised on construction
};

using KernelSpec =
    std::variant<BrownianMotion, BrownianBridge, OrnsteinUhlenbeck, Matern, Tabulated>;

// Validating constructors.
KernelSpec make_brownian_motion(double sigma2);
KernelSpec make_brownian_bridge(double sigma2);
KernelSpec make_ornstein_uhlenbeck(double a, double sigma);
KernelSpec make_matern(double a, double sigma, double alpha, int d = 1);
/// Symmetrises as (G + G^T)/2 and warns when the input asymmetry exceeds 1e-8.
KernelSpec make_tabulated(const Grid& grid, const Eigen::MatrixXd& gram);

/// Receives non-fatal diagnostics (default: print to stderr).
void set_warning_handler(std::function<void(const std::string&)> handler);
void warn(const std::string& message);

double eval(const KernelSpec& spec, double s, double t);

/// G(i, j) = k(t_i, t_j).
Eigen::MatrixXd gram(const KernelSpec& spec, const Grid& grid);

/// sum_j w_j k(t_j, t_j), the discrete version of int k(t, t) dnu.
double trace_nu(const KernelSpec& spec, const Grid& grid);

/// Multiplies the kernel by c > 0 (sigma2, a, or the table).
KernelSpec scale_kernel(const KernelSpec& spec, double c);

bool is_tabulated(const KernelSpec& spec) noexcept;

/// Short human-readable label, e.g. "OrnsteinUhlenbeck{a=1,sigma=1}".
std::string kernel_tag(const KernelSpec& spec);

/// x^alpha K_alpha(x) for x > 0.
double matern_scaled_bessel(double alpha, double x);

std::string kernel_to_json(const KernelSpec& spec);
/// Tabulated kernels take {"grid": {...}, "gram": [[...]]} or "gram_csv": path.
KernelSpec kernel_from_json(const std::string& text);

Eigen::MatrixXd read_csv_matrix(const std::string& path);

}  // namespace kls
