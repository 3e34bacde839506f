#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace kls {

enum class RuleTag { uniform_midpoint, gauss_legendre, weighted };

const char* rule_tag_name(RuleTag tag) noexcept;
RuleTag parse_rule_tag(const std::string& name);

/// Quadrature representation of a finite measure on [a, b]: strictly
/// increasing nodes with strictly positive weights. Immutable.
class Grid {
 public:
  /// Validates every invariant; throws kls::Error(invalid_argument).
  Grid(double a, double b, std::vector<double> nodes,
       std::vector<double> weights, RuleTag tag);

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }
  RuleTag rule_tag() const noexcept { return tag_; }

  /// Total mass, i.e. nu([a, b]) under this rule.
  double mass() const noexcept;

  /// Index of the node equal to t, or -1.
  long find_node(double t) const noexcept;

  bool contains(double t) const noexcept { return t >= a_ && t <= b_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  double a_;
  double b_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  RuleTag tag_;
};

/// Composite midpoint rule with n cells.
Grid build_uniform(double a, double b, std::size_t n);

/// n-point Gauss-Legendre rule mapped onto [a, b].
Grid build_gauss(double a, double b, std::size_t n);

/// Multiplies weights by a density sampled at the nodes; zero-weight nodes
/// are dropped.
Grid reweight(const Grid& grid, const std::function<double(double)>& density);

/// Discrete L2(nu) pairing: sum_j w_j f_j g_j.
double inner(std::span<const double> f, std::span<const double> g,
             const Grid& grid);

std::string grid_to_json(const Grid& grid);
Grid grid_from_json(const std::string& text);

}  // namespace kls
