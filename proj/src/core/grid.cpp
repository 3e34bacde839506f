#include "kls/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json_io.hpp"
#include "kls/error.hpp"

namespace kls {

const char* rule_tag_name(RuleTag tag) noexcept {
  switch (tag) {
    case RuleTag::uniform_midpoint: return "uniform_midpoint";
    case RuleTag::gauss_legendre: return "gauss_legendre";
    case RuleTag::weighted: return "weighted";
  }
  return "?";
}

RuleTag parse_rule_tag(const std::string& name) {
  if (name == "uniform_midpoint" || name == "uniform") return RuleTag::uniform_midpoint;
  if (name == "gauss_legendre" || name == "gauss") return RuleTag::gauss_legendre;
  if (name == "weighted") return RuleTag::weighted;
  fail(Errc::invalid_argument, "unknown rule tag '" + name + "'");
}

Grid::Grid(double a, double b, std::vector<double> nodes,
           std::vector<double> weights, RuleTag tag)
    : a_(a), b_(b), nodes_(std::move(nodes)), weights_(std::move(weights)), tag_(tag) {
  if (!std::isfinite(a_) || !std::isfinite(b_) || !(b_ > a_))
    fail(Errc::invalid_argument, "grid: need finite endpoints with b > a");
  if (nodes_.empty())
    fail(Errc::invalid_argument, "grid: no nodes");
  if (nodes_.size() != weights_.size())
    fail(Errc::invalid_argument, "grid: nodes/weights length mismatch");
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    if (!std::isfinite(nodes_[j]) || nodes_[j] < a_ || nodes_[j] > b_)
      fail(Errc::invalid_argument, "grid: node outside [a, b]");
    if (j > 0 && !(nodes_[j] > nodes_[j - 1]))
      fail(Errc::invalid_argument, "grid: nodes must be strictly increasing");
    if (!std::isfinite(weights_[j]) || !(weights_[j] > 0.0))
      fail(Errc::invalid_argument, "grid: weights must be finite and positive");
  }
}

double Grid::mass() const noexcept {
  double s = 0.0;
  for (double w : weights_) s += w;
  return s;
}

long Grid::find_node(double t) const noexcept {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t);
  if (it != nodes_.end() && *it == t) return static_cast<long>(it - nodes_.begin());
  return -1;
}

namespace {

void check_interval(double a, double b, std::size_t n) {
  if (!std::isfinite(a) || !std::isfinite(b) || !(b > a))
    fail(Errc::invalid_argument, "grid: need finite endpoints with b > a");
  if (n == 0) fail(Errc::invalid_argument, "grid: n must be positive");
}

}  // namespace

Grid build_uniform(double a, double b, std::size_t n) {
  check_interval(a, b, n);
  const double h = (b - a) / static_cast<double>(n);
  std::vector<double> nodes(n), weights(n, h);
  for (std::size_t j = 0; j < n; ++j)
    nodes[j] = a + (static_cast<double>(j) + 0.5) * h;
  return Grid(a, b, std::move(nodes), std::move(weights), RuleTag::uniform_midpoint);
}

Grid build_gauss(double a, double b, std::size_t n) {
  check_interval(a, b, n);
  std::vector<double> nodes(n), weights(n);
  const double mid = 0.5 * (b + a);
  const double half = 0.5 * (b - a);
  const std::size_t m = (n + 1) / 2;
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < m; ++i) {
    // Tricomi initial guess for the i-th largest root of P_n.
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (dn + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p0 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double dj = static_cast<double>(j);
        const double p2 = p0;
        p0 = p1;
        p1 = ((2.0 * dj - 1.0) * z * p0 - (dj - 1.0) * p2) / dj;
      }
      // p1 = P_n(z), p0 = P_{n-1}(z)
      dp = dn * (z * p1 - p0) / (z * z - 1.0);
      const double step = p1 / dp;
      z -= step;
      if (std::abs(step) <= 1e-15) break;
    }
    if (n == 1) {
      z = 0.0;
      dp = 1.0;
    } else {
      double p1 = 1.0, p0 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double dj = static_cast<double>(j);
        const double p2 = p0;
        p0 = p1;
        p1 = ((2.0 * dj - 1.0) * z * p0 - (dj - 1.0) * p2) / dj;
      }
      dp = dn * (z * p1 - p0) / (z * z - 1.0);
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    nodes[i] = mid - half * z;
    nodes[n - 1 - i] = mid + half * z;
    weights[i] = half * w;
    weights[n - 1 - i] = half * w;
  }
  if (n % 2 == 1) nodes[n / 2] = mid;
  return Grid(a, b, std::move(nodes), std::move(weights), RuleTag::gauss_legendre);
}

Grid reweight(const Grid& grid, const std::function<double(double)>& density) {
  std::vector<double> nodes, weights;
  nodes.reserve(grid.size());
  weights.reserve(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double t = grid.nodes()[j];
    const double d = density(t);
    if (!std::isfinite(d) || d < 0.0)
      fail(Errc::invalid_density, "reweight: density negative or non-finite at t = " +
                                      std::to_string(t));
    const double w = grid.weights()[j] * d;
    if (w > 0.0) {
      nodes.push_back(t);
      weights.push_back(w);
    }
  }
  if (nodes.empty()) fail(Errc::degenerate_measure, "reweight: all weights are zero");
  return Grid(grid.a(), grid.b(), std::move(nodes), std::move(weights), RuleTag::weighted);
}

double inner(std::span<const double> f, std::span<const double> g, const Grid& grid) {
  if (f.size() != grid.size() || g.size() != grid.size())
    fail(Errc::invalid_argument, "inner: array length does not match grid");
  const auto w = grid.weights();
  double s = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * f[j] * g[j];
  return s;
}

nlohmann::json grid_to_json_value(const Grid& grid) {
  return {{"a", grid.a()},
          {"b", grid.b()},
          {"nodes", std::vector<double>(grid.nodes().begin(), grid.nodes().end())},
          {"weights", std::vector<double>(grid.weights().begin(), grid.weights().end())},
          {"rule_tag", rule_tag_name(grid.rule_tag())}};
}

Grid grid_from_json_value(const nlohmann::json& j) {
  try {
    return Grid(j.at("a").get<double>(), j.at("b").get<double>(),
                j.at("nodes").get<std::vector<double>>(),
                j.at("weights").get<std::vector<double>>(),
                parse_rule_tag(j.at("rule_tag").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_argument, std::string("grid json: ") + e.what());
  }
}

std::string grid_to_json(const Grid& grid) { return dump_json(grid_to_json_value(grid)); }

Grid grid_from_json(const std::string& text) {
  return grid_from_json_value(parse_json(text));
}

}  // namespace kls
