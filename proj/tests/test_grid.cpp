#include <doctest.h>

#include <cmath>

#include "kls/error.hpp"
#include "kls/grid.hpp"
#include "oracles/oracles.hpp"

using namespace kls;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc{};
}

}  // namespace

TEST_CASE("midpoint rule") {
  auto g = build_uniform(0, 1, 4);
  CHECK(std::vector(g.nodes().begin(), g.nodes().end()) == std::vector{0.125, 0.375, 0.625, 0.875});
  for (double w : g.weights()) CHECK(w == 0.25);

  g = build_uniform(0, 1, 1);
  CHECK(g.nodes()[0] == 0.5);
  CHECK(g.weights()[0] == 1.0);

  g = build_uniform(-2, 2, 2);
  CHECK(g.nodes()[0] == -1.0);
  CHECK(g.nodes()[1] == 1.0);
  CHECK(g.weights()[0] == 2.0);
  CHECK(g.weights()[1] == 2.0);
  CHECK(g.rule_tag() == RuleTag::uniform_midpoint);
}

TEST_CASE("gauss-legendre rule") {
  auto g = build_gauss(-1, 1, 1);
  CHECK(g.nodes()[0] == doctest::Approx(0.0));
  CHECK(g.weights()[0] == doctest::Approx(2.0));

  g = build_gauss(0, 1, 2);
  CHECK(g.nodes()[0] == doctest::Approx((1 - 1 / std::sqrt(3.0)) / 2).epsilon(1e-14));
  CHECK(g.nodes()[1] == doctest::Approx((1 + 1 / std::sqrt(3.0)) / 2).epsilon(1e-14));
  CHECK(g.weights()[0] == doctest::Approx(0.5));

  g = build_gauss(0, 1, 3);
  double s = 0;
  for (std::size_t j = 0; j < g.size(); ++j) s += g.weights()[j] * std::pow(g.nodes()[j], 4);
  CHECK(std::abs(s - 0.2) < 1e-14);

  // Nodes against a bisection oracle for a larger rule.
  for (int n : {7, 40}) {
    const auto roots = oracle::legendre_roots(n);
    REQUIRE(roots.size() == static_cast<std::size_t>(n));
    g = build_gauss(-1, 1, n);
    for (int k = 0; k < n; ++k) CHECK(std::abs(g.nodes()[k] - roots[k]) < 1e-13);
    CHECK(g.mass() == doctest::Approx(2.0).epsilon(1e-14));
  }
}

TEST_CASE("grid validation") {
  CHECK(code_of([] { build_uniform(1, 0, 4); }) == Errc::invalid_argument);
  CHECK(code_of([] { build_uniform(0, 1, 0); }) == Errc::invalid_argument);
  CHECK(code_of([] { Grid(0, 1, {0.5, 0.2}, {0.5, 0.5}, RuleTag::weighted); }) == Errc::invalid_argument);
  CHECK(code_of([] { Grid(0, 1, {0.2, 0.5}, {0.5, -0.5}, RuleTag::weighted); }) == Errc::invalid_argument);
  CHECK(code_of([] { Grid(0, 1, {0.2, 1.5}, {0.5, 0.5}, RuleTag::weighted); }) == Errc::invalid_argument);
  CHECK(code_of([] { Grid(0, 1, {0.2}, {0.5, 0.5}, RuleTag::weighted); }) == Errc::invalid_argument);
}

TEST_CASE("reweight") {
  const auto g = build_uniform(0, 1, 4);
  const auto same = reweight(g, [](double) { return 1.0; });
  CHECK(std::vector(same.weights().begin(), same.weights().end()) ==
        std::vector(g.weights().begin(), g.weights().end()));
  CHECK(same.rule_tag() == RuleTag::weighted);

  const auto lin = reweight(build_uniform(0, 1, 2), [](double t) { return 2 * t; });
  CHECK(lin.weights()[0] == doctest::Approx(0.25));
  CHECK(lin.weights()[1] == doctest::Approx(0.75));

  CHECK(code_of([&] { reweight(g, [](double) { return 0.0; }); }) == Errc::degenerate_measure);
  CHECK(code_of([&] { reweight(g, [](double) { return -1.0; }); }) == Errc::invalid_density);
  CHECK(code_of([&] { reweight(g, [](double) { return NAN; }); }) == Errc::invalid_density);

  // Zero-density nodes disappear.
  const auto half = reweight(g, [](double t) { return t < 0.5 ? 0.0 : 1.0; });
  CHECK(half.size() == 2);
  CHECK(half.nodes()[0] == 0.625);
}

TEST_CASE("inner product") {
  const auto u = build_uniform(0, 1, 8);
  std::vector<double> one(8, 1.0);
  CHECK(inner(one, one, u) == doctest::Approx(1.0));

  const auto g = build_gauss(0, 1, 64);
  std::vector<double> f, h;
  for (double t : g.nodes()) {
    f.push_back(std::sqrt(2.0) * std::sin(oracle::pi * t));
    h.push_back(std::sqrt(2.0) * std::sin(2 * oracle::pi * t));
  }
  CHECK(std::abs(inner(f, h, g)) < 1e-12);
  CHECK(std::abs(inner(f, f, g) - 1) < 1e-12);
  CHECK(code_of([&] { inner(one, f, g); }) == Errc::invalid_argument);
}

TEST_CASE("json round trip") {
  for (const auto& g : {build_uniform(-1, 2, 5), build_gauss(0, 1, 9),
                        reweight(build_uniform(0, 1, 3), [](double t) { return t; })}) {
    CHECK(grid_from_json(grid_to_json(g)) == g);
  }
  CHECK(code_of([] { grid_from_json("{not json"); }) == Errc::invalid_argument);
  CHECK(code_of([] { grid_from_json(R"({"a":0,"b":1,"nodes":[0.5],"weights":[1],"rule":"x"})"); }) ==
        Errc::invalid_argument);
}

TEST_CASE("find_node") {
  const auto g = build_uniform(0, 1, 4);
  CHECK(g.find_node(0.375) == 1);
  CHECK(g.find_node(0.3) == -1);
  CHECK(g.contains(1.0));
  CHECK_FALSE(g.contains(1.5));
}
