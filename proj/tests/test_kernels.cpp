#include <doctest.h>

#include <cmath>

#include "kls/error.hpp"
#include "kls/kernels.hpp"
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

std::vector<double> flat(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  return out;
}

}  // namespace

TEST_CASE("closed-form evaluations") {
  CHECK(eval(make_brownian_motion(1), 0.3, 0.7) == doctest::Approx(0.3));
  CHECK(eval(make_brownian_bridge(1), 0.3, 0.7) == doctest::Approx(0.3 - 0.21));
  for (double t : {0.0, 0.4, 3.0}) CHECK(eval(make_ornstein_uhlenbeck(1, 1), t, t) == 1.0);
  CHECK(eval(make_ornstein_uhlenbeck(2, 3), 0.1, 0.4) == doctest::Approx(2 * std::exp(-0.9)));

  const auto m12 = make_matern(1, 1, 0.5);
  CHECK(eval(m12, 0, 1) == doctest::Approx(std::sqrt(oracle::pi / 2) * std::exp(-1.0)).epsilon(1e-14));
  CHECK(eval(m12, 0, 1) == doctest::Approx(0.46107).epsilon(1e-4));
  CHECK(eval(m12, 0.2, 0.2) == doctest::Approx(std::sqrt(oracle::pi / 2)).epsilon(1e-14));
}

TEST_CASE("scaled bessel against frozen reference values") {
  // x^a K_a(x), reference values from an independent library.
  struct Row { double a, x, v; };
  const Row rows[] = {
      {1.0, 0.1, 0.9853844780870606},  {1.0, 1.0, 0.6019072301972346},
      {1.0, 5.0, 0.02022306722726082}, {2.3, 0.5, 2.743312184758051},
      {2.3, 3.0, 0.9213374070290072},  {0.7, 1e-3, 1.0542664385282843},
      {0.7, 20.0, 4.7306393924709205e-09}, {2.5, 0.8, 3.401428071921995},
      {1.5, 2.0, 0.5088528712741325},
  };
  for (const auto& r : rows) {
    CAPTURE(r.a);
    CAPTURE(r.x);
    CHECK(matern_scaled_bessel(r.a, r.x) == doctest::Approx(r.v).epsilon(1e-12));
  }
  // The diagonal is the r -> 0 limit.
  const auto m = make_matern(1, 1, 2.3);
  CHECK(eval(m, 0.5, 0.5) == doctest::Approx(2.872781688135437).epsilon(1e-14));
  CHECK(eval(m, 0.5, 0.5 + 1e-7) == doctest::Approx(2.872781688135437).epsilon(1e-6));
}

TEST_CASE("domain errors") {
  CHECK(code_of([] { eval(make_brownian_motion(1), -0.1, 0.5); }) == Errc::invalid_argument);
  CHECK(code_of([] { eval(make_brownian_bridge(1), 0.5, 1.2); }) == Errc::invalid_argument);
  CHECK(code_of([] { make_brownian_motion(0); }) == Errc::invalid_argument);
  CHECK(code_of([] { make_ornstein_uhlenbeck(1, -1); }) == Errc::invalid_argument);
  CHECK(code_of([] { make_matern(1, 1, 0.5, 0); }) == Errc::invalid_argument);
  const auto g = build_uniform(0, 1, 2);
  const auto tab = make_tabulated(g, Eigen::MatrixXd::Identity(2, 2));
  CHECK(eval(tab, 0.25, 0.25) == 1.0);
  CHECK(code_of([&] { eval(tab, 0.3, 0.25); }) == Errc::unsupported_point);
  CHECK(code_of([&] { gram(tab, build_uniform(0, 1, 3)); }) == Errc::grid_mismatch);
  CHECK(code_of([&] { make_tabulated(g, Eigen::MatrixXd::Identity(3, 3)); }) == Errc::invalid_argument);
}

TEST_CASE("gram") {
  const Grid g(0, 1, {0.25, 0.75}, {0.5, 0.5}, RuleTag::weighted);
  CHECK(flat(gram(make_brownian_motion(1), g)) == std::vector{0.25, 0.25, 0.25, 0.75});

  const auto u = build_uniform(0, 1, 24);
  for (const auto& k : {make_brownian_motion(2), make_brownian_bridge(1), make_ornstein_uhlenbeck(1, 3),
                        make_matern(1, 2, 1.5), make_matern(1, 2, 2.3)}) {
    const auto G = gram(k, u);
    CHECK(G == G.transpose());
  }

  // Positive semidefiniteness via an independent Jacobi eigensolver.
  const auto u64 = build_uniform(0, 1, 64);
  const auto G = gram(make_ornstein_uhlenbeck(1, 1), u64);
  std::vector<double> b(64 * 64);
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j)
      b[i * 64 + j] = std::sqrt(u64.weights()[i] * u64.weights()[j]) * G(i, j);
  const auto ev = oracle::jacobi_eigenvalues(b, 64);
  CHECK(ev.back() >= -1e-10 * ev.front());
}

TEST_CASE("tabulated symmetrisation warns") {
  std::vector<std::string> seen;
  set_warning_handler([&](const std::string& m) { seen.push_back(m); });
  const auto g = build_uniform(0, 1, 2);
  Eigen::MatrixXd a(2, 2);
  a << 1, 0.2, 0.4, 1;
  const auto k = make_tabulated(g, a);
  CHECK(eval(k, 0.25, 0.75) == doctest::Approx(0.3));
  CHECK(eval(k, 0.75, 0.25) == doctest::Approx(0.3));
  CHECK(seen.size() == 1);
  a(1, 0) = 0.2;
  make_tabulated(g, a);
  CHECK(seen.size() == 1);
  set_warning_handler(nullptr);
}

TEST_CASE("trace") {
  const auto g = build_gauss(0, 1, 32);
  CHECK(trace_nu(make_brownian_motion(1), g) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(trace_nu(make_ornstein_uhlenbeck(1, 1), g) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(trace_nu(make_brownian_bridge(1), g) == doctest::Approx(1.0 / 6).epsilon(1e-13));
  const auto u = build_uniform(0, 1, 512);
  CHECK(trace_nu(make_brownian_motion(1), u) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(trace_nu(make_brownian_bridge(1), u) == doctest::Approx(1.0 / 6).epsilon(1e-5));
}

TEST_CASE("scaling") {
  const auto u = build_uniform(0, 1, 8);
  for (const auto& k : {make_brownian_motion(1), make_brownian_bridge(2), make_ornstein_uhlenbeck(1, 1),
                        make_matern(1, 1, 1.5), make_tabulated(u, gram(make_ornstein_uhlenbeck(1, 2), u))}) {
    const auto k3 = scale_kernel(k, 3.0);
    CHECK((gram(k3, u) - 3.0 * gram(k, u)).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK(code_of([] { scale_kernel(make_brownian_motion(1), 0); }) == Errc::invalid_argument);
}

TEST_CASE("json round trip") {
  const auto u = build_uniform(0, 1, 3);
  for (const auto& k : {make_brownian_motion(1.5), make_brownian_bridge(1), make_ornstein_uhlenbeck(2, 0.5),
                        make_matern(1, 10, 1.5, 2), make_tabulated(u, gram(make_brownian_motion(1), u))}) {
    const auto back = kernel_from_json(kernel_to_json(k));
    CHECK(kernel_tag(back) == kernel_tag(k));
    CHECK(gram(back, u) == gram(k, u));
  }
  CHECK(code_of([] { kernel_from_json(R"({"variant":"BrownianMotion","sigma2":1,"extra":2})"); }) ==
        Errc::invalid_argument);
  CHECK(code_of([] { kernel_from_json(R"({"variant":"Nope"})"); }) == Errc::invalid_argument);
  CHECK(code_of([] { kernel_from_json("[1,"); }) == Errc::invalid_argument);
}
