#include "kls/kernels.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>

#include "json_io.hpp"
#include "kls/error.hpp"

namespace kls {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::mutex warning_mutex;
std::function<void(const std::string&)> warning_handler;

void require_positive(double v, const char* what) {
  if (!std::isfinite(v) || !(v > 0.0))
    fail(Errc::invalid_argument, std::string(what) + " must be finite and positive");
}

// Half-integer order alpha = n + 1/2:
// x^alpha K_alpha(x) = sqrt(pi/2) e^-x x^n sum_k (n+k)!/(k!(n-k)!) (2x)^-k.
double half_integer_scaled_bessel(int n, double x) {
  double term = 1.0;  // k = 0 coefficient
  double sum = 0.0;
  double xpow = std::pow(x, n);
  for (int k = 0; k <= n; ++k) {
    sum += term * xpow;
    // coefficient ratio c_{k+1}/c_k = (n+k+1)(n-k) / (k+1), times (2x)^-1
    term *= static_cast<double>((n + k + 1) * (n - k)) / static_cast<double>(k + 1) / 2.0;
    xpow /= x;
  }
  return std::sqrt(std::numbers::pi / 2.0) * std::exp(-x) * sum;
}

double eval_matern(const Matern& m, double s, double t) {
  const double x = m.sigma * std::abs(s - t);
  if (x == 0.0) return m.a * std::pow(2.0, m.alpha - 1.0) * std::tgamma(m.alpha);
  return m.a * matern_scaled_bessel(m.alpha, x);
}

std::size_t tabulated_index(const Tabulated& tab, double t) {
  const long i = tab.grid->find_node(t);
  if (i < 0) fail(Errc::unsupported_point, "tabulated kernel evaluated off its grid");
  return static_cast<std::size_t>(i);
}

}  // namespace

void set_warning_handler(std::function<void(const std::string&)> handler) {
  std::lock_guard lock(warning_mutex);
  warning_handler = std::move(handler);
}

void warn(const std::string& message) {
  std::lock_guard lock(warning_mutex);
  if (warning_handler)
    warning_handler(message);
  else
    std::cerr << "kls: warning: " << message << '\n';
}

double matern_scaled_bessel(double alpha, double x) {
  const double twice = 2.0 * alpha;
  if (twice == std::round(twice) && static_cast<long>(twice) % 2 == 1 && alpha < 40.0)
    return half_integer_scaled_bessel(static_cast<int>(alpha - 0.5), x);
  double k;
  try {
    k = std::cyl_bessel_k(alpha, x);
  } catch (const std::exception& e) {
    fail(Errc::numeric_error, std::string("Bessel K evaluation failed: ") + e.what());
  }
  if (!std::isfinite(k))
    fail(Errc::numeric_error, "Bessel K overflow at x = " + std::to_string(x));
  const double v = std::pow(x, alpha) * k;
  if (!std::isfinite(v))
    fail(Errc::numeric_error, "Matern kernel overflow at x = " + std::to_string(x));
  return v;
}

KernelSpec make_brownian_motion(double sigma2) {
  require_positive(sigma2, "BrownianMotion.sigma2");
  return BrownianMotion{sigma2};
}

KernelSpec make_brownian_bridge(double sigma2) {
  require_positive(sigma2, "BrownianBridge.sigma2");
  return BrownianBridge{sigma2};
}

KernelSpec make_ornstein_uhlenbeck(double a, double sigma) {
  require_positive(a, "OrnsteinUhlenbeck.a");
  require_positive(sigma, "OrnsteinUhlenbeck.sigma");
  return OrnsteinUhlenbeck{a, sigma};
}

KernelSpec make_matern(double a, double sigma, double alpha, int d) {
  require_positive(a, "Matern.a");
  require_positive(sigma, "Matern.sigma");
  require_positive(alpha, "Matern.alpha");
  if (d < 1) fail(Errc::invalid_argument, "Matern.d must be a positive integer");
  return Matern{a, sigma, alpha, d};
}

KernelSpec make_tabulated(const Grid& grid, const Eigen::MatrixXd& g) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (g.rows() != n || g.cols() != n)
    fail(Errc::invalid_argument, "tabulated gram must be n x n with n = grid size");
  if (!g.allFinite()) fail(Errc::invalid_argument, "tabulated gram has non-finite entries");
  const double asym = (g - g.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8)
    warn("tabulated gram asymmetry " + std::to_string(asym) + " exceeds 1e-8; symmetrised");
  Tabulated tab;
  tab.grid = std::make_shared<const Grid>(grid);
  tab.gram = 0.5 * (g + g.transpose());
  return tab;
}

double eval(const KernelSpec& spec, double s, double t) {
  return std::visit(
      overloaded{
          [&](const BrownianMotion& k) {
            if (!(s >= 0.0) || !(t >= 0.0))
              fail(Errc::invalid_argument, "BrownianMotion defined for s, t >= 0");
            return k.sigma2 * std::min(s, t);
          },
          [&](const BrownianBridge& k) {
            if (!(s >= 0.0 && s <= 1.0) || !(t >= 0.0 && t <= 1.0))
              fail(Errc::invalid_argument, "BrownianBridge defined on [0, 1]");
            return k.sigma2 * (std::min(s, t) - s * t);
          },
          [&](const OrnsteinUhlenbeck& k) {
            if (!std::isfinite(s) || !std::isfinite(t))
              fail(Errc::invalid_argument, "non-finite evaluation point");
            return k.a * std::exp(-k.sigma * std::abs(s - t));
          },
          [&](const Matern& k) {
            if (!std::isfinite(s) || !std::isfinite(t))
              fail(Errc::invalid_argument, "non-finite evaluation point");
            return eval_matern(k, s, t);
          },
          [&](const Tabulated& k) {
            return k.gram(static_cast<Eigen::Index>(tabulated_index(k, s)),
                          static_cast<Eigen::Index>(tabulated_index(k, t)));
          },
      },
      spec);
}

Eigen::MatrixXd gram(const KernelSpec& spec, const Grid& grid) {
  if (const auto* tab = std::get_if<Tabulated>(&spec)) {
    if (!(*tab->grid == grid)) fail(Errc::grid_mismatch, "tabulated kernel grid differs");
    return tab->gram;
  }
  const auto n = static_cast<Eigen::Index>(grid.size());
  const auto nodes = grid.nodes();
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double v = eval(spec, nodes[static_cast<std::size_t>(i)],
                            nodes[static_cast<std::size_t>(j)]);
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

double trace_nu(const KernelSpec& spec, const Grid& grid) {
  double s = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double t = grid.nodes()[j];
    s += grid.weights()[j] * eval(spec, t, t);
  }
  return s;
}

KernelSpec scale_kernel(const KernelSpec& spec, double c) {
  require_positive(c, "scale factor");
  return std::visit(
      overloaded{
          [&](const BrownianMotion& k) -> KernelSpec { return BrownianMotion{k.sigma2 * c}; },
          [&](const BrownianBridge& k) -> KernelSpec { return BrownianBridge{k.sigma2 * c}; },
          [&](const OrnsteinUhlenbeck& k) -> KernelSpec {
            return OrnsteinUhlenbeck{k.a * c, k.sigma};
          },
          [&](const Matern& k) -> KernelSpec { return Matern{k.a * c, k.sigma, k.alpha, k.d}; },
          [&](const Tabulated& k) -> KernelSpec { return Tabulated{k.grid, k.gram * c}; },
      },
      spec);
}

bool is_tabulated(const KernelSpec& spec) noexcept {
  return std::holds_alternative<Tabulated>(spec);
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

nlohmann::json kernel_to_json_value(const KernelSpec& spec) {
  return std::visit(
      overloaded{
          [](const BrownianMotion& k) -> nlohmann::json {
            return {{"variant", "BrownianMotion"}, {"sigma2", k.sigma2}};
          },
          [](const BrownianBridge& k) -> nlohmann::json {
            return {{"variant", "BrownianBridge"}, {"sigma2", k.sigma2}};
          },
          [](const OrnsteinUhlenbeck& k) -> nlohmann::json {
            return {{"variant", "OrnsteinUhlenbeck"}, {"a", k.a}, {"sigma", k.sigma}};
          },
          [](const Matern& k) -> nlohmann::json {
            return {{"variant", "Matern"}, {"a", k.a}, {"sigma", k.sigma},
                    {"alpha", k.alpha}, {"d", k.d}};
          },
          [](const Tabulated& k) -> nlohmann::json {
            nlohmann::json rows = nlohmann::json::array();
            for (Eigen::Index i = 0; i < k.gram.rows(); ++i) {
              std::vector<double> row(k.gram.cols());
              for (Eigen::Index j = 0; j < k.gram.cols(); ++j)
                row[static_cast<std::size_t>(j)] = k.gram(i, j);
              rows.push_back(row);
            }
            return {{"variant", "Tabulated"}, {"grid", grid_to_json_value(*k.grid)},
                    {"gram", rows}};
          },
      },
      spec);
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) fail(Errc::invalid_argument, "kernel json: unknown field '" + key + "'");
  }
}

}  // namespace

std::string kernel_tag(const KernelSpec& spec) {
  return std::visit(
      overloaded{
          [](const BrownianMotion& k) { return "BrownianMotion{sigma2=" + num(k.sigma2) + "}"; },
          [](const BrownianBridge& k) { return "BrownianBridge{sigma2=" + num(k.sigma2) + "}"; },
          [](const OrnsteinUhlenbeck& k) {
            return "OrnsteinUhlenbeck{a=" + num(k.a) + ",sigma=" + num(k.sigma) + "}";
          },
          [](const Matern& k) {
            return "Matern{a=" + num(k.a) + ",sigma=" + num(k.sigma) + ",alpha=" +
                   num(k.alpha) + ",d=" + std::to_string(k.d) + "}";
          },
          [](const Tabulated& k) {
            return "Tabulated{n=" + std::to_string(k.grid->size()) + "}";
          },
      },
      spec);
}

std::string kernel_to_json(const KernelSpec& spec) {
  return dump_json(kernel_to_json_value(spec));
}

KernelSpec kernel_from_json(const std::string& text) {
  const auto j = parse_json(text);
  try {
    const auto variant = j.at("variant").get<std::string>();
    if (variant == "BrownianMotion") {
      reject_unknown(j, {"variant", "sigma2"});
      return make_brownian_motion(j.value("sigma2", 1.0));
    }
    if (variant == "BrownianBridge") {
      reject_unknown(j, {"variant", "sigma2"});
      return make_brownian_bridge(j.value("sigma2", 1.0));
    }
    if (variant == "OrnsteinUhlenbeck") {
      reject_unknown(j, {"variant", "a", "sigma"});
      return make_ornstein_uhlenbeck(j.value("a", 1.0), j.value("sigma", 1.0));
    }
    if (variant == "Matern") {
      reject_unknown(j, {"variant", "a", "sigma", "alpha", "d"});
      return make_matern(j.value("a", 1.0), j.value("sigma", 1.0), j.at("alpha").get<double>(),
                         j.value("d", 1));
    }
    if (variant == "Tabulated") {
      reject_unknown(j, {"variant", "grid", "gram", "gram_csv"});
      const Grid grid = grid_from_json_value(j.at("grid"));
      Eigen::MatrixXd g;
      if (j.contains("gram_csv")) {
        g = read_csv_matrix(j.at("gram_csv").get<std::string>());
      } else {
        const auto rows = j.at("gram").get<std::vector<std::vector<double>>>();
        g.resize(static_cast<Eigen::Index>(rows.size()),
                 rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (rows[i].size() != rows[0].size())
            fail(Errc::invalid_argument, "kernel json: ragged gram rows");
          for (std::size_t c = 0; c < rows[i].size(); ++c)
            g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
        }
      }
      return make_tabulated(grid, g);
    }
    fail(Errc::invalid_argument, "kernel json: unknown variant '" + variant + "'");
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_argument, std::string("kernel json: ") + e.what());
  }
}

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::invalid_argument, "cannot open csv '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        fail(Errc::invalid_argument, "csv '" + path + "': bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      fail(Errc::invalid_argument, "csv '" + path + "': ragged rows");
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < rows[i].size(); ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  return m;
}

}  // namespace kls
