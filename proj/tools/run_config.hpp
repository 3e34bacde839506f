#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kls/kls.h"

namespace kls_cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GridConfig {
  std::string rule;  // "uniform", "gauss" or "explicit"
  double a = 0.0;
  double b = 1.0;
  std::size_t n = 0;
  nlohmann::json explicit_grid;  // set when rule == "explicit"
};

// A truncation entry; nullopt means "full rank".
using Truncation = std::optional<std::size_t>;

/// Parsed and schema-checked run configuration. Unknown keys are rejected.
struct RunConfig {
  nlohmann::json kernel;
  GridConfig grid;
  std::size_t rank = 0;  // 0 = keep everything above drop_tol
  double drop_tol = 1e-12;
  std::optional<std::string> decomposition_dir;
  kls_law law{KLS_LAW_GAUSSIAN, 0.0};
  std::string law_name = "Gaussian";
  std::uint64_t seed = 0;

  std::optional<std::size_t> replicates;
  std::optional<std::size_t> m;
  std::vector<Truncation> truncations;
  kls_norm_kind norm = KLS_NORM_L2;
  std::optional<double> beta;
  std::vector<double> epsilons;
  std::optional<std::pair<std::size_t, std::size_t>> fit_range;
  int d = 1;
  double window = 0.1;
  double threshold = 0.01;
  double hypothesis_margin = 0.1;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace kls_cli
