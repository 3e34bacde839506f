#include "run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace kls_cli {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys = {
    "kernel",   "grid",     "rank",   "drop_tol",   "decomposition_dir", "law",
    "seed",     "replicates", "m",    "truncations", "norm",             "beta",
    "epsilons", "fit_range", "d",     "window",     "threshold",         "hypothesis_margin"};

[[noreturn]] void bad(const std::string& what) { throw ConfigError(what); }

double number(const json& j, const char* key) {
  if (!j.is_number()) bad(std::string("'") + key + "' must be a number");
  return j.get<double>();
}

std::size_t count(const json& j, const char* key) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    bad(std::string("'") + key + "' must be a non-negative integer");
  return j.get<std::size_t>();
}

GridConfig parse_grid(const json& j) {
  if (!j.is_object()) bad("'grid' must be an object");
  GridConfig g;
  if (j.contains("nodes") || j.contains("weights")) {
    for (const auto& [k, v] : j.items())
      if (k != "a" && k != "b" && k != "nodes" && k != "weights" && k != "rule_tag")
        bad("grid: unknown field '" + k + "'");
    g.rule = "explicit";
    g.explicit_grid = j;
    if (!g.explicit_grid.contains("rule_tag")) g.explicit_grid["rule_tag"] = "weighted";
    return g;
  }
  for (const auto& [k, v] : j.items())
    if (k != "rule" && k != "a" && k != "b" && k != "n") bad("grid: unknown field '" + k + "'");
  g.rule = j.value("rule", std::string("uniform"));
  if (g.rule != "uniform" && g.rule != "gauss") bad("grid.rule must be 'uniform' or 'gauss'");
  g.a = j.contains("a") ? number(j.at("a"), "grid.a") : 0.0;
  g.b = j.contains("b") ? number(j.at("b"), "grid.b") : 1.0;
  if (!j.contains("n")) bad("grid.n is required");
  g.n = count(j.at("n"), "grid.n");
  return g;
}

void parse_law(const json& j, RunConfig& cfg) {
  std::string variant;
  double dof = 0.0;
  if (j.is_string()) {
    variant = j.get<std::string>();
  } else if (j.is_object()) {
    for (const auto& [k, v] : j.items())
      if (k != "variant" && k != "dof") bad("law: unknown field '" + k + "'");
    if (!j.contains("variant") || !j.at("variant").is_string()) bad("law.variant is required");
    variant = j.at("variant").get<std::string>();
    if (j.contains("dof")) dof = number(j.at("dof"), "law.dof");
  } else {
    bad("'law' must be a string or an object");
  }
  if (variant == "Gaussian") {
    cfg.law = {KLS_LAW_GAUSSIAN, 0.0};
  } else if (variant == "Rademacher") {
    cfg.law = {KLS_LAW_RADEMACHER, 0.0};
  } else if (variant == "StudentT") {
    if (!(dof > 4.0)) bad("law StudentT needs dof > 4");
    cfg.law = {KLS_LAW_STUDENT_T, dof};
  } else {
    bad("unknown law '" + variant + "'");
  }
  cfg.law_name = variant;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) bad("config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!kKnownKeys.count(k)) bad("unknown config field '" + k + "'");

  RunConfig cfg;
  if (!j.contains("kernel") || !j.at("kernel").is_object()) bad("'kernel' object is required");
  cfg.kernel = j.at("kernel");
  if (!j.contains("grid")) bad("'grid' is required");
  cfg.grid = parse_grid(j.at("grid"));

  if (j.contains("rank")) cfg.rank = count(j.at("rank"), "rank");
  if (j.contains("drop_tol")) {
    cfg.drop_tol = number(j.at("drop_tol"), "drop_tol");
    if (cfg.drop_tol < 0.0) bad("drop_tol must be >= 0");
  }
  if (j.contains("decomposition_dir")) {
    if (!j.at("decomposition_dir").is_string()) bad("'decomposition_dir' must be a string");
    cfg.decomposition_dir = j.at("decomposition_dir").get<std::string>();
  }
  if (j.contains("law")) parse_law(j.at("law"), cfg);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) bad("'seed' must be a non-negative integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("replicates")) cfg.replicates = count(j.at("replicates"), "replicates");
  if (j.contains("m")) {
    const auto& m = j.at("m");
    if (!(m.is_string() && m.get<std::string>() == "full")) cfg.m = count(m, "m");
  }
  if (j.contains("truncations")) {
    if (!j.at("truncations").is_array()) bad("'truncations' must be an array");
    for (const auto& t : j.at("truncations")) {
      if (t.is_string() && t.get<std::string>() == "full")
        cfg.truncations.push_back(std::nullopt);
      else
        cfg.truncations.push_back(count(t, "truncations[]"));
    }
  }
  if (j.contains("norm")) {
    const auto& n = j.at("norm");
    if (n == "L2")
      cfg.norm = KLS_NORM_L2;
    else if (n == "power")
      cfg.norm = KLS_NORM_POWER;
    else
      bad("'norm' must be \"L2\" or \"power\"");
  }
  if (j.contains("beta")) cfg.beta = number(j.at("beta"), "beta");
  if (j.contains("epsilons")) {
    if (!j.at("epsilons").is_array()) bad("'epsilons' must be an array");
    for (const auto& e : j.at("epsilons")) cfg.epsilons.push_back(number(e, "epsilons[]"));
  }
  if (j.contains("fit_range")) {
    const auto& fr = j.at("fit_range");
    if (!fr.is_array() || fr.size() != 2) bad("'fit_range' must be [lo, hi]");
    cfg.fit_range = {count(fr[0], "fit_range[0]"), count(fr[1], "fit_range[1]")};
  }
  if (j.contains("d")) {
    const auto d = count(j.at("d"), "d");
    if (d < 1) bad("'d' must be positive");
    cfg.d = static_cast<int>(d);
  }
  if (j.contains("window")) cfg.window = number(j.at("window"), "window");
  if (j.contains("threshold")) cfg.threshold = number(j.at("threshold"), "threshold");
  if (j.contains("hypothesis_margin"))
    cfg.hypothesis_margin = number(j.at("hypothesis_margin"), "hypothesis_margin");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace kls_cli
