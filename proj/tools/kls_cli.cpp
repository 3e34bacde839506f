// kls: command-line front end over the libkls C API.
//
//   kls <eig|sample|truncation|smallball|certify|probe> --config PATH --out DIR
//       [--seed N] [--threads N]
//
// Exit codes: 0 success, 2 configuration error, 3 numeric failure,
// 4 hypothesis of the underlying result violated.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "kls/kls.h"
#include "run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using kls_cli::ConfigError;
using kls_cli::RunConfig;

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumeric = 3, kHypothesis = 4 };

struct Failure {
  int code;
  std::string message;
};

int exit_code_for(kls_status s) {
  switch (s) {
    case KLS_ERR_INVALID_ARGUMENT:
    case KLS_ERR_INVALID_DENSITY:
    case KLS_ERR_DEGENERATE_MEASURE:
    case KLS_ERR_UNSUPPORTED_POINT:
    case KLS_ERR_GRID_MISMATCH:
    case KLS_ERR_UNSUPPORTED:
      return kConfig;
    case KLS_ERR_HYPOTHESIS_VIOLATED:
      return kHypothesis;
    default:
      return kNumeric;
  }
}

void check(kls_status s, const char* what) {
  if (s != KLS_OK)
    throw Failure{exit_code_for(s), std::string(what) + ": " + kls_status_name(s) + ": " +
                                        kls_last_error()};
}

struct GridFree {
  void operator()(kls_grid* g) const { kls_grid_free(g); }
};
struct KernelFree {
  void operator()(kls_kernel* k) const { kls_kernel_free(k); }
};
struct DecFree {
  void operator()(kls_decomposition* d) const { kls_decomposition_free(d); }
};
struct StringFree {
  void operator()(char* s) const { kls_string_free(s); }
};
using GridPtr = std::unique_ptr<kls_grid, GridFree>;
using KernelPtr = std::unique_ptr<kls_kernel, KernelFree>;
using DecPtr = std::unique_ptr<kls_decomposition, DecFree>;
using StringPtr = std::unique_ptr<char, StringFree>;

std::string take_string(char* raw) { return StringPtr(raw).get(); }

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Written to DIR/name.tmp, then renamed over DIR/name.
void write_atomic(const fs::path& dir, const std::string& name, const std::string& content) {
  const fs::path target = dir / name;
  const fs::path tmp = dir / (name + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Failure{kNumeric, "cannot write " + tmp.string()};
    out << content;
    if (!out.flush()) throw Failure{kNumeric, "write failed for " + tmp.string()};
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Failure{kNumeric, "cannot rename " + tmp.string() + ": " + ec.message()};
}

std::string csv_rows(const std::vector<double>& data, std::size_t rows, std::size_t cols) {
  std::string out;
  out.reserve(rows * cols * 24);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (j) out += ',';
      out += fmt17(data[i * cols + j]);
    }
    out += '\n';
  }
  return out;
}

std::vector<double> read_csv_numbers(const fs::path& path, std::size_t& rows, std::size_t& cols) {
  std::ifstream in(path);
  if (!in) throw Failure{kConfig, "cannot read " + path.string()};
  std::vector<double> data;
  rows = 0;
  cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      data.push_back(std::strtod(cell.c_str(), nullptr));
      ++c;
    }
    if (rows == 0) cols = c;
    if (c != cols) throw Failure{kConfig, "ragged csv " + path.string()};
    ++rows;
  }
  return data;
}

struct Context {
  RunConfig cfg;
  fs::path out_dir;
  unsigned threads = 1;
  GridPtr grid;
  KernelPtr kernel;
  DecPtr dec;
  std::string kernel_tag;

  std::size_t rank() const { return kls_decomposition_rank(dec.get()); }
  std::size_t n() const { return kls_decomposition_grid_size(dec.get()); }

  std::vector<double> mu() const {
    std::vector<double> out(rank());
    kls_decomposition_mu(dec.get(), out.data());
    return out;
  }

  json provenance() const {
    json p;
    p["seed"] = cfg.seed;
    p["grid_size"] = n();
    p["rank"] = rank();
    p["kernel"] = kernel_tag;
    p["kernel_json"] = json::parse(take_string([&] {
      char* s = nullptr;
      check(kls_kernel_to_json(kernel.get(), &s), "kernel");
      return s;
    }()));
    return p;
  }
};

void build_grid(Context& ctx) {
  kls_grid* g = nullptr;
  const auto& gc = ctx.cfg.grid;
  if (gc.rule == "explicit")
    check(kls_grid_from_json(gc.explicit_grid.dump().c_str(), &g), "grid");
  else if (gc.rule == "gauss")
    check(kls_grid_gauss(gc.a, gc.b, gc.n, &g), "grid");
  else
    check(kls_grid_uniform(gc.a, gc.b, gc.n, &g), "grid");
  ctx.grid.reset(g);
}

void build_kernel(Context& ctx) {
  kls_kernel* k = nullptr;
  check(kls_kernel_from_json(ctx.cfg.kernel.dump().c_str(), &k), "kernel");
  ctx.kernel.reset(k);
  char* tag = nullptr;
  check(kls_kernel_tag(k, &tag), "kernel");
  ctx.kernel_tag = take_string(tag);
}

void load_cached_decomposition(Context& ctx, const fs::path& dir) {
  std::ifstream in(dir / "decomposition.json");
  if (!in) throw Failure{kConfig, "no decomposition.json in " + dir.string()};
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw Failure{kConfig, std::string("bad decomposition.json: ") + e.what()};
  }
  std::size_t mr = 0, mc = 0, er = 0, ec = 0;
  const auto mu = read_csv_numbers(dir / "mu.csv", mr, mc);
  const auto efuns = read_csv_numbers(dir / "efuns.csv", er, ec);
  if (mc != 1 || er != mr || ec != kls_grid_size(ctx.grid.get()))
    throw Failure{kConfig, "cached decomposition does not match the configured grid"};
  if (meta.value("kernel", json()) != json::parse(take_string([&] {
        char* s = nullptr;
        check(kls_kernel_to_json(ctx.kernel.get(), &s), "kernel");
        return s;
      }())))
    throw Failure{kConfig, "cached decomposition was computed for a different kernel"};
  kls_decomposition* d = nullptr;
  check(kls_decomposition_create(ctx.grid.get(), mu.data(), efuns.data(), mr,
                                 ctx.kernel_tag.c_str(), meta.value("drop_tol", 0.0), &d),
        "cached decomposition");
  ctx.dec.reset(d);
}

void build_decomposition(Context& ctx) {
  build_grid(ctx);
  build_kernel(ctx);
  if (ctx.cfg.decomposition_dir) {
    load_cached_decomposition(ctx, *ctx.cfg.decomposition_dir);
    return;
  }
  kls_decomposition* d = nullptr;
  check(kls_decompose(ctx.kernel.get(), ctx.grid.get(), ctx.cfg.rank, ctx.cfg.drop_tol, &d),
        "decompose");
  ctx.dec.reset(d);
}

kls_decay_fit decay_fit(const Context& ctx) {
  kls_decay_fit fit{};
  const auto [lo, hi] = ctx.cfg.fit_range.value_or(std::pair<std::size_t, std::size_t>{0, 0});
  check(kls_fit_decay(ctx.dec.get(), lo, hi, &fit), "fit_decay");
  return fit;
}

json fit_json(const kls_decay_fit& f) {
  return {{"alpha_hat", f.alpha_hat},       {"log_c_hat", f.log_c_hat},
          {"fit_range", {f.fit_lo, f.fit_hi}}, {"rms_residual", f.rms_residual},
          {"alpha_ci", {f.alpha_ci_low, f.alpha_ci_high}}};
}

std::size_t require_replicates(const RunConfig& cfg, std::size_t minimum) {
  if (!cfg.replicates || *cfg.replicates < minimum)
    throw Failure{kConfig, "'replicates' must be given and >= " + std::to_string(minimum)};
  return *cfg.replicates;
}

double require_beta(const RunConfig& cfg) {
  if (!cfg.beta) throw Failure{kConfig, "'beta' is required for this command"};
  return *cfg.beta;
}

// ---- subcommands -------------------------------------------------------

int cmd_eig(Context& ctx) {
  build_decomposition(ctx);
  const std::size_t r = ctx.rank(), n = ctx.n();
  const auto status = kls_check_invariants(ctx.dec.get(), ctx.kernel.get());
  if (status != KLS_OK)
    throw Failure{kNumeric, std::string("decomposition invariant violated: ") + kls_last_error()};

  const auto mu = ctx.mu();
  std::vector<double> efuns(r * n);
  kls_decomposition_efuns(ctx.dec.get(), efuns.data());
  double trace = 0.0;
  check(kls_kernel_trace(ctx.kernel.get(), ctx.grid.get(), &trace), "trace");
  double sum = 0.0;
  for (double m : mu) sum += m;

  json meta = ctx.provenance();
  meta.erase("seed");
  meta["kernel"] = meta["kernel_json"];
  meta.erase("kernel_json");
  meta["kernel_tag"] = ctx.kernel_tag;
  meta["grid"] = json::parse(take_string([&] {
    char* s = nullptr;
    check(kls_grid_to_json(ctx.grid.get(), &s), "grid");
    return s;
  }()));
  meta["drop_tol"] = kls_decomposition_drop_tol(ctx.dec.get());
  meta["trace_nu"] = trace;
  meta["sum_mu"] = sum;
  meta["invariants"] = "ok";

  write_atomic(ctx.out_dir, "mu.csv", csv_rows(mu, r, 1));
  write_atomic(ctx.out_dir, "efuns.csv", csv_rows(efuns, r, n));
  write_atomic(ctx.out_dir, "decomposition.json", meta.dump(2) + "\n");
  std::cout << "rank " << r << ", mu_1 = " << fmt17(mu.front()) << ", trace = " << fmt17(trace)
            << '\n';
  return kOk;
}

int cmd_sample(Context& ctx) {
  const std::size_t replicates = require_replicates(ctx.cfg, 1);
  build_decomposition(ctx);
  const std::size_t r = ctx.rank(), n = ctx.n();
  const std::size_t m = ctx.cfg.m.value_or(r);
  std::vector<double> values(replicates * n);
  check(kls_sample_batch(ctx.dec.get(), ctx.cfg.law, m, replicates, ctx.cfg.seed, 0, ctx.threads,
                         values.data(), nullptr),
        "sample_batch");

  std::string csv;
  csv.reserve(replicates * (n + 2) * 24);
  for (std::size_t k = 0; k < replicates; ++k) {
    csv += std::to_string(ctx.cfg.seed);
    csv += ',';
    csv += std::to_string(k);
    for (std::size_t j = 0; j < n; ++j) {
      csv += ',';
      csv += fmt17(values[k * n + j]);
    }
    csv += '\n';
  }
  json manifest = ctx.provenance();
  manifest["law"] = ctx.cfg.law_name;
  if (ctx.cfg.law.kind == KLS_LAW_STUDENT_T) manifest["dof"] = ctx.cfg.law.dof;
  manifest["m"] = m;
  manifest["replicates"] = replicates;
  manifest["columns"] = "seed,replicate_index,values[0..n-1]";
  write_atomic(ctx.out_dir, "paths.csv", csv);
  write_atomic(ctx.out_dir, "manifest.json", manifest.dump(2) + "\n");
  return kOk;
}

int cmd_truncation(Context& ctx) {
  const std::size_t replicates = require_replicates(ctx.cfg, 100);
  if (ctx.cfg.truncations.empty()) throw Failure{kConfig, "'truncations' is required"};
  const double beta = ctx.cfg.norm == KLS_NORM_POWER ? require_beta(ctx.cfg) : 1.0;
  build_decomposition(ctx);
  std::vector<std::size_t> ms;
  for (const auto& t : ctx.cfg.truncations) ms.push_back(t.value_or(ctx.rank()));
  std::vector<double> emp(ms.size()), se(ms.size()), pred(ms.size());
  check(kls_truncation_curve(ctx.dec.get(), ctx.cfg.law, ctx.cfg.norm, beta, ms.data(), ms.size(),
                             replicates, ctx.cfg.seed, ctx.threads, emp.data(), se.data(),
                             pred.data()),
        "truncation_error_curve");

  std::string csv = "m,empirical_mse,empirical_stderr,predicted_tail\n";
  for (std::size_t k = 0; k < ms.size(); ++k)
    csv += std::to_string(ms[k]) + ',' + fmt17(emp[k]) + ',' + fmt17(se[k]) + ',' +
           fmt17(pred[k]) + '\n';
  json report = ctx.provenance();
  report["replicates"] = replicates;
  report["law"] = ctx.cfg.law_name;
  report["norm"] = ctx.cfg.norm == KLS_NORM_L2 ? "L2" : "power";
  if (ctx.cfg.norm == KLS_NORM_POWER) report["beta"] = beta;
  report["truncations"] = ms;
  report["empirical_mse"] = emp;
  report["empirical_stderr"] = se;
  report["predicted_tail"] = pred;
  write_atomic(ctx.out_dir, "truncation.csv", csv);
  write_atomic(ctx.out_dir, "truncation.json", report.dump(2) + "\n");
  return kOk;
}

int cmd_smallball(Context& ctx) {
  const double beta = require_beta(ctx.cfg);
  const std::size_t replicates = require_replicates(ctx.cfg, 10000);
  if (ctx.cfg.epsilons.empty()) throw Failure{kConfig, "'epsilons' is required"};
  build_decomposition(ctx);
  const auto fit = decay_fit(ctx);
  const std::size_t ne = ctx.cfg.epsilons.size();
  std::vector<double> survival(ne);
  std::vector<int> used(ne);
  double fitted = 0.0, predicted = 0.0;
  check(kls_small_ball(ctx.dec.get(), &fit, beta, ctx.cfg.epsilons.data(), ne, replicates,
                       ctx.cfg.seed, ctx.cfg.law, ctx.threads, ctx.cfg.hypothesis_margin,
                       survival.data(), used.data(), &fitted, &predicted),
        "small_ball_estimate");

  std::string csv = "epsilon,survival,used\n";
  for (std::size_t k = 0; k < ne; ++k)
    csv += fmt17(ctx.cfg.epsilons[k]) + ',' + fmt17(survival[k]) + ',' +
           std::to_string(used[k]) + '\n';
  json report = ctx.provenance();
  report["replicates"] = replicates;
  report["law"] = ctx.cfg.law_name;
  report["beta"] = beta;
  report["epsilons"] = ctx.cfg.epsilons;
  report["survival"] = survival;
  report["fitted_exponent"] = fitted;
  report["predicted_exponent"] = predicted;
  report["decay_fit"] = fit_json(fit);
  write_atomic(ctx.out_dir, "smallball.csv", csv);
  write_atomic(ctx.out_dir, "smallball.json", report.dump(2) + "\n");
  std::cout << "small-ball exponent: fitted " << fmt17(fitted) << ", predicted "
            << fmt17(predicted) << '\n';
  return kOk;
}

int cmd_certify(Context& ctx) {
  build_decomposition(ctx);
  const auto fit = decay_fit(ctx);
  kls_certificate cert{};
  char* basis_raw = nullptr;
  check(kls_smoothness_certificate(&fit, ctx.cfg.d, &cert, &basis_raw), "certificate");
  const std::string basis = take_string(basis_raw);

  const auto mu = ctx.mu();
  std::string csv = "i,mu,fitted\n";
  for (std::size_t i = 1; i <= mu.size(); ++i)
    csv += std::to_string(i) + ',' + fmt17(mu[i - 1]) + ',' +
           fmt17(std::exp(fit.log_c_hat - fit.alpha_hat * std::log(static_cast<double>(i)))) +
           '\n';
  json report = ctx.provenance();
  report.erase("seed");
  report["decay_fit"] = fit_json(fit);
  report["m_hat"] = cert.m_hat;
  report["d"] = cert.d;
  report["certified_range"] =
      cert.empty ? json::array() : json::array({cert.range_low, cert.range_high});
  report["basis"] = basis;
  write_atomic(ctx.out_dir, "decay.csv", csv);
  write_atomic(ctx.out_dir, "certificate.json", report.dump(2) + "\n");

  if (cert.empty)
    std::cout << "no Besov smoothness certified (m_hat = " << fmt17(cert.m_hat)
              << " <= d/2)\n";
  else
    std::cout << "certified: paths in B^s_{2,2}(T) for s in (0, " << fmt17(cert.range_high)
              << ")  [alpha_hat = " << fmt17(fit.alpha_hat) << ", m_hat = " << fmt17(cert.m_hat)
              << ", d = " << cert.d << "]\n";
  std::cout << basis << '\n';
  return kOk;
}

int cmd_probe(Context& ctx) {
  const double beta = require_beta(ctx.cfg);
  const std::size_t replicates = require_replicates(ctx.cfg, 100);
  build_decomposition(ctx);
  std::vector<double> means(ctx.rank());
  double fraction = 0.0;
  check(kls_dichotomy_probe(ctx.dec.get(), ctx.cfg.law, beta, replicates, ctx.cfg.seed,
                            ctx.threads, ctx.cfg.window, ctx.cfg.threshold, &fraction,
                            means.data()),
        "dichotomy_probe");
  const auto fit = decay_fit(ctx);
  kls_summability sum{};
  check(kls_summability_check(ctx.dec.get(), beta, &fit, &sum), "summability");
  const char* verdicts[] = {"finite", "infinite", "indeterminate"};

  std::string csv = "m,mean_partial_sum\n";
  for (std::size_t i = 0; i < means.size(); ++i)
    csv += std::to_string(i + 1) + ',' + fmt17(means[i]) + '\n';
  json report = ctx.provenance();
  report["replicates"] = replicates;
  report["law"] = ctx.cfg.law_name;
  report["beta"] = beta;
  report["window"] = ctx.cfg.window;
  report["threshold"] = ctx.cfg.threshold;
  report["converged_fraction"] = fraction;
  report["summability"] = {{"partial", sum.partial},
                           {"tail_low", std::isfinite(sum.tail_low) ? json(sum.tail_low) : json()},
                           {"tail_high", std::isfinite(sum.tail_high) ? json(sum.tail_high) : json()},
                           {"verdict", verdicts[sum.verdict]}};
  report["decay_fit"] = fit_json(fit);
  write_atomic(ctx.out_dir, "probe.csv", csv);
  write_atomic(ctx.out_dir, "probe.json", report.dump(2) + "\n");
  std::cout << "converged fraction " << fmt17(fraction) << "; sum mu^beta verdict "
            << verdicts[sum.verdict] << '\n';
  return kOk;
}

unsigned default_threads() {
  if (const char* env = std::getenv("KLS_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Karhunen-Loeve decompositions, KL path sampling and convergence studies"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed_override = 0;
  unsigned threads = 0;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(Context&);
  };
  const Command commands[] = {
      {"eig", "eigendecomposition: mu.csv, efuns.csv, decomposition.json", cmd_eig},
      {"sample", "KL sample paths: paths.csv, manifest.json", cmd_sample},
      {"truncation", "truncation-error curve: truncation.csv/json", cmd_truncation},
      {"smallball", "small-ball exponent estimate: smallball.csv/json", cmd_smallball},
      {"certify", "Besov smoothness certificate: decay.csv, certificate.json", cmd_certify},
      {"probe", "convergence dichotomy probe: probe.csv/json", cmd_probe},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) subs.push_back(app.add_subcommand(c.name, c.help));
  for (auto* sub : subs) {
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed_override, "overrides the config seed");
    sub->add_option("--threads", threads, "worker threads (env KLS_THREADS)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    Context ctx;
    try {
      ctx.cfg = kls_cli::load_config(config_path);
      if (subs[i]->count("--seed")) ctx.cfg.seed = seed_override;
      ctx.threads = subs[i]->count("--threads") ? std::max(1u, threads) : default_threads();
      ctx.out_dir = out_dir;
      std::error_code ec;
      fs::create_directories(ctx.out_dir, ec);
      if (ec) throw Failure{kConfig, "cannot create output directory " + out_dir};
      return commands[i].run(ctx);
    } catch (const ConfigError& e) {
      std::cerr << "kls " << commands[i].name << ": config error: " << e.what() << '\n';
      return kConfig;
    } catch (const Failure& f) {
      std::cerr << "kls " << commands[i].name << ": " << f.message << '\n';
      if (f.code == kHypothesis)
        std::cerr << "the requested estimate is only defined when alpha * beta > 1 "
                     "(eigenvalue decay exponent times beta); choose a larger beta\n";
      return f.code;
    } catch (const std::exception& e) {
      std::cerr << "kls " << commands[i].name << ": " << e.what() << '\n';
      return kNumeric;
    }
  }
  return kConfig;
}
