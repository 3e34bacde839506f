// Drives the kls binary end to end.
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

fs::path scratch() {
  static const fs::path root = [] {
    auto p = fs::temp_directory_path() / ("kls_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& body) {
  const auto p = scratch() / (name + ".json");
  std::ofstream(p) << body;
  return p;
}

Run kls(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const auto o = scratch() / ("stdout" + std::to_string(counter));
  const auto e = scratch() / ("stderr" + std::to_string(counter++));
  const std::string cmd = env + " '" KLS_CLI_PATH "' " + args + " >'" + o.string() + "' 2>'" + e.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(o), slurp(e)};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

const char* kBm512 = R"({"kernel": {"variant": "BrownianMotion", "sigma2": 1},
  "grid": {"rule": "uniform", "a": 0, "b": 1, "n": 512}})";

std::string bm_with(const std::string& extra) {
  std::string s = kBm512;
  s.pop_back();
  return s + ", " + extra + "}";
}

}  // namespace

TEST_CASE("eig") {
  const auto cfg = write_config("eig", kBm512);
  const auto out = scratch() / "eig";
  const auto r = kls("eig --config '" + cfg.string() + "' --out '" + out.string() + "'");
  REQUIRE(r.code == 0);
  const auto mu = read_csv(out / "mu.csv");
  REQUIRE(mu.size() == 512);
  CHECK(std::stod(mu[0][0]) == doctest::Approx(0.405285).epsilon(1e-5));
  const auto ef = read_csv(out / "efuns.csv");
  CHECK(ef.size() == 512);
  CHECK(ef[0].size() == 512);
  CHECK(slurp(out / "decomposition.json").find("\"invariants\": \"ok\"") != std::string::npos);
  CHECK_FALSE(fs::exists(out / "mu.csv.tmp"));

  // A cached decomposition is reused by later commands.
  const auto cached = write_config("cached", bm_with(R"("decomposition_dir": ")" + out.string() +
                                                     R"(", "replicates": 3, "seed": 4)"));
  const auto fresh = write_config("fresh", bm_with(R"("replicates": 3, "seed": 4)"));
  CHECK(kls("sample --config '" + cached.string() + "' --out '" + (scratch() / "c1").string() + "'").code == 0);
  CHECK(kls("sample --config '" + fresh.string() + "' --out '" + (scratch() / "c2").string() + "'").code == 0);
  CHECK(slurp(scratch() / "c1" / "paths.csv") == slurp(scratch() / "c2" / "paths.csv"));

  const auto wrong = write_config("wrong", R"({"kernel": {"variant": "BrownianBridge"},
    "grid": {"rule": "uniform", "n": 512}, "decomposition_dir": ")" + out.string() + R"("})");
  CHECK(kls("eig --config '" + wrong.string() + "' --out '" + (scratch() / "w").string() + "'").code == 2);
}

TEST_CASE("constant kernel") {
  std::string gram = "[";
  for (int i = 0; i < 4; ++i) gram += std::string(i ? "," : "") + "[1,1,1,1]";
  gram += "]";
  const auto cfg = write_config("const", R"({"kernel": {"variant": "Tabulated", "gram": )" + gram +
                                             R"(, "grid": {"a": 0, "b": 1, "nodes": [0.125, 0.375, 0.625, 0.875],
    "weights": [0.25, 0.25, 0.25, 0.25], "rule_tag": "uniform_midpoint"}},
    "grid": {"rule": "uniform", "n": 4}})");
  const auto out = scratch() / "const";
  REQUIRE(kls("eig --config '" + cfg.string() + "' --out '" + out.string() + "'").code == 0);
  const auto mu = read_csv(out / "mu.csv");
  REQUIRE(mu.size() == 1);
  CHECK(std::stod(mu[0][0]) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("config errors exit 2") {
  const auto bad = write_config("bad", "{\"kernel\": ");
  const auto r = kls("eig --config '" + bad.string() + "' --out '" + (scratch() / "bad").string() + "'");
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());
  const auto unknown = write_config("unknown", bm_with(R"("colour": "red")"));
  CHECK(kls("eig --config '" + unknown.string() + "'").code == 2);
  const auto zero = write_config("zero", bm_with(R"("replicates": 0)"));
  CHECK(kls("sample --config '" + zero.string() + "' --out '" + (scratch() / "z").string() + "'").code == 2);
  CHECK(kls("eig --config '" + (scratch() / "missing.json").string() + "'").code == 2);
  CHECK(kls("eig").code == 2);
}

TEST_CASE("sample shape and determinism") {
  const auto cfg = write_config("sample", bm_with(R"("replicates": 100, "m": "full", "seed": 12345)"));
  const auto a = scratch() / "sa", b = scratch() / "sb", c = scratch() / "sc", d = scratch() / "sd";
  REQUIRE(kls("sample --config '" + cfg.string() + "' --out '" + a.string() + "' --threads 1").code == 0);
  REQUIRE(kls("sample --config '" + cfg.string() + "' --out '" + b.string() + "' --threads 1").code == 0);
  REQUIRE(kls("sample --config '" + cfg.string() + "' --out '" + c.string() + "' --threads 8").code == 0);
  REQUIRE(kls("sample --config '" + cfg.string() + "' --out '" + d.string() + "'", "KLS_THREADS=3").code == 0);
  const auto rows = read_csv(a / "paths.csv");
  REQUIRE(rows.size() == 100);
  CHECK(rows[0].size() == 514);
  CHECK(rows[7][0] == "12345");
  CHECK(rows[7][1] == "7");
  for (const auto& dir : {b, c, d}) {
    CHECK(slurp(dir / "paths.csv") == slurp(a / "paths.csv"));
    CHECK(slurp(dir / "manifest.json") == slurp(a / "manifest.json"));
  }
  const auto m = slurp(a / "manifest.json");
  CHECK(m.find("\"seed\": 12345") != std::string::npos);
  CHECK(m.find("\"law\": \"Gaussian\"") != std::string::npos);
  CHECK(m.find("\"replicates\": 100") != std::string::npos);

  const auto e = scratch() / "se";
  REQUIRE(kls("sample --config '" + cfg.string() + "' --out '" + e.string() + "' --seed 1").code == 0);
  CHECK(slurp(e / "paths.csv") != slurp(a / "paths.csv"));
  CHECK(read_csv(e / "paths.csv")[0][0] == "1");
}

TEST_CASE("truncation") {
  const auto cfg = write_config("trunc", bm_with(R"("replicates": 2000, "truncations": [0, 10, "full"], "seed": 3)"));
  const auto out = scratch() / "trunc";
  REQUIRE(kls("truncation --config '" + cfg.string() + "' --out '" + out.string() + "'").code == 0);
  const auto rows = read_csv(out / "truncation.csv");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0][3] == "predicted_tail");
  CHECK(std::stod(rows[1][3]) == doctest::Approx(0.5).epsilon(1e-9));
  // Analytic tail sum_{i > 10} ((i - 1/2) pi)^-2 = 0.0101237.
  CHECK(std::stod(rows[2][3]) == doctest::Approx(0.0101237).epsilon(2e-3));
  CHECK(std::stod(rows[3][3]) == 0.0);
  CHECK(std::stod(rows[3][1]) == 0.0);
  CHECK(fs::exists(out / "truncation.json"));
}

TEST_CASE("certify") {
  const auto cfg = write_config("certify", bm_with(R"("d": 1)"));
  const auto r = kls("certify --config '" + cfg.string() + "' --out '" + (scratch() / "cert").string() + "'");
  REQUIRE(r.code == 0);
  const auto pos = r.out.find("for s in (0, ");
  REQUIRE(pos != std::string::npos);
  const double hi = std::stod(r.out.substr(pos + 13));
  CHECK(hi == doctest::Approx(0.5).epsilon(0.1));
  CHECK(fs::exists(scratch() / "cert" / "certificate.json"));
  CHECK(fs::exists(scratch() / "cert" / "decay.csv"));
}

TEST_CASE("smallball hypothesis boundary exits 4") {
  const auto cfg = write_config("sb", bm_with(R"("beta": 0.5, "replicates": 10000,
    "epsilons": [0.05, 0.08, 0.12, 0.2, 0.3])"));
  const auto r = kls("smallball --config '" + cfg.string() + "' --out '" + (scratch() / "sb").string() + "'");
  CHECK(r.code == 4);
  CHECK(r.err.find("hypothesis") != std::string::npos);
}

TEST_CASE("probe") {
  const auto cfg = write_config("probe", bm_with(R"("beta": 0.75, "replicates": 200, "seed": 8)"));
  const auto out = scratch() / "probe";
  REQUIRE(kls("probe --config '" + cfg.string() + "' --out '" + out.string() + "'").code == 0);
  const auto j = slurp(out / "probe.json");
  CHECK(j.find("\"verdict\": \"finite\"") != std::string::npos);
  CHECK(read_csv(out / "probe.csv").size() == 513);
}
