#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hydrolimit/cli.hpp"
#include "hydrolimit/manifest.hpp"

using namespace hydrolimit;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "hydrolimit");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct Scratch {
  fs::path root;
  explicit Scratch(const std::string& name) : root(fs::temp_directory_path() / name) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Scratch() { fs::remove_all(root); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(root / name) << text;
    return root / name;
  }
};

const char* kMinimal = R"([model]
type = "asep"
[scaling]
lambda = 1
mu = 1
[study]
N = [128]
T = 0.05
)";

const char* kSmall = R"([model]
type = "asep"
initial_A = [0.5, 0.3]
[scaling]
mu = 2
[study]
N = [32, 64]
replicas = 4
bins = 8
T = 0.01
checkpoints = [0.005, 0.01]
[pde]
M = 64
[output]
configurations = true
)";

std::vector<std::string> csv_files(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") names.push_back(e.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

TEST_CASE("converge on the minimal config") {
  Scratch s("hydrolimit_cli_min");
  const auto cfg = s.write("min.toml", kMinimal);
  const auto r = run({"converge", "--config", cfg.string(), "--out", (s.root / "o").string()});
  CHECK(r.code == 0);
  for (const char* f : {"distances.csv", "profiles_N128.csv", "manifest.json", "convergence.csv",
                        "dispersion.csv"}) {
    CHECK_MESSAGE(fs::exists(s.root / "o" / f), f);
  }
  CHECK(slurp(s.root / "o" / "distances.csv").rfind("N,t,norm,distance,replicas,drift_sign\n", 0) ==
        0);
  // one machine-readable line on stdout
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);
  CHECK(nlohmann::json::parse(r.out).is_object());

  const auto manifest = nlohmann::json::parse(slurp(s.root / "o" / "manifest.json"));
  CHECK(manifest["partial"] == false);
  CHECK(manifest["command"] == "converge");
  for (const auto& out : manifest["outputs"]) {
    const auto name = out["file"].get<std::string>();
    CHECK_MESSAGE(out["sha256"] == sha256_file(s.root / "o" / name), name);
  }
}

TEST_CASE("outputs are byte-identical across runs and thread counts") {
  Scratch s("hydrolimit_cli_det");
  const auto cfg = s.write("small.toml", kSmall);
  for (const char* cmd : {"simulate", "solve-pde", "converge", "martingale", "residual"}) {
    const auto a = (s.root / (std::string(cmd) + "_a")).string();
    const auto b = (s.root / (std::string(cmd) + "_b")).string();
    const auto c = (s.root / (std::string(cmd) + "_c")).string();
    REQUIRE(run({cmd, "--config", cfg.string(), "--out", a, "--threads", "1"}).code == 0);
    REQUIRE(run({cmd, "--config", cfg.string(), "--out", b, "--threads", "1"}).code == 0);
    REQUIRE(run({cmd, "--config", cfg.string(), "--out", c, "--threads", "3"}).code == 0);
    const auto files = csv_files(a);
    CHECK_MESSAGE(!files.empty(), cmd);
    CHECK(files == csv_files(b));
    CHECK(files == csv_files(c));
    for (const auto& f : files) {
      const auto body = slurp(fs::path(a) / f);
      CHECK_MESSAGE(body == slurp(fs::path(b) / f), cmd, " ", f);
      CHECK_MESSAGE(body == slurp(fs::path(c) / f), cmd, " ", f);
    }
  }
}

TEST_CASE("per-command outputs") {
  Scratch s("hydrolimit_cli_files");
  const auto cfg = s.write("small.toml", kSmall);
  const auto expect = [&](const char* cmd, std::vector<std::string> files) {
    const auto dir = s.root / cmd;
    REQUIRE(run({cmd, "--config", cfg.string(), "--out", dir.string()}).code == 0);
    files.push_back("manifest.json");
    for (const auto& f : files) CHECK_MESSAGE(fs::exists(dir / f), cmd, " ", f);
  };
  expect("simulate", {"simulate.csv", "profiles_N32.csv", "profiles_N64.csv",
                      "configurations_N32.csv"});
  expect("solve-pde", {"pde_profiles.csv", "pde_summary.csv"});
  expect("martingale", {"martingale.csv", "martingale_path_N32.csv", "martingale_path_N64.csv"});
  expect("residual", {"residuals.csv", "residual_flags.csv"});
}

TEST_CASE("seed override") {
  Scratch s("hydrolimit_cli_seed");
  const auto cfg = s.write("small.toml", kSmall);
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (s.root / "a").string()}).code == 0);
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (s.root / "b").string(), "--seed",
               "77"})
              .code == 0);
  CHECK(slurp(s.root / "a" / "profiles_N64.csv") != slurp(s.root / "b" / "profiles_N64.csv"));
  const auto manifest = nlohmann::json::parse(slurp(s.root / "b" / "manifest.json"));
  CHECK(manifest["seed"] == 77);
}

TEST_CASE("error exits") {
  Scratch s("hydrolimit_cli_err");
  const auto missing = run({"converge", "--config", (s.root / "nope.toml").string(), "--out",
                            (s.root / "o").string()});
  CHECK(missing.code == kExitConfig);
  CHECK_FALSE(missing.err.empty());
  CHECK(missing.out.empty());

  const auto typo = s.write("typo.toml", std::string(kMinimal) + "lamda = 2\n");
  const auto bad = run({"converge", "--config", typo.string(), "--out", (s.root / "o").string()});
  CHECK(bad.code == kExitConfig);
  CHECK(bad.err.find("UnknownKey") != std::string::npos);

  CHECK(run({"converge"}).code == kExitConfig);
  CHECK(run({"teleport", "--config", typo.string()}).code == kExitConfig);
  CHECK(run({}).code == kExitConfig);

  // the output directory cannot be created below a regular file
  const auto cfg = s.write("small.toml", kSmall);
  const auto blocked = s.write("blocker", "");
  const auto io = run({"solve-pde", "--config", cfg.string(), "--out", (blocked / "o").string()});
  CHECK(io.code == kExitRuntime);
  CHECK_FALSE(io.err.empty());
}
