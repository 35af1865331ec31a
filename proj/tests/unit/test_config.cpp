#include <doctest.h>

#include <filesystem>
#include <string>

#include "hydrolimit/config.hpp"
#include "hydrolimit/error.hpp"

using namespace hydrolimit;

namespace {

const char* kMinimal = R"(# minimal document
[model]
type = "asep"

[scaling]
lambda = 1
mu = 1

[study]
N = [128]
T = 0.05
)";

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::InvalidArgument;
}

std::string error_text(const std::string& doc) {
  try {
    (void)parse_config(doc);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("minimal document gets the documented defaults") {
  const auto cfg = parse_config(kMinimal);
  CHECK(cfg.model == ModelKind::asep);
  CHECK(cfg.lambda == 1.0);
  CHECK(cfg.mu == 1.0);
  CHECK(cfg.sizes == std::vector<std::size_t>{128});
  CHECK(cfg.horizon == 0.05);
  CHECK(cfg.replicas == 16);
  CHECK(cfg.bins == 32);
  CHECK(cfg.grid_cells == 256);
  CHECK(cfg.checkpoints == std::vector<double>{0.05});
  CHECK(cfg.species == std::vector<std::string>{"A", "B"});
  CHECK(cfg.drift.automatic);
  CHECK(cfg.cfl_fraction == 0.4);
  REQUIRE(cfg.initial.size() == 2);
  CHECK(cfg.initial[0].constant == 0.5);
  CHECK(cfg.initial[1].constant == 0.5);
  CHECK(cfg.resolved_martingale_step() == doctest::Approx(0.05 / 1000));

  // every default is echoed into the canonical document
  const auto text = serialize_config(cfg);
  for (const char* key : {"replicas = 16", "bins = 32", "M = 256", "drift_sign = \"auto\"",
                          "test_functions = 5", "cfl_fraction = 0.4"}) {
    CHECK_MESSAGE(text.find(key) != std::string::npos, key);
  }
}

TEST_CASE("round trip") {
  const auto cfg = parse_config(R"([model]
type = "nspecies"
species = ["A", "B", "C"]
initial_A = [0.3333333333333333, 0.2]
initial_B = [0.3333333333333333, -0.1, 0.15]
sample_mode = "deterministic"
[scaling]
lambda = 1.25
alpha = [[0, 1, -1], [-1, 0, 1], [1, -1, 0]]
[study]
N = [96, 192]
replicas = 3
bins = 12
T = 0.02
checkpoints = [0.01, 0.02]
seed = 18446744073709551615
drift_sign = -1
[pde]
M = 96
[output]
configurations = true
)");
  CHECK(cfg.species_count() == 3);
  CHECK(cfg.initial[2].constant == doctest::Approx(1.0 / 3));
  CHECK(cfg.seed == 18446744073709551615ULL);
  CHECK_FALSE(cfg.drift.automatic);
  CHECK(cfg.drift.sign == -1);
  const auto text = serialize_config(cfg);
  const auto again = parse_config(text);
  CHECK(again == cfg);
  CHECK(serialize_config(again) == text);

  const auto minimal = parse_config(kMinimal);
  CHECK(parse_config(serialize_config(minimal)) == minimal);
}

TEST_CASE("strict schema") {
  const std::string typo = std::string(kMinimal) + "[pde]\nlamda = 1\n";
  CHECK(code_of([&] { (void)parse_config(typo); }) == Errc::UnknownKey);
  CHECK(code_of([] { (void)parse_config("[modle]\ntype = \"asep\"\n"); }) == Errc::UnknownKey);
  CHECK(code_of([] {
          (void)parse_config("[model]\ntype = \"asep\"\ninitial_Q = [1]\n[study]\nN = [64]\n");
        }) == Errc::UnknownKey);
}

TEST_CASE("parse errors carry line numbers") {
  CHECK(error_text("[model]\ntype = \"asep\"\n[study]\nN = [64\n").find("line 4") !=
        std::string::npos);
  CHECK(error_text("[model]\ntype asep\n").find("line 2") != std::string::npos);
  CHECK(code_of([] { (void)parse_config("[model]\ntype = \"asep\"\ntype = \"asep\"\n"); }) ==
        Errc::ParseError);
  CHECK(code_of([] { (void)parse_config("lambda = 1\n"); }) == Errc::ParseError);
  CHECK(code_of([] { (void)parse_config("[study]\nN = [1e400]\n"); }) == Errc::ParseError);
  CHECK(code_of([] { (void)parse_config("[model]\ntype = \"asep\n"); }) == Errc::ParseError);
}

TEST_CASE("constraint violations") {
  const auto with = [](const std::string& scaling, const std::string& study) {
    return "[model]\ntype = \"asep\"\n[scaling]\n" + scaling + "\n[study]\n" + study + "\n";
  };
  // |mu| must stay below 2 lambda N at the smallest N
  CHECK(code_of([&] { (void)parse_config(with("mu = 300", "N = [128, 256]")); }) ==
        Errc::ConstraintViolation);
  CHECK_NOTHROW((void)parse_config(with("mu = 256", "N = [128, 256]")));
  CHECK(code_of([&] { (void)parse_config(with("lambda = 0", "N = [128]")); }) ==
        Errc::ConstraintViolation);
  CHECK(code_of([&] { (void)parse_config(with("", "N = [100]")); }) ==
        Errc::ConstraintViolation);  // 32 bins do not divide 100
  CHECK(code_of([&] { (void)parse_config(with("", "N = [16]\nbins = 32")); }) ==
        Errc::ConstraintViolation);
  CHECK(code_of([&] { (void)parse_config(with("", "N = [256, 128]")); }) ==
        Errc::ConstraintViolation);
  CHECK(code_of([&] { (void)parse_config(with("", "N = [128]\ncheckpoints = [0.1]")); }) ==
        Errc::ConstraintViolation);
  CHECK(code_of([&] { (void)parse_config(with("", "N = [128]\nreplicas = 0")); }) ==
        Errc::ConstraintViolation);
  CHECK(code_of([&] { (void)parse_config(with("", "N = [128]\ntest_functions = 2")); }) ==
        Errc::ConstraintViolation);
  CHECK(code_of([&] { (void)parse_config(with("", "N = [128]\nmartingale_step = 0.01")); }) ==
        Errc::ConstraintViolation);
  CHECK(code_of([] {
          (void)parse_config("[model]\ntype = \"asep\"\ninitial_A = [0.5, 0.6]\n[study]\nN = [64]\n");
        }) == Errc::ConstraintViolation);
  CHECK(code_of([] {
          (void)parse_config(
              "[model]\ntype = \"nspecies\"\n[scaling]\nalpha = [[0, 1], [1, 0]]\n[study]\nN = [64]\n");
        }) == Errc::ConstraintViolation);
  CHECK(code_of([] {
          (void)parse_config(
              "[model]\ntype = \"nspecies\"\n[scaling]\nalpha = [[0, 1, 0], [-1, 0, 0], [0, 0, 0]]\n"
              "fold_gamma = [1, 1, 1]\nfold_delta = [1, 1, 1]\n[study]\nN = [64]\n");
        }) == Errc::ConstraintViolation);
}

TEST_CASE("load_config") {
  CHECK(code_of([] { (void)load_config("/nonexistent/dir/config.toml"); }) == Errc::IoError);
  const auto path = std::filesystem::temp_directory_path() / "hydrolimit_cfg_test.toml";
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    REQUIRE(f != nullptr);
    std::fputs(kMinimal, f);
    std::fclose(f);
  }
  CHECK(load_config(path) == parse_config(kMinimal));
  std::filesystem::remove(path);
}

TEST_CASE("shipped configs load and round-trip") {
  std::size_t count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(HYDROLIMIT_CONFIG_DIR)) {
    if (entry.path().extension() != ".toml") continue;
    ++count;
    INFO(entry.path().string());
    const auto cfg = load_config(entry.path());
    CHECK(parse_config(serialize_config(cfg)) == cfg);
  }
  CHECK(count >= 6);
}
