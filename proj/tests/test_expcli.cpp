#include <doctest.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "bvm/config.hpp"
#include "bvm/csv.hpp"
#include "bvm/error.hpp"
#include "bvm/experiment.hpp"
#include "bvm/random.hpp"

using namespace bvm;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "bvm_expcli_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string body_of(const std::string& csv) {
  // Everything after the metadata block.
  const auto pos = csv.find("\r\nepsilon");
  return pos == std::string::npos ? csv : csv.substr(pos);
}

std::string metadata_value(const CsvTable& t, const std::string& key) {
  for (const auto& [k, v] : t.metadata)
    if (k == key) return v;
  return {};
}

const char* kMinimal = "experiment = coverage\noperator = bvp\n";

}  // namespace

TEST_SUITE("expcli") {

TEST_CASE("derive_seed is collision free over a million streams") {
  constexpr std::uint64_t n = 1000000;
  std::vector<std::uint64_t> seeds(n);
  for (std::uint64_t s = 0; s < n; ++s) seeds[s] = derive_seed(SeedDerivation{42, s});
  CHECK(derive_seed(42, 17) == seeds[17]);
  std::sort(seeds.begin(), seeds.end());
  CHECK(std::adjacent_find(seeds.begin(), seeds.end()) == seeds.end());
}

TEST_CASE("derive_seed avalanche on the master seed") {
  std::size_t total_bits = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const std::uint64_t a = derive_seed(7, s * 977);
    const std::uint64_t b = derive_seed(8, s * 977);
    const int flipped = std::popcount(a ^ b);
    CHECK(flipped >= 1);
    total_bits += static_cast<std::size_t>(flipped);
  }
  // A good mixer flips about half of the 64 bits on average.
  CHECK(double(total_bits) / 1000.0 == doctest::Approx(32.0).epsilon(0.05));
  static_assert(derive_seed(1, 2) == derive_seed(SeedDerivation{1, 2}));
}

TEST_CASE("parse_config: minimal document and defaults") {
  const ExperimentConfig c = parse_config(kMinimal);
  CHECK(c.experiment == ExperimentKind::Coverage);
  CHECK(c.op == OperatorKind::Bvp);
  CHECK(c.n_modes == 256);
  CHECK(c.oversample == 8);
  CHECK(c.level == 0.95);
  CHECK(c.epsilons.size() == 7);
  CHECK(c.epsilons.back() == 1e-4);
  const auto entries = resolved_entries(c);
  CHECK(std::find(entries.begin(), entries.end(), std::pair<std::string, std::string>{"level", "0.95"}) !=
        entries.end());

  // resolved_entries reparse to the same configuration
  std::string text;
  for (const auto& [k, v] : entries) text += k + " = " + v + "\n";
  CHECK(resolved_entries(parse_config(text)) == entries);
}

TEST_CASE("parse_config: key values and comments") {
  const ExperimentConfig c = parse_config(
      "# comment line\n"
      "experiment = rates   # trailing comment\n"
      "operator = psido\n"
      "operator.t = 1.5\n"
      "prior.r = 1.25\n"
      "truth.kind = modes\n"
      "truth.modes = 1:0.5, 3:-0.25\n"
      "epsilons = 0.1, 0.01, 0.001\n"
      "n_modes = 129\n"
      "ball_beta = 3.5\n");
  CHECK(c.experiment == ExperimentKind::Rates);
  CHECK(c.op == OperatorKind::Psido);
  CHECK(c.op_t == 1.5);
  CHECK(c.prior_r == 1.25);
  REQUIRE(c.truth_modes.size() == 2);
  CHECK(c.truth_modes[1] == std::pair<std::size_t, double>{3, -0.25});
  CHECK(c.epsilons == std::vector<double>{0.1, 0.01, 0.001});
  CHECK(c.ball_beta == 3.5);
  CHECK(c.resolved_ambient_exponent() == -1.5);
}

TEST_CASE("parse_config: errors name the key") {
  auto message = [](const std::string& text) {
    try {
      (void)parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string r = message(std::string(kMinimal) + "prior.r = 0.4\n");
  CHECK(r.find("r > d/2") != std::string::npos);
  CHECK(r.find("prior.r") != std::string::npos);
  CHECK(message(std::string(kMinimal) + "foo = 1\n").find("foo") != std::string::npos);
  CHECK(message(std::string(kMinimal) + "n_modes = abc\n").find("n_modes") != std::string::npos);
  CHECK(message(std::string(kMinimal) + "level = 1.5\n").find("level") != std::string::npos);
  CHECK(message(std::string(kMinimal) + "level = 0.9\nlevel = 0.8\n").find("level") != std::string::npos);
  CHECK(message("operator = bvp\n").find("experiment") != std::string::npos);
  CHECK(message(std::string(kMinimal) + "operator.coefficient = sin:1,1.5,1\n").find("operator.coefficient") !=
        std::string::npos);
  CHECK(message("experiment = coverage\noperator = psido\nn_modes = 128\n").find("n_modes") != std::string::npos);
  CHECK(message("experiment = rates\noperator = bvp\nepsilons = 0.1, 0.01\n").find("epsilons") !=
        std::string::npos);
  CHECK(message("experiment = tightness\noperator = heat\n").find("operator") != std::string::npos);
}

TEST_CASE("csv formatting and roundtrip") {
  CHECK(format_bool(true) == "1");
  CHECK(format_bool(false) == "0");
  const std::vector<double> values{0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::numeric_limits<double>::min(),
                                   std::numeric_limits<double>::max(), 0.0};
  CsvTable t;
  t.metadata = {{"note", "a,b"}, {"k", "v"}};
  t.header = {"x", "label"};
  for (double v : values) t.rows.push_back({format_double(v), "q\"uote,d"});
  std::ostringstream os;
  write_csv(t, os);
  const std::string text = os.str();
  CHECK(text.rfind("# note=a,b\r\n", 0) == 0);
  const CsvTable back = parse_csv(text);
  CHECK(back.metadata == t.metadata);
  CHECK(back.header == t.header);
  REQUIRE(back.rows.size() == values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    double parsed = 0.0;
    const std::string& s = back.rows[i][0];
    std::from_chars(s.data(), s.data() + s.size(), parsed);
    CHECK(parsed == values[i]);
    CHECK(back.rows[i][1] == "q\"uote,d");
  }

  CsvTable empty;
  empty.header = {"x"};
  std::ostringstream sink;
  CHECK_THROWS_AS(write_csv(empty, sink), ConfigError);
  CsvTable ragged;
  ragged.header = {"x", "y"};
  ragged.rows = {{"1"}};
  CHECK_THROWS_AS(write_csv(ragged, sink), ConfigError);
  t.rows.resize(1);
  CHECK_THROWS_AS(emit_csv(t, "/nonexistent-dir/x/out.csv"), IoError);
}

TEST_CASE("coverage experiment: schema, metadata and determinism") {
  ExperimentConfig c = parse_config(
      "experiment = coverage\noperator = bvp\nn_modes = 64\nepsilons = 0.01, 0.001\n"
      "n_replicates = 30\nball_beta = 3.5\nmaster_seed = 3\n");
  c.output_path = scratch("cov_w1.csv").string();
  std::ostringstream diag;
  REQUIRE(run_command(c, 1, diag) == 0);
  const std::string one = slurp(c.output_path);
  c.output_path = scratch("cov_w4.csv").string();
  REQUIRE(run_command(c, 4, diag) == 0);
  const std::string four = slurp(c.output_path);
  CHECK(body_of(one) == body_of(four));
  c.output_path = scratch("cov_w1.csv").string();
  REQUIRE(run_command(c, 1, diag) == 0);
  CHECK(slurp(c.output_path) == one);

  const CsvTable t = parse_csv(one);
  CHECK(t.header == std::vector<std::string>{"epsilon", "replicate", "functional_mean", "scaled_error", "hat_psi",
                                             "radius", "covered", "ball_radius", "ball_covered"});
  CHECK(t.rows.size() == 60);
  CHECK(metadata_value(t, "level") == "0.95");
  CHECK(metadata_value(t, "n_modes") == "64");
  CHECK(!metadata_value(t, "tail_bound").empty());
  CHECK(!metadata_value(t, "calibrated_c").empty());
  CHECK(!metadata_value(t, "limiting_variance").empty());
  for (const auto& [k, v] : resolved_entries(c))
    if (k != "output_path") CHECK(metadata_value(t, k) == v);
}

TEST_CASE("run_command exit codes") {
  std::ostringstream diag;
  ExperimentConfig conj = parse_config("experiment = conjugacy\noperator = bvp\noperator.coefficient = sin:1,0.5,2\n"
                                       "n_modes = 48\nconjugacy.trials = 10\n");
  conj.output_path = scratch("conj.csv").string();
  CHECK(run_command(conj, 1, diag) == 0);
  const CsvTable t = parse_csv(slurp(conj.output_path));
  REQUIRE(t.rows.size() == 10);
  for (const auto& row : t.rows) CHECK(std::stod(row[2]) < 1e-8);

  ExperimentConfig heat = parse_config("experiment = coverage\noperator = heat\nfunctional.kind = mode\n"
                                       "functional.mode = 40\nn_modes = 64\nn_replicates = 5\n");
  heat.output_path = scratch("heat.csv").string();
  diag.str("");
  CHECK(run_command(heat, 1, diag) == 4);
  CHECK(!diag.str().empty());

  ExperimentConfig bad = parse_config(kMinimal);
  bad.output_path = "/nonexistent-dir/x/out.csv";
  bad.n_modes = 32;
  bad.n_replicates = 2;
  bad.epsilons = {0.1};
  CHECK(run_command(bad, 1, diag) != 0);
}

TEST_CASE("tightness and concentration experiments") {
  std::ostringstream diag;
  ExperimentConfig t = parse_config("experiment = tightness\noperator = bvp\n");
  t.output_path = scratch("tight.csv").string();
  REQUIRE(run_command(t, 1, diag) == 0);
  const CsvTable tt = parse_csv(slurp(t.output_path));
  CHECK(metadata_value(tt, "verdict.2") == "Diverges");
  CHECK(metadata_value(tt, "verdict.2.5") == "Boundary");
  CHECK(metadata_value(tt, "verdict.3.5") == "Converges");

  ExperimentConfig c = parse_config("experiment = concentration\noperator = bvp\nn_modes = 64\n"
                                    "concentration.mc_samples = 20000\nconcentration.deltas = 0.5, 0.3\n"
                                    "truth.kind = sobolev\n");
  c.output_path = scratch("conc.csv").string();
  REQUIRE(run_command(c, 1, diag) == 0);
  const CsvTable ct = parse_csv(slurp(c.output_path));
  CHECK(ct.rows.size() == 2);
}

}  // TEST_SUITE
