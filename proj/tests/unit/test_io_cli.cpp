#include "selfdual/cli.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace selfdual;
namespace fs = std::filesystem;

TEST_CASE("json vectors and matrices") {
  CHECK(json_vec(nlohmann::json(2.5)).size() == 1);
  CHECK(json_vec(nlohmann::json::parse("[1, 2, 3]"))[2] == 3.0);
  CHECK(json_mat(nlohmann::json::parse("[[1, 2], [3, 4]]"))(1, 0) == 3.0);
  CHECK_THROWS_AS(json_mat(nlohmann::json::parse("[[1, 2], [3]]")), Error);
  CHECK_THROWS_AS(json_vec(nlohmann::json::parse("[1, \"a\"]")), Error);
}

TEST_CASE("csv round trip") {
  const fs::path p = fs::temp_directory_path() / "selfdual_unit.csv";
  CsvTable t{{"t", "u_1"}, {{0.0, 1.0}, {0.5, 0.1234567890123}}};
  t.write(p.string());
  const CsvTable r = CsvTable::read(p.string());
  CHECK(r.header == t.header);
  CHECK(r.rows[1][1] == t.rows[1][1]);
  fs::remove(p);
}

TEST_CASE("line lookup by JSON pointer") {
  const std::string text = "{\n  \"a\": 1,\n  \"b\": {\n    \"c\": [1,\n 2]\n  }\n}\n";
  CHECK(cli::line_of(text, "/a") == 2);
  CHECK(cli::line_of(text, "/b/c") == 4);
  CHECK(cli::line_of(text, "/b/c/1") == 5);
  CHECK(cli::line_of(text, "/zzz") == 0);
}

TEST_CASE("schema errors carry the line") {
  const std::string text = "{\n  \"command\": \"solve\",\n  \"problem\": {\n    \"operator\": {\"type\": \"warp\"},\n    \"p\": 1\n  }\n}\n";
  const cli::ExperimentConfig cfg = cli::parse_config(text, "t.json");
  try {
    cli::execute(cfg);
    FAIL("expected a config error");
  } catch (const cli::ConfigError& e) {
    CHECK(e.line() == 4);
    CHECK(e.format("t.json").rfind("t.json:4:", 0) == 0);
  }
}

TEST_CASE("malformed JSON is reported with its line") {
  try {
    cli::parse_config("{\n \"command\": \"solve\",\n \"problem\": {\n", "m.json");
    FAIL("expected a parse error");
  } catch (const cli::ConfigError& e) {
    CHECK(e.line() >= 3);
  }
}

TEST_CASE("unknown commands and fields are rejected") {
  CHECK_THROWS_AS(cli::parse_config(R"({"command": "warp"})", "x"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_config(R"({"command": "solve", "extra": 1})", "x"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_config(R"({"command": "solve", "seed": -1})", "x"), cli::ConfigError);
}

TEST_CASE("invalid input writes nothing and exits 2") {
  const fs::path dir = fs::temp_directory_path() / "selfdual_cli_unit";
  fs::create_directories(dir);
  const std::string report = (dir / "r.json").string(), csv = (dir / "r.csv").string();
  fs::remove(report);
  fs::remove(csv);
  cli::ExperimentConfig cfg = cli::parse_config(
      R"({"command": "check-selfdual", "problem": {"lagrangian": {"type": "quadratic"}}})", "x");
  cfg.report_path = report;
  cfg.csv_path = csv;
  std::ostringstream out, err;
  CHECK(cli::run(cfg, out, err) == 2);
  CHECK_FALSE(fs::exists(report));
  CHECK_FALSE(fs::exists(csv));
  CHECK(err.str().find("x:1:") == 0);
}

TEST_CASE("check-selfdual passes on the catalog identity") {
  const cli::ExperimentConfig cfg = cli::parse_config(
      R"({"command": "check-selfdual", "problem": {"lagrangian": {"type": "catalog", "name": "identity"}}})", "x");
  const cli::Outcome o = cli::execute(cfg);
  CHECK(o.exit_code == 0);
  CHECK(o.report["residual"].get<double>() <= 1e-6);
}

TEST_CASE("a certificate tolerance that cannot be met gives exit 1") {
  const cli::ExperimentConfig cfg = cli::parse_config(
      R"({"command": "fitzpatrick",
          "problem": {"graph": {"type": "sampled_1d", "of": {"type": "identity"}, "points": 5},
                      "nodes": 9, "bracket_probes": 5},
          "tolerances": {"residual": 1e-300}})",
      "x");
  const cli::Outcome o = cli::execute(cfg);
  if (o.report["residual"].get<double>() > 1e-300) CHECK(o.exit_code == 1);
}

TEST_CASE("evolve output equals the library call") {
  const cli::ExperimentConfig cfg = cli::parse_config(
      R"({"command": "evolve", "problem": {"operator": {"type": "identity"}, "x0": 1, "grid": {"steps": 16}}})", "x");
  const cli::Outcome o = cli::execute(cfg);
  REQUIRE(o.csv);
  CHECK(o.csv->header == std::vector<std::string>{"t", "u_1"});
  const EvolutionResult r =
      solve_evolution(TimeDependentOperator::stationary(MonotoneOperator::grad_convex(ConvexFunction::half_squared_norm(1))),
                      BoundaryOp::initial_value(Vec::Constant(1, 1.0)), TimeGrid{1.0, 16});
  REQUIRE(o.csv->rows.size() == r.u.u.size());
  for (std::size_t k = 0; k < r.u.u.size(); ++k) CHECK(o.csv->rows[k][1] == r.u.u[k][0]);
}

TEST_CASE("seed comes from the environment when set") {
  ::setenv("SELFdual_SEED", "42", 1);
  const cli::ExperimentConfig cfg = cli::parse_config(R"({"command": "solve", "seed": 7})", "x");
  CHECK(cfg.seed == 42u);
  ::unsetenv("SELFdual_SEED");
  CHECK(cli::parse_config(R"({"command": "solve", "seed": 7})", "x").seed == 7u);
}

TEST_CASE("catalog lists every command") {
  const nlohmann::json c = cli::catalog();
  CHECK(c["commands"].size() == 11);
  CHECK(c["lagrangians"].size() >= 4);
}
