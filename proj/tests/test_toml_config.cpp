#include <fstream>

#include "doctest.h"

#include "escher/config.hpp"

using escher::toml_lite::parse;

TEST_CASE("toml: scalars, tables and arrays") {
  const auto doc = parse(R"(
# run configuration
title = "demo"
count = 42
ratio = 1e-9
flag = true
names = ["a", "b"]   # trailing comment
mixed = [1, 2,
         3]

[outer.inner]
value = 'literal # not a comment'
)");
  CHECK(doc.at("title") == "demo");
  CHECK(doc.at("count") == 42);
  CHECK(doc.at("ratio").get<double>() == doctest::Approx(1e-9));
  CHECK(doc.at("flag") == true);
  CHECK(doc.at("names") == nlohmann::json::array({"a", "b"}));
  CHECK(doc.at("mixed").size() == 3);
  CHECK(doc.at("outer").at("inner").at("value") == "literal # not a comment");
}

TEST_CASE("toml: arrays of tables") {
  const auto doc = parse(R"(
[backend]
mode = "remote"

[[backend.profiles]]
name = "heavy"
weight = 0.8

[[backend.profiles]]
name = "light"
weight = 0.2
)");
  const auto& profiles = doc.at("backend").at("profiles");
  REQUIRE(profiles.size() == 2);
  CHECK(profiles[0].at("name") == "heavy");
  CHECK(profiles[1].at("weight").get<double>() == doctest::Approx(0.2));
}

TEST_CASE("toml: parse errors carry line numbers") {
  CHECK_THROWS_AS(parse("key value-without-equals"), escher::TomlError);
  CHECK_THROWS_AS(parse("key = "), escher::TomlError);
  CHECK_THROWS_AS(parse("[unclosed"), escher::TomlError);
  CHECK_THROWS_AS(parse("k = \"unterminated"), escher::TomlError);
  try {
    parse("ok = 1\nbroken = ???");
    FAIL("expected a TomlError");
  } catch (const escher::TomlError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("run config: full document round-trip and digest stability") {
  const std::string toml = R"(
[run]
task = "cp"
out_dir = "runs/demo"
seed = 7
max_iterations = 120

[budget]
equivalent_tokens = 50000.0

[populations]
task_capacity = 150
optimizer_capacity = 40

[loop]
cohort_size = 5
task_parents = 2
meta_every = 2
checkpoint_every = 10

[sampling]
mentoring = 0.4

[eval]
timeout_s = 30.0
workers = 2

[backend]
mode = "remote"

[[backend.profiles]]
name = "heavy"
base_url = "http://localhost:9999"
model = "m1"
weight = 0.8
thinking_level = "low"

[[backend.profiles]]
name = "light"
base_url = "http://localhost:9999"
model = "m1"
weight = 0.2
)";
  const auto cfg = escher::run_config_from_json(parse(toml));
  CHECK(cfg.task == escher::TaskDomain::CP);
  CHECK(cfg.seed == 7);
  CHECK(cfg.budget_eq == 50000.0);
  CHECK(cfg.task_capacity == 150);
  CHECK(cfg.optimizer_capacity == 40);
  CHECK(cfg.loop.cohort_size == 5);
  CHECK(cfg.loop.task_parent_count == 2);
  CHECK(cfg.loop.meta_every == 2);
  CHECK(cfg.loop.checkpoint_every == 10);
  CHECK(cfg.loop.mentoring_temp == 0.4);
  CHECK(cfg.loop.matchmaking_temp == 1.2);  // untouched default
  CHECK(cfg.loop.eval_workers == 2);
  CHECK(cfg.backend.mode == escher::BackendMode::RemoteChat);
  REQUIRE(cfg.backend.routing.size() == 2);
  CHECK(cfg.backend.routing[0].extra.at("thinking_level") == "low");

  // the resolved JSON form parses back to an identical digest
  const auto reparsed = escher::run_config_from_json(cfg.to_json());
  CHECK(reparsed.digest() == cfg.digest());
  CHECK(reparsed.loop.mentoring_temp == 0.4);
}

TEST_CASE("run config: validation failures") {
  CHECK_THROWS_AS(escher::run_config_from_json(parse("[budget]\nequivalent_tokens = 0")),
                  escher::ConfigError);
  CHECK_THROWS_AS(escher::run_config_from_json(parse("[run]\nseed = \"sometimes\"")),
                  escher::ConfigError);
  CHECK_THROWS_AS(escher::run_config_from_json(parse("[loop]\ncohort_size = 1")), escher::Error);
  CHECK_THROWS_AS(escher::run_config_from_json(parse(R"(
[backend]
mode = "remote"
[[backend.profiles]]
name = "p"
weight = 0.5
)")),
                  escher::Error);  // weights must sum to 1
}

TEST_CASE("run config: entropy seed is accepted") {
  const auto cfg = escher::run_config_from_json(parse("[run]\nseed = \"entropy\""));
  CHECK(cfg.seed_entropy);
}

TEST_CASE("seed payload files load strings and objects") {
  const auto dir = std::filesystem::temp_directory_path() / "escher_seed_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "a.json");
    out << R"(["payload-one", {"task":"kn","vectors":[]}])";
  }
  {
    std::ofstream out(dir / "b.json");
    out << R"({"task":"cp","circles":[]})";
  }
  const auto payloads = escher::load_seed_payloads({(dir / "a.json").string(),
                                                    (dir / "b.json").string()});
  REQUIRE(payloads.size() == 3);
  CHECK(payloads[0] == "payload-one");
  CHECK(payloads[1].find("\"kn\"") != std::string::npos);
  CHECK(payloads[2].find("\"cp\"") != std::string::npos);
  CHECK_THROWS_AS(escher::load_seed_payloads({(dir / "missing.json").string()}),
                  escher::ConfigError);
}
