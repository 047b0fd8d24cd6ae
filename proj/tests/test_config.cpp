#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "safe_explore/error.hpp"
#include "safe_explore/experiment.hpp"

using namespace safe_explore;
using namespace safe_explore::cli;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({
    "environment": {"kind": "random", "rows": 4, "cols": 5},
    "agents": [{"policy": "st_safemdp"}, {"policy": "random", "L_s": 0.2}],
    "runs": 3, "horizon": 10, "seed": 7
  })");
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::io;
}

std::string message_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("config parse and defaults") {
  const auto cfg = parse_config(minimal());
  CHECK(cfg.environment.kind == EnvKind::random);
  CHECK(cfg.environment.random.rows == 4);
  CHECK(cfg.environment.random.cols == 5);
  CHECK(cfg.environment.random.temporal_drift == 0.1);
  REQUIRE(cfg.agents.size() == 2);
  CHECK(cfg.agents[1].policy == agent::Policy::random);
  CHECK(cfg.agents[1].lipschitz.spatial == 0.2);
  CHECK(cfg.agents[1].lipschitz.temporal == 0.1);
  CHECK(cfg.agents[0].beta == 2.0);
  CHECK(cfg.runs == 3);
  CHECK(cfg.horizon == 10);
  CHECK(cfg.seed == 7);
  CHECK(cfg.kernel(0.0, 0.0) == doctest::Approx(2.25));
}

TEST_CASE("config round trip") {
  auto j = minimal();
  j["agents"][0]["kernel"] = json::parse(R"({"kind": "rbf-space", "length_scale": 3.0, "variance": 0.7})");
  j["write_sets"] = true;
  j["workers"] = 2;
  const auto a = parse_config(j);
  const auto dumped = to_json(a);
  const auto b = parse_config(dumped);
  CHECK(to_json(b) == dumped);
  CHECK(b.write_sets);
  CHECK(b.workers == 2);
  REQUIRE(b.agents[0].kernel.has_value());
  CHECK((*b.agents[0].kernel)(1.0, 0.0) == doctest::Approx(0.7 * std::exp(-1.0 / 18.0)));

  auto t = json::parse(R"({
    "environment": {"kind": "terrain", "frames": ["a.pgm", "b.pgm"], "steps": 20, "threshold": -0.25},
    "agents": [{"policy": "st_safemdp", "L_s": 0.05, "L_t": 0.01}],
    "horizon": 20
  })");
  const auto tc = parse_config(t);
  CHECK(tc.environment.kind == EnvKind::terrain);
  CHECK(tc.environment.terrain.frames.size() == 2);
  CHECK(to_json(parse_config(to_json(tc))) == to_json(tc));
}

TEST_CASE("config errors name the key") {
  auto j = minimal();
  j["horizn"] = 3;
  CHECK(code_of([&] { parse_config(j); }) == ErrorCode::config);
  CHECK(message_of([&] { parse_config(j); }).find("horizn") != std::string::npos);

  j = minimal();
  j["environment"]["colour"] = 1;
  CHECK(message_of([&] { parse_config(j); }).find("colour") != std::string::npos);

  j = minimal();
  j["agents"][0]["policy"] = "greedy";
  CHECK(code_of([&] { parse_config(j); }) == ErrorCode::config);

  j = minimal();
  j["agents"][1]["policy"] = "st_safemdp";
  CHECK(code_of([&] { parse_config(j); }) == ErrorCode::config);

  j = minimal();
  j["runs"] = "many";
  CHECK(code_of([&] { parse_config(j); }) == ErrorCode::config);

  j = minimal();
  j["runs"] = 0;
  CHECK(code_of([&] { parse_config(j); }) == ErrorCode::config);

  j = minimal();
  j["agents"][0]["L_s"] = -1.0;
  CHECK(code_of([&] { parse_config(j); }) == ErrorCode::config);

  j = minimal();
  j["kernel"] = json::parse(R"({"kind": "rbf-space", "length_scale": 0.0, "variance": 1.0})");
  CHECK(code_of([&] { parse_config(j); }) == ErrorCode::config);

  auto t = json::parse(R"({
    "environment": {"kind": "terrain", "frames": ["a.pgm", "b.pgm"], "steps": 20},
    "agents": [{"policy": "st_safemdp"}], "horizon": 30
  })");
  CHECK(code_of([&] { parse_config(t); }) == ErrorCode::config);

  CHECK(code_of([&] { load_config("/nonexistent/config.json"); }) == ErrorCode::config);
}

TEST_CASE("load_config resolves frames against the config directory") {
  const auto dir = std::filesystem::temp_directory_path() / "safe_explore_test_config";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "terrain.json");
    out << R"({"environment": {"kind": "terrain", "frames": ["f/a.pgm", "/abs/b.pgm"], "steps": 5},
              "agents": [{"policy": "st_safemdp"}], "horizon": 5})";
  }
  const auto cfg = load_config(dir / "terrain.json");
  CHECK(cfg.environment.terrain.frames[0] == dir / "f/a.pgm");
  CHECK(cfg.environment.terrain.frames[1] == std::filesystem::path("/abs/b.pgm"));

  {
    std::ofstream out(dir / "broken.json");
    out << "{ not json";
  }
  CHECK(code_of([&] { load_config(dir / "broken.json"); }) == ErrorCode::config);
}

TEST_CASE("policy selection") {
  auto cfg = parse_config(minimal());
  select_policies(cfg, {agent::Policy::random});
  REQUIRE(cfg.agents.size() == 1);
  CHECK(cfg.agents[0].policy == agent::Policy::random);

  cfg = parse_config(minimal());
  select_policies(cfg, {agent::Policy::random, agent::Policy::st_safemdp});
  CHECK(cfg.agents[0].policy == agent::Policy::random);
  CHECK(cfg.agents[1].policy == agent::Policy::st_safemdp);

  cfg = parse_config(minimal());
  CHECK(code_of([&] { select_policies(cfg, {agent::Policy::unsafe}); }) == ErrorCode::config);
  CHECK(code_of([&] {
          select_policies(cfg, {agent::Policy::random, agent::Policy::random});
        }) == ErrorCode::config);
}

TEST_CASE("seed mixing") {
  // Reference outputs of the standard splitmix64 generator seeded with 0.
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
  CHECK(splitmix64(0x9E3779B97F4A7C15ULL) == 0x6E789E6AA1B965F4ULL);

  CHECK(env_seed(5, 0) == splitmix64(5 + 0x9E3779B97F4A7C15ULL));
  CHECK(env_seed(5, 3) == splitmix64(5 + 4 * 0x9E3779B97F4A7C15ULL));
  CHECK(agent_seed(5, 3, agent::Policy::unsafe) ==
        splitmix64(env_seed(5, 3) ^ (0xD1B54A32D192ED03ULL * 3)));

  std::set<std::uint64_t> seen;
  for (int run = 0; run < 50; ++run) {
    seen.insert(env_seed(1, run));
    for (auto p : agent::kAllPolicies) seen.insert(agent_seed(1, run, p));
  }
  CHECK(seen.size() == 50u * 6u);
}

TEST_CASE("environment construction follows the run seed") {
  auto cfg = parse_config(minimal());
  const auto a = make_environment(cfg, 1);
  const auto b = make_environment(cfg, 1);
  const auto c = make_environment(cfg, 2);
  CHECK(a.slice(0) == b.slice(0));
  CHECK(a.slice(0) != c.slice(0));
  CHECK(a.horizon() == 10);
  CHECK(a.shape() == GridShape{4, 5});
}

TEST_CASE("experiment in memory") {
  auto cfg = parse_config(minimal());
  cfg.workers = 2;
  const auto r1 = run_experiment(cfg, {.keep_traces = true, .write_files = false});
  cfg.workers = 1;
  const auto r2 = run_experiment(cfg, {.keep_traces = true, .write_files = false});
  REQUIRE(r1.summary.size() == 2);
  CHECK(eval::summary_csv(r1.summary) == eval::summary_csv(r2.summary));
  REQUIRE(r1.traces.size() == 2);
  CHECK(r1.traces[0].size() == 3);
  for (std::size_t run = 0; run < 3; ++run)
    for (std::size_t i = 0; i < r1.traces[1][run].steps.size(); ++i)
      CHECK(r1.traces[1][run].steps[i].state == r2.traces[1][run].steps[i].state);
}
