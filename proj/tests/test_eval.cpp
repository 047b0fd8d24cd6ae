#include <doctest.h>

#include <cmath>
#include <sstream>

#include "safe_explore/error.hpp"
#include "safe_explore/metrics.hpp"

using namespace safe_explore;
using namespace safe_explore::eval;
using agent::Policy;

namespace {

const GridShape kGrid{2, 2};

env::GridWorld world_of(std::vector<std::vector<double>> g) {
  return env::GridWorld(kGrid, std::move(g), 0.0, StateSet(4, {0}), 0.0);
}

agent::StepRecord step(int t, StateId s, std::vector<double> mean, std::optional<StateSet> S_hat = {}) {
  agent::StepRecord r;
  r.t = t;
  r.state = s;
  r.predicted_mean = std::move(mean);
  if (S_hat) {
    safesets::SafeSets sets;
    sets.S = *S_hat;
    sets.S_hat = *S_hat;
    sets.G_next = StateSet(4);
    sets.expanders = StateSet(4);
    sets.candidates = StateSet(4, {s});
    r.sets = sets;
  }
  return r;
}

RunMetrics run_with(double rmse, std::optional<double> precision = {}) {
  RunMetrics m;
  m.rmse_raw = rmse;
  m.classification.precision = precision;
  return m;
}

}  // namespace

TEST_CASE("rmse") {
  const auto w = world_of({{1.0, -1.0, 2.0, 0.5}, {0.0, 0.0, 0.0, 3.0}});
  agent::EpisodeTrace perfect{Policy::random, kGrid, {}};
  perfect.steps.push_back(step(0, 0, w.slice(0)));
  perfect.steps.push_back(step(1, 0, w.slice(1)));
  CHECK(compute_rmse(perfect, w) == 0.0);

  agent::EpisodeTrace zero{Policy::random, kGrid, {}};
  zero.steps.push_back(step(0, 0, std::vector<double>(4, 0.0)));
  CHECK(compute_rmse(zero, w) == doctest::Approx(1.25));
  zero.steps.push_back(step(1, 0, std::vector<double>(4, 0.0)));
  CHECK(compute_rmse(zero, w) == doctest::Approx((1.25 + 1.5) / 2.0));
}

TEST_CASE("classification") {
  const auto w = world_of({{1.0, -1.0, 1.0, -1.0}});
  const StateSet truth(4, {0, 2});

  agent::EpisodeTrace exact{Policy::st_safemdp, kGrid, {}};
  exact.steps.push_back(step(0, 0, std::vector<double>(4, 0.0), truth));
  const auto c1 = compute_classification(exact, w);
  CHECK(*c1.accuracy == 1.0);
  CHECK(*c1.precision == 1.0);
  CHECK(*c1.recall == 1.0);

  agent::EpisodeTrace empty{Policy::st_safemdp, kGrid, {}};
  empty.steps.push_back(step(0, 0, std::vector<double>(4, 0.0), StateSet(4)));
  const auto c2 = compute_classification(empty, w);
  CHECK_FALSE(c2.precision.has_value());
  CHECK(*c2.recall == 0.0);
  CHECK(*c2.accuracy == 0.5);

  // One of each outcome.
  const auto w2 = world_of({{1.0, 1.0, -1.0, -1.0}});
  agent::EpisodeTrace mixed{Policy::st_safemdp, kGrid, {}};
  mixed.steps.push_back(step(0, 0, std::vector<double>(4, 0.0), StateSet(4, {0, 2})));
  const auto conf = *compute_confusion(mixed, w2);
  CHECK(conf.tp == 1);
  CHECK(conf.fp == 1);
  CHECK(conf.fn == 1);
  CHECK(conf.tn == 1);
  const auto c3 = classification_from(conf);
  CHECK(*c3.accuracy == 0.5);
  CHECK(*c3.precision == 0.5);
  CHECK(*c3.recall == 0.5);

  agent::EpisodeTrace unaware{Policy::random, kGrid, {}};
  unaware.steps.push_back(step(0, 0, std::vector<double>(4, 0.0)));
  CHECK_FALSE(compute_confusion(unaware, w).has_value());
  CHECK_FALSE(compute_classification(unaware, w).accuracy.has_value());

  const auto none = classification_from(Confusion{});
  CHECK_FALSE(none.accuracy.has_value());
  CHECK_FALSE(none.recall.has_value());
}

TEST_CASE("classification pools counts over steps") {
  const auto w = world_of({{1.0, 1.0, -1.0, -1.0}, {1.0, -1.0, -1.0, -1.0}});
  agent::EpisodeTrace trace{Policy::st_safemdp, kGrid, {}};
  trace.steps.push_back(step(0, 0, std::vector<double>(4, 0.0), StateSet(4, {0})));
  trace.steps.push_back(step(1, 0, std::vector<double>(4, 0.0), StateSet(4, {0, 1, 2})));
  // tp 1+1, fp 0+2, fn 1+0, tn 2+1
  const auto c = *compute_confusion(trace, w);
  CHECK(c.tp == 2);
  CHECK(c.fp == 2);
  CHECK(c.fn == 1);
  CHECK(c.tn == 3);
  const auto r = compute_classification(trace, w);
  CHECK(*r.precision == 0.5);
  CHECK(*r.recall == doctest::Approx(2.0 / 3.0));
  CHECK(*r.accuracy == doctest::Approx(5.0 / 8.0));
}

TEST_CASE("safety counts") {
  std::vector<agent::EpisodeTrace> traces(3);
  for (auto& t : traces) t.steps.resize(4);
  traces[0].steps[1].unsafe_visit = true;
  traces[0].steps[3].unsafe_visit = true;
  traces[2].steps[0].unsafe_visit = true;
  const auto c = count_safety(traces);
  CHECK(c.failures == 2);
  CHECK(c.unsafe_actions == 3);
  CHECK(count_safety({}).failures == 0);
}

TEST_CASE("mean and sd") {
  CHECK_FALSE(mean_sd({}).has_value());
  const std::vector<double> one{4.0};
  CHECK(mean_sd(one)->mean == 4.0);
  CHECK(mean_sd(one)->sd == 0.0);
  const std::vector<double> two{0.5, 1.5};
  CHECK(mean_sd(two)->mean == 1.0);
  CHECK(mean_sd(two)->sd == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("aggregation") {
  std::vector<PolicyRuns> runs = {
      {Policy::st_safemdp, {run_with(2.0, 1.0), run_with(4.0, 0.5)}},
      {Policy::unsafe, {run_with(1.0), run_with(6.0)}},
  };
  runs[1].runs[0].failures = 1;
  runs[1].runs[0].unsafe_actions = 7;
  const auto s = aggregate_runs(runs, Policy::st_safemdp);
  REQUIRE(s.size() == 2);
  CHECK(s[0].normalized_rmse->mean == 1.0);
  CHECK(s[0].normalized_rmse->sd == 0.0);
  CHECK(s[1].normalized_rmse->mean == doctest::Approx(1.0));
  CHECK(s[1].normalized_rmse->sd == doctest::Approx(std::sqrt(0.5)));
  CHECK(s[1].rmse_raw.mean == 3.5);
  CHECK(s[1].failures == 1);
  CHECK(s[1].unsafe_actions == 7);
  CHECK(s[0].precision->mean == 0.75);
  CHECK_FALSE(s[1].precision.has_value());

  const auto free = aggregate_runs(runs, std::nullopt);
  CHECK_FALSE(free[0].normalized_rmse.has_value());

  std::vector<PolicyRuns> single = {{Policy::st_safemdp, {run_with(3.0)}}};
  const auto one = aggregate_runs(single, Policy::st_safemdp);
  CHECK(one[0].normalized_rmse->mean == 1.0);
  CHECK(one[0].normalized_rmse->sd == 0.0);
}

TEST_CASE("aggregation errors") {
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io;
  };
  std::vector<PolicyRuns> uneven = {
      {Policy::st_safemdp, {run_with(1.0), run_with(1.0)}},
      {Policy::random, {run_with(1.0)}},
  };
  CHECK(code([&] { aggregate_runs(uneven, Policy::st_safemdp); }) == ErrorCode::aggregation);
  std::vector<PolicyRuns> no_ref = {{Policy::random, {run_with(1.0)}}};
  CHECK(code([&] { aggregate_runs(no_ref, Policy::st_safemdp); }) == ErrorCode::aggregation);
  std::vector<PolicyRuns> zero = {{Policy::st_safemdp, {run_with(0.0)}}};
  CHECK(code([&] { aggregate_runs(zero, Policy::st_safemdp); }) == ErrorCode::aggregation);
  CHECK(code([&] { aggregate_runs({}, std::nullopt); }) == ErrorCode::aggregation);
}

TEST_CASE("summary csv") {
  std::vector<PolicyRuns> runs = {
      {Policy::st_safemdp, {run_with(2.0, 1.0)}},
      {Policy::random, {run_with(1.0)}},
  };
  const auto csv = summary_csv(aggregate_runs(runs, Policy::st_safemdp));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line ==
        "policy,normalized_rmse_mean,normalized_rmse_sd,failures,unsafe_actions,accuracy_mean,"
        "accuracy_sd,precision_mean,precision_sd,recall_mean,recall_sd");
  std::getline(in, line);
  CHECK(line == "st_safemdp,1.000000,0.000000,0,0,-,-,1.000000,0.000000,-,-");
  std::getline(in, line);
  CHECK(line == "random,0.500000,0.000000,0,0,-,-,-,-,-,-");
  CHECK_FALSE(std::getline(in, line));
}

TEST_CASE("run metrics from an episode") {
  env::EnvGenSpec spec;
  spec.shape = {5, 5};
  spec.horizon = 12;
  spec.seed = 21;
  const auto w = env::generate_random_env(spec);
  agent::AgentConfig cfg;
  const auto trace = agent::run_episode(w, cfg, 12);
  const auto m = compute_run_metrics(trace, w);
  CHECK(m.rmse_raw == compute_rmse(trace, w));
  REQUIRE(m.confusion.has_value());
  CHECK(m.confusion->tp + m.confusion->fp + m.confusion->tn + m.confusion->fn == 12u * 25u);
  int unsafe = 0;
  for (const auto& s : trace.steps) unsafe += s.unsafe_visit;
  CHECK(m.unsafe_actions == unsafe);
  CHECK(m.failures == (unsafe > 0 ? 1 : 0));
}
