#include "safe_explore/safe_explore.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "safe_explore/error.hpp"
#include "safe_explore/experiment.hpp"

using namespace safe_explore;

struct se_config {
  cli::ExperimentConfig cfg;
  std::string json_cache;
};

struct se_env {
  env::GridWorld world;
  std::optional<env::TerrainNormalization> normalization;
  std::vector<int> frame_steps;
};

struct se_trace {
  agent::EpisodeTrace trace;
};

struct se_result {
  std::vector<eval::PolicySummary> summary;
  std::string summary_path;
};

namespace {

thread_local std::string last_error;

se_status status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_parameter:
    case ErrorCode::invalid_action:
    case ErrorCode::domain_too_large:
      return SE_ERR_INVALID_ARGUMENT;
    case ErrorCode::config:
      return SE_ERR_CONFIG;
    case ErrorCode::io:
      return SE_ERR_IO;
    case ErrorCode::format:
    case ErrorCode::degenerate_normalization:
      return SE_ERR_FORMAT;
    case ErrorCode::invalid_kernel:
    case ErrorCode::ill_conditioned:
      return SE_ERR_NUMERIC;
    case ErrorCode::aggregation:
      return SE_ERR_RUNTIME;
  }
  return SE_ERR_RUNTIME;
}

se_status fail(se_status status, std::string msg) {
  last_error = std::move(msg);
  return status;
}

template <typename F>
se_status guarded(F&& f) {
  try {
    f();
    return SE_OK;
  } catch (const Error& e) {
    return fail(status_for(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SE_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(SE_ERR_RUNTIME, e.what());
  }
}

#define SE_REQUIRE(cond, what) \
  do {                         \
    if (!(cond)) return fail(SE_ERR_INVALID_ARGUMENT, what); \
  } while (0)

bool valid_policy(se_policy p) { return p >= SE_POLICY_ST_SAFEMDP && p <= SE_POLICY_NO_CROSS_COV; }

agent::Policy to_policy(se_policy p) { return static_cast<agent::Policy>(p); }

double or_nan(const std::optional<eval::Stat>& s) {
  return s ? s->mean : std::numeric_limits<double>::quiet_NaN();
}

double ratio_or_nan(std::size_t num, std::size_t den) {
  return den == 0 ? std::numeric_limits<double>::quiet_NaN()
                  : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

extern "C" {

const char* se_last_error(void) { return last_error.c_str(); }

const char* se_status_string(se_status status) {
  switch (status) {
    case SE_OK: return "ok";
    case SE_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SE_ERR_CONFIG: return "configuration error";
    case SE_ERR_IO: return "i/o error";
    case SE_ERR_FORMAT: return "format error";
    case SE_ERR_NUMERIC: return "numerical error";
    case SE_ERR_RUNTIME: return "runtime error";
  }
  return "unknown status";
}

const char* se_version(void) { return "0.1.0"; }

se_status se_config_load(const char* path, se_config** out) {
  SE_REQUIRE(path && out, "null argument");
  return guarded([&] { *out = new se_config{cli::load_config(path), {}}; });
}

se_status se_config_parse(const char* json_text, se_config** out) {
  SE_REQUIRE(json_text && out, "null argument");
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::config, e.what());
    }
    *out = new se_config{cli::parse_config(j), {}};
  });
}

const char* se_config_json(se_config* cfg) {
  if (!cfg) return nullptr;
  cfg->json_cache = cli::to_json(cfg->cfg).dump(2);
  return cfg->json_cache.c_str();
}

se_status se_config_set_seed(se_config* cfg, uint64_t seed) {
  SE_REQUIRE(cfg, "null config");
  cfg->cfg.seed = seed;
  return SE_OK;
}

se_status se_config_set_runs(se_config* cfg, int runs) {
  SE_REQUIRE(cfg, "null config");
  if (runs < 1) return fail(SE_ERR_CONFIG, "runs must be at least 1");
  cfg->cfg.runs = runs;
  return SE_OK;
}

se_status se_config_set_workers(se_config* cfg, int workers) {
  SE_REQUIRE(cfg, "null config");
  if (workers < 1) return fail(SE_ERR_CONFIG, "workers must be at least 1");
  cfg->cfg.workers = workers;
  return SE_OK;
}

se_status se_config_set_output_dir(se_config* cfg, const char* dir) {
  SE_REQUIRE(cfg && dir, "null argument");
  cfg->cfg.output_dir = dir;
  return SE_OK;
}

se_status se_config_select_policies(se_config* cfg, const char* policies) {
  SE_REQUIRE(cfg && policies, "null argument");
  return guarded([&] {
    std::vector<agent::Policy> list;
    std::stringstream ss(policies);
    std::string name;
    while (std::getline(ss, name, ','))
      if (!name.empty()) list.push_back(agent::policy_from_string(name));
    cli::select_policies(cfg->cfg, list);
  });
}

uint64_t se_config_seed(const se_config* cfg) { return cfg ? cfg->cfg.seed : 0; }

void se_config_free(se_config* cfg) { delete cfg; }

se_status se_env_from_config(const se_config* cfg, int run_index, se_env** out) {
  SE_REQUIRE(cfg && out, "null argument");
  SE_REQUIRE(run_index >= 0, "run index must be non-negative");
  return guarded([&] {
    const auto& c = cfg->cfg;
    if (c.environment.kind == cli::EnvKind::terrain) {
      std::vector<env::Frame> frames;
      for (const auto& f : c.environment.terrain.frames) frames.push_back(env::read_frame(f));
      const auto& t = c.environment.terrain;
      auto terrain = env::load_terrain_env(frames, t.steps, t.threshold, t.noise_std, t.start_margin);
      *out = new se_env{std::move(terrain.world), terrain.normalization, terrain.frame_steps};
    } else {
      *out = new se_env{cli::make_environment(c, run_index), std::nullopt, {}};
    }
  });
}

se_status se_env_load_terrain(const char* const* frame_paths, size_t count, int steps,
                              double threshold, se_env** out) {
  SE_REQUIRE(frame_paths && out, "null argument");
  return guarded([&] {
    std::vector<env::Frame> frames;
    for (size_t i = 0; i < count; ++i) {
      if (!frame_paths[i]) throw Error(ErrorCode::invalid_parameter, "null frame path");
      frames.push_back(env::read_frame(frame_paths[i]));
    }
    auto terrain = env::load_terrain_env(frames, steps, threshold);
    *out = new se_env{std::move(terrain.world), terrain.normalization, terrain.frame_steps};
  });
}

se_status se_env_info_get(const se_env* e, se_env_info* out) {
  SE_REQUIRE(e && out, "null argument");
  const auto& w = e->world;
  *out = se_env_info{w.shape().rows, w.shape().cols, w.horizon(), w.threshold(),
                     w.noise_std(), w.min_safety(), w.max_safety(),
                     static_cast<int>(w.initial_safe().first()),
                     static_cast<int>(w.initial_safe().count())};
  return SE_OK;
}

se_status se_env_safety(const se_env* e, int t, int state, double* out) {
  SE_REQUIRE(e && out, "null argument");
  SE_REQUIRE(t >= 0 && t < e->world.horizon(), "time index out of range");
  SE_REQUIRE(e->world.shape().valid(state), "state out of range");
  *out = e->world.safety(t, state);
  return SE_OK;
}

se_status se_env_normalization(const se_env* e, se_normalization* out) {
  SE_REQUIRE(e && out, "null argument");
  if (!e->normalization) return fail(SE_ERR_INVALID_ARGUMENT, "environment is not a terrain");
  const auto& n = *e->normalization;
  *out = se_normalization{n.input_min, n.input_max, n.output_min, n.output_max};
  return SE_OK;
}

se_status se_env_write_csv(const se_env* e, const char* path) {
  SE_REQUIRE(e && path, "null argument");
  return guarded([&] { env::write_env_csv(path, e->world); });
}

se_status se_env_write_meta(const se_env* e, const char* path) {
  SE_REQUIRE(e && path, "null argument");
  return guarded([&] {
    const auto& w = e->world;
    nlohmann::json j = {{"rows", w.shape().rows},
                        {"cols", w.shape().cols},
                        {"horizon", w.horizon()},
                        {"threshold", w.threshold()},
                        {"noise_std", w.noise_std()},
                        {"initial_safe", w.initial_safe().members()},
                        {"min_safety", w.min_safety()},
                        {"max_safety", w.max_safety()}};
    if (e->normalization) {
      const auto& n = *e->normalization;
      j["normalization"] = {{"input_min", n.input_min},
                            {"input_max", n.input_max},
                            {"output_min", n.output_min},
                            {"output_max", n.output_max}};
      j["frame_steps"] = e->frame_steps;
    }
    std::ofstream out(path, std::ios::binary);
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::io, std::string("failed writing ") + path);
  });
}

void se_env_free(se_env* e) { delete e; }

se_status se_episode_run(const se_env* e, const se_config* cfg, se_policy policy, uint64_t seed,
                         int steps, se_trace** out) {
  SE_REQUIRE(e && cfg && out, "null argument");
  SE_REQUIRE(valid_policy(policy), "unknown policy");
  return guarded([&] {
    agent::AgentConfig ac;
    ac.policy = to_policy(policy);
    ac.kernel = cfg->cfg.kernel;
    ac.seed = seed;
    for (const auto& entry : cfg->cfg.agents) {
      if (entry.policy != ac.policy) continue;
      ac.beta = entry.beta;
      ac.p = entry.p;
      ac.lipschitz = entry.lipschitz;
      ac.kernel_override = entry.kernel;
    }
    *out = new se_trace{agent::run_episode(e->world, ac, steps)};
  });
}

int se_trace_length(const se_trace* t) { return t ? static_cast<int>(t->trace.steps.size()) : 0; }

se_status se_trace_step(const se_trace* t, int step, int* state, double* y, int* unsafe,
                        int* stuck) {
  SE_REQUIRE(t, "null trace");
  SE_REQUIRE(step >= 0 && step < se_trace_length(t), "step out of range");
  const auto& r = t->trace.steps[static_cast<std::size_t>(step)];
  if (state) *state = r.state;
  if (y) *y = r.y;
  if (unsafe) *unsafe = r.unsafe_visit ? 1 : 0;
  if (stuck) *stuck = r.stuck ? 1 : 0;
  return SE_OK;
}

int se_trace_unsafe_count(const se_trace* t) {
  if (!t) return 0;
  int n = 0;
  for (const auto& r : t->trace.steps) n += r.unsafe_visit ? 1 : 0;
  return n;
}

se_status se_trace_write_csv(const se_trace* t, const char* path) {
  SE_REQUIRE(t && path, "null argument");
  return guarded([&] { agent::write_trace_csv(std::filesystem::path(path), t->trace); });
}

void se_trace_free(se_trace* t) { delete t; }

se_status se_experiment_run(const se_config* cfg, se_result** out) {
  SE_REQUIRE(cfg && out, "null argument");
  return guarded([&] {
    auto res = cli::run_experiment(cfg->cfg);
    *out = new se_result{std::move(res.summary), (cfg->cfg.output_dir / "summary.csv").string()};
  });
}

int se_result_policy_count(const se_result* r) {
  return r ? static_cast<int>(r->summary.size()) : 0;
}

se_status se_result_summary(const se_result* r, int index, se_policy_summary* out) {
  SE_REQUIRE(r && out, "null argument");
  SE_REQUIRE(index >= 0 && index < se_result_policy_count(r), "index out of range");
  const auto& s = r->summary[static_cast<std::size_t>(index)];
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const bool cls = agent::is_safety_aware(s.policy);
  *out = se_policy_summary{static_cast<se_policy>(s.policy),
                           static_cast<int>(s.runs),
                           s.normalized_rmse ? s.normalized_rmse->mean : nan,
                           s.normalized_rmse ? s.normalized_rmse->sd : nan,
                           s.rmse_raw.mean,
                           s.failures,
                           s.unsafe_actions,
                           cls ? 1 : 0,
                           or_nan(s.accuracy),
                           or_nan(s.precision),
                           or_nan(s.recall),
                           cls ? ratio_or_nan(s.pooled.tp, s.pooled.tp + s.pooled.fp) : nan,
                           cls ? ratio_or_nan(s.pooled.tp, s.pooled.tp + s.pooled.fn) : nan};
  return SE_OK;
}

const char* se_result_summary_path(const se_result* r) { return r ? r->summary_path.c_str() : nullptr; }

void se_result_free(se_result* r) { delete r; }

const char* se_policy_name(se_policy policy) {
  if (!valid_policy(policy)) return nullptr;
  return agent::to_string(to_policy(policy)).data();
}

}  // extern "C"
