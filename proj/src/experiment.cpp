#include "safe_explore/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "safe_explore/error.hpp"

namespace safe_explore::cli {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::config, msg); }

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_error(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      config_error("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_opt(const json& j, const char* key, const std::string& where, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception&) {
    config_error(where + "." + key + " has the wrong type");
  }
}

template <typename T>
T read_req(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) config_error(where + "." + key + " is required");
  T out{};
  read_opt(j, key, where, out);
  return out;
}

void require(bool ok, const std::string& msg) {
  if (!ok) config_error(msg);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }
bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

stgp::KernelSpec parse_kernel(const json& j, const std::string& where) {
  try {
    return stgp::kernel_from_json(j);
  } catch (const Error& e) {
    config_error(where + ": " + e.what());
  }
}

EnvConfig parse_environment(const json& j) {
  const std::string where = "environment";
  if (!j.is_object()) config_error("environment must be an object");
  EnvConfig env;
  const auto kind = read_req<std::string>(j, "kind", where);
  if (kind == "random") {
    env.kind = EnvKind::random;
    check_keys(j, where, {"kind", "rows", "cols", "variance", "length_scale", "temporal_drift",
                          "threshold", "noise_std", "start_margin"});
    auto& r = env.random;
    read_opt(j, "rows", where, r.rows);
    read_opt(j, "cols", where, r.cols);
    read_opt(j, "variance", where, r.variance);
    read_opt(j, "length_scale", where, r.length_scale);
    read_opt(j, "temporal_drift", where, r.temporal_drift);
    read_opt(j, "threshold", where, r.threshold);
    read_opt(j, "noise_std", where, r.noise_std);
    read_opt(j, "start_margin", where, r.start_margin);
    require(r.rows > 0 && r.cols > 0, "environment.rows and cols must be positive");
    require(finite_positive(r.variance), "environment.variance must be positive");
    require(finite_positive(r.length_scale), "environment.length_scale must be positive");
    require(finite_nonneg(r.temporal_drift), "environment.temporal_drift must be non-negative");
    require(std::isfinite(r.threshold), "environment.threshold must be finite");
    require(finite_nonneg(r.noise_std), "environment.noise_std must be non-negative");
    require(finite_nonneg(r.start_margin), "environment.start_margin must be non-negative");
  } else if (kind == "terrain") {
    env.kind = EnvKind::terrain;
    check_keys(j, where, {"kind", "frames", "steps", "threshold", "noise_std", "start_margin"});
    auto& t = env.terrain;
    for (const auto& f : read_req<std::vector<std::string>>(j, "frames", where))
      t.frames.emplace_back(f);
    read_opt(j, "steps", where, t.steps);
    read_opt(j, "threshold", where, t.threshold);
    read_opt(j, "noise_std", where, t.noise_std);
    read_opt(j, "start_margin", where, t.start_margin);
    require(t.frames.size() >= 2, "environment.frames needs at least two frames");
    require(t.steps >= static_cast<int>(t.frames.size()),
            "environment.steps must be at least the number of frames");
    require(std::isfinite(t.threshold), "environment.threshold must be finite");
    require(finite_nonneg(t.noise_std), "environment.noise_std must be non-negative");
    require(finite_nonneg(t.start_margin), "environment.start_margin must be non-negative");
  } else {
    config_error("environment.kind must be 'random' or 'terrain', got '" + kind + "'");
  }
  return env;
}

AgentEntry parse_agent(const json& j, std::size_t index) {
  const std::string where = "agents[" + std::to_string(index) + "]";
  check_keys(j, where, {"policy", "beta", "p", "L_s", "L_t", "kernel"});
  AgentEntry a;
  a.policy = agent::policy_from_string(read_req<std::string>(j, "policy", where));
  read_opt(j, "beta", where, a.beta);
  read_opt(j, "p", where, a.p);
  read_opt(j, "L_s", where, a.lipschitz.spatial);
  read_opt(j, "L_t", where, a.lipschitz.temporal);
  if (j.contains("kernel")) a.kernel = parse_kernel(j.at("kernel"), where + ".kernel");
  require(finite_positive(a.beta), where + ".beta must be positive");
  require(finite_nonneg(a.p), where + ".p must be non-negative");
  require(finite_nonneg(a.lipschitz.spatial) && finite_nonneg(a.lipschitz.temporal),
          where + ".L_s and L_t must be non-negative");
  return a;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  check_keys(j, "config", {"environment", "kernel", "agents", "runs", "horizon", "seed", "workers",
                           "output_dir", "write_traces", "write_sets"});
  ExperimentConfig cfg;
  if (!j.contains("environment")) config_error("config.environment is required");
  cfg.environment = parse_environment(j.at("environment"));
  if (j.contains("kernel")) cfg.kernel = parse_kernel(j.at("kernel"), "kernel");

  if (!j.contains("agents") || !j.at("agents").is_array() || j.at("agents").empty())
    config_error("config.agents must be a nonempty list");
  std::set<agent::Policy> seen;
  for (std::size_t i = 0; i < j.at("agents").size(); ++i) {
    auto a = parse_agent(j.at("agents")[i], i);
    if (!seen.insert(a.policy).second)
      config_error("policy " + std::string(agent::to_string(a.policy)) + " is listed twice");
    cfg.agents.push_back(std::move(a));
  }

  read_opt(j, "runs", "config", cfg.runs);
  read_opt(j, "horizon", "config", cfg.horizon);
  read_opt(j, "seed", "config", cfg.seed);
  read_opt(j, "workers", "config", cfg.workers);
  std::string out = cfg.output_dir.string();
  read_opt(j, "output_dir", "config", out);
  cfg.output_dir = out;
  read_opt(j, "write_traces", "config", cfg.write_traces);
  read_opt(j, "write_sets", "config", cfg.write_sets);
  require(cfg.runs >= 1, "config.runs must be at least 1");
  require(cfg.horizon >= 1, "config.horizon must be at least 1");
  require(cfg.workers >= 1, "config.workers must be at least 1");
  if (cfg.environment.kind == EnvKind::terrain)
    require(cfg.horizon <= cfg.environment.terrain.steps,
            "config.horizon exceeds the terrain's number of steps");
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  json env;
  if (cfg.environment.kind == EnvKind::random) {
    const auto& r = cfg.environment.random;
    env = {{"kind", "random"},          {"rows", r.rows},
           {"cols", r.cols},            {"variance", r.variance},
           {"length_scale", r.length_scale}, {"temporal_drift", r.temporal_drift},
           {"threshold", r.threshold},  {"noise_std", r.noise_std},
           {"start_margin", r.start_margin}};
  } else {
    const auto& t = cfg.environment.terrain;
    std::vector<std::string> frames;
    for (const auto& f : t.frames) frames.push_back(f.string());
    env = {{"kind", "terrain"},       {"frames", frames},
           {"steps", t.steps},        {"threshold", t.threshold},
           {"noise_std", t.noise_std}, {"start_margin", t.start_margin}};
  }
  json agents = json::array();
  for (const auto& a : cfg.agents) {
    json e = {{"policy", agent::to_string(a.policy)},
              {"beta", a.beta},
              {"p", a.p},
              {"L_s", a.lipschitz.spatial},
              {"L_t", a.lipschitz.temporal}};
    if (a.kernel) e["kernel"] = stgp::to_json(*a.kernel);
    agents.push_back(std::move(e));
  }
  return {{"environment", env},
          {"kernel", stgp::to_json(cfg.kernel)},
          {"agents", agents},
          {"runs", cfg.runs},
          {"horizon", cfg.horizon},
          {"seed", cfg.seed},
          {"workers", cfg.workers},
          {"output_dir", cfg.output_dir.string()},
          {"write_traces", cfg.write_traces},
          {"write_sets", cfg.write_sets}};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config, "cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    config_error(path.string() + ": " + e.what());
  }
  auto cfg = parse_config(j);
  const auto base = path.parent_path();
  for (auto& f : cfg.environment.terrain.frames)
    if (f.is_relative()) f = base / f;
  return cfg;
}

void select_policies(ExperimentConfig& cfg, const std::vector<agent::Policy>& policies) {
  if (policies.empty()) config_error("no policies selected");
  std::vector<AgentEntry> kept;
  for (agent::Policy p : policies) {
    auto it = std::find_if(cfg.agents.begin(), cfg.agents.end(),
                           [&](const AgentEntry& a) { return a.policy == p; });
    if (it == cfg.agents.end())
      config_error("policy " + std::string(agent::to_string(p)) + " is not configured");
    if (std::any_of(kept.begin(), kept.end(), [&](const AgentEntry& a) { return a.policy == p; }))
      config_error("policy " + std::string(agent::to_string(p)) + " is selected twice");
    kept.push_back(*it);
  }
  cfg.agents = std::move(kept);
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t env_seed(std::uint64_t base, int run_index) noexcept {
  return splitmix64(base + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(run_index + 1));
}

std::uint64_t agent_seed(std::uint64_t base, int run_index, agent::Policy policy) noexcept {
  const auto id = static_cast<std::uint64_t>(policy) + 1;
  return splitmix64(env_seed(base, run_index) ^ (0xD1B54A32D192ED03ULL * id));
}

namespace {

env::TerrainEnv load_terrain(const TerrainEnvConfig& t) {
  std::vector<env::Frame> frames;
  for (const auto& f : t.frames) frames.push_back(env::read_frame(f));
  return env::load_terrain_env(frames, t.steps, t.threshold, t.noise_std, t.start_margin);
}

}  // namespace

env::GridWorld make_environment(const ExperimentConfig& cfg, int run_index) {
  if (cfg.environment.kind == EnvKind::terrain) return load_terrain(cfg.environment.terrain).world;
  const auto& r = cfg.environment.random;
  env::EnvGenSpec spec;
  spec.seed = env_seed(cfg.seed, run_index);
  spec.shape = GridShape{r.rows, r.cols};
  spec.variance = r.variance;
  spec.length_scale = r.length_scale;
  spec.temporal_drift = r.temporal_drift;
  spec.horizon = cfg.horizon;
  spec.threshold = r.threshold;
  spec.noise_std = r.noise_std;
  spec.start_margin = r.start_margin;
  return env::generate_random_env(spec);
}

namespace {

struct PolicyOutcome {
  eval::RunMetrics metrics;
  std::size_t stuck_steps = 0;
  std::size_t calibration_warnings = 0;
  std::uint64_t seed = 0;
  std::string trace_csv;
  std::string sets_csv;
  std::optional<agent::EpisodeTrace> trace;
};

struct RunOutcome {
  int run_index = 0;
  std::uint64_t env_seed = 0;
  std::vector<PolicyOutcome> policies;  // in cfg.agents order
};

template <typename Writer>
std::string render(Writer writer, const agent::EpisodeTrace& trace) {
  std::ostringstream ss;
  writer(ss, trace);
  return ss.str();
}

RunOutcome run_one(const ExperimentConfig& cfg, const std::optional<env::GridWorld>& shared_world,
                   int run_index, const RunOptions& opts) {
  RunOutcome out;
  out.run_index = run_index;
  out.env_seed = env_seed(cfg.seed, run_index);
  const env::GridWorld world = shared_world ? *shared_world : make_environment(cfg, run_index);
  const int steps = std::min(cfg.horizon, world.horizon());
  for (const auto& entry : cfg.agents) {
    agent::AgentConfig ac;
    ac.policy = entry.policy;
    ac.beta = entry.beta;
    ac.p = entry.p;
    ac.lipschitz = entry.lipschitz;
    ac.kernel = cfg.kernel;
    ac.kernel_override = entry.kernel;
    ac.seed = agent_seed(cfg.seed, run_index, entry.policy);

    auto trace = agent::run_episode(world, ac, steps);
    PolicyOutcome po;
    po.seed = ac.seed;
    po.metrics = eval::compute_run_metrics(trace, world);
    po.calibration_warnings = trace.calibration_warnings;
    for (const auto& r : trace.steps) po.stuck_steps += r.stuck ? 1 : 0;
    if (opts.write_files) {
      auto trace_writer = [](std::ostream& o, const agent::EpisodeTrace& t) {
        agent::write_trace_csv(o, t);
      };
      auto sets_writer = [](std::ostream& o, const agent::EpisodeTrace& t) {
        agent::write_sets_csv(o, t);
      };
      if (cfg.write_traces) po.trace_csv = render(trace_writer, trace);
      if (cfg.write_sets) po.sets_csv = render(sets_writer, trace);
    }
    if (opts.keep_traces) po.trace = std::move(trace);
    out.policies.push_back(std::move(po));
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::io, "failed writing " + path.string());
}

std::string run_file_name(agent::Policy p, int run_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_run%04d.csv", run_index);
  return std::string(agent::to_string(p)) + buf;
}

std::string opt_cell(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

std::string runs_csv(const ExperimentConfig& cfg, const std::vector<RunOutcome>& runs) {
  std::string out =
      "policy,run,env_seed,agent_seed,rmse_raw,failures,unsafe_actions,tp,fp,tn,fn,accuracy,"
      "precision,recall,stuck_steps,calibration_warnings\n";
  for (std::size_t a = 0; a < cfg.agents.size(); ++a) {
    for (const auto& run : runs) {
      const auto& po = run.policies[a];
      const auto& m = po.metrics;
      std::string conf = "-,-,-,-";
      if (m.confusion)
        conf = std::to_string(m.confusion->tp) + "," + std::to_string(m.confusion->fp) + "," +
               std::to_string(m.confusion->tn) + "," + std::to_string(m.confusion->fn);
      out += std::string(agent::to_string(cfg.agents[a].policy)) + "," +
             std::to_string(run.run_index) + "," + std::to_string(run.env_seed) + "," +
             std::to_string(po.seed) + "," + opt_cell(m.rmse_raw) + "," +
             std::to_string(m.failures) + "," + std::to_string(m.unsafe_actions) + "," + conf +
             "," + opt_cell(m.classification.accuracy) + "," +
             opt_cell(m.classification.precision) + "," + opt_cell(m.classification.recall) +
             "," + std::to_string(po.stuck_steps) + "," +
             std::to_string(po.calibration_warnings) + "\n";
    }
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  if (cfg.agents.empty()) config_error("no policies to run");
  if (cfg.runs < 1) config_error("runs must be at least 1");

  const auto& out_dir = cfg.output_dir;
  if (opts.write_files) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (cfg.write_traces) std::filesystem::create_directories(out_dir / "traces", ec);
    if (cfg.write_sets) std::filesystem::create_directories(out_dir / "sets", ec);
    if (ec) throw Error(ErrorCode::io, "cannot create " + out_dir.string() + ": " + ec.message());
    std::filesystem::remove(out_dir / "INCOMPLETE", ec);
  }

  // Terrain worlds do not depend on the run index; build them once.
  std::optional<env::GridWorld> shared_world;
  if (cfg.environment.kind == EnvKind::terrain) shared_world.emplace(make_environment(cfg, 0));

  std::vector<RunOutcome> runs(static_cast<std::size_t>(cfg.runs));
  std::atomic<int> next{0};
  std::atomic<bool> abort{false};
  std::mutex mu;
  std::condition_variable cv;
  std::deque<RunOutcome> done;
  std::exception_ptr failure;
  int finished_workers = 0;

  const int workers = std::max(1, std::min(cfg.workers, cfg.runs));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      try {
        for (int i = next++; i < cfg.runs && !abort; i = next++) {
          auto r = run_one(cfg, shared_world, i, opts);
          std::lock_guard lock(mu);
          done.push_back(std::move(r));
          cv.notify_one();
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        abort = true;
      }
      std::lock_guard lock(mu);
      ++finished_workers;
      cv.notify_one();
    });
  }

  // Single collector: only this thread touches the output directory.
  std::exception_ptr write_failure;
  for (;;) {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return !done.empty() || finished_workers == workers; });
    if (done.empty()) break;
    RunOutcome r = std::move(done.front());
    done.pop_front();
    lock.unlock();
    try {
      if (opts.write_files && !write_failure) {
        for (std::size_t a = 0; a < cfg.agents.size(); ++a) {
          auto& po = r.policies[a];
          const auto name = run_file_name(cfg.agents[a].policy, r.run_index);
          if (cfg.write_traces) write_text(out_dir / "traces" / name, po.trace_csv);
          if (cfg.write_sets) write_text(out_dir / "sets" / name, po.sets_csv);
          po.trace_csv.clear();
          po.sets_csv.clear();
        }
      }
    } catch (...) {
      write_failure = std::current_exception();
      abort = true;
    }
    runs[static_cast<std::size_t>(r.run_index)] = std::move(r);
  }
  for (auto& t : pool) t.join();

  if (failure || write_failure) {
    if (opts.write_files) {
      std::string msg = "experiment did not finish";
      try {
        std::rethrow_exception(failure ? failure : write_failure);
      } catch (const std::exception& e) {
        msg += ": ";
        msg += e.what();
      }
      std::ofstream(out_dir / "INCOMPLETE") << msg << '\n';
    }
    std::rethrow_exception(failure ? failure : write_failure);
  }

  ExperimentResult result;
  for (std::size_t a = 0; a < cfg.agents.size(); ++a) {
    eval::PolicyRuns pr{cfg.agents[a].policy, {}};
    std::vector<agent::EpisodeTrace> traces;
    for (auto& run : runs) {
      pr.runs.push_back(run.policies[a].metrics);
      if (opts.keep_traces) traces.push_back(std::move(*run.policies[a].trace));
    }
    result.per_policy.push_back(std::move(pr));
    if (opts.keep_traces) result.traces.push_back(std::move(traces));
  }
  const bool has_reference =
      std::any_of(cfg.agents.begin(), cfg.agents.end(),
                  [](const AgentEntry& a) { return a.policy == agent::Policy::st_safemdp; });
  result.summary = eval::aggregate_runs(
      result.per_policy,
      has_reference ? std::optional(agent::Policy::st_safemdp) : std::nullopt);

  if (opts.write_files) {
    write_text(out_dir / "runs.csv", runs_csv(cfg, runs));
    write_text(out_dir / "summary.csv", eval::summary_csv(result.summary));
  }
  return result;
}

}  // namespace safe_explore::cli
