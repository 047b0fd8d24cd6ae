#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "safe_explore/agent.hpp"
#include "safe_explore/metrics.hpp"

namespace safe_explore::cli {

enum class EnvKind { random, terrain };

struct RandomEnvConfig {
  int rows = 20;
  int cols = 20;
  double variance = 1.0;
  double length_scale = 2.0;
  double temporal_drift = 0.1;
  double threshold = 0.0;
  double noise_std = 0.001;
  double start_margin = 0.2;
};

struct TerrainEnvConfig {
  std::vector<std::filesystem::path> frames;  // ordered by time
  int steps = 200;
  double threshold = -0.25;
  double noise_std = 0.001;
  double start_margin = 0.2;
};

struct EnvConfig {
  EnvKind kind = EnvKind::random;
  RandomEnvConfig random;
  TerrainEnvConfig terrain;
};

struct AgentEntry {
  agent::Policy policy = agent::Policy::st_safemdp;
  double beta = 2.0;
  double p = 3.0;
  safesets::LipschitzParams lipschitz{0.1, 0.1};
  std::optional<stgp::KernelSpec> kernel;
};

struct ExperimentConfig {
  EnvConfig environment;
  stgp::KernelSpec kernel = stgp::default_kernel();
  std::vector<AgentEntry> agents;
  int runs = 1;
  int horizon = 100;
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path output_dir = "out";
  bool write_traces = true;
  bool write_sets = false;
};

// Throws Error(config) with a message naming the offending key.
ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
// Relative terrain frame paths are resolved against the config's directory.
ExperimentConfig load_config(const std::filesystem::path& path);

// Keeps only the listed policies, in the listed order.
void select_policies(ExperimentConfig& cfg, const std::vector<agent::Policy>& policies);

std::uint64_t splitmix64(std::uint64_t x) noexcept;
// Seed of the environment used by every policy at `run_index`.
std::uint64_t env_seed(std::uint64_t base, int run_index) noexcept;
// Seed of one policy's episode at `run_index`.
std::uint64_t agent_seed(std::uint64_t base, int run_index, agent::Policy policy) noexcept;

env::GridWorld make_environment(const ExperimentConfig& cfg, int run_index);

struct ExperimentResult {
  std::vector<eval::PolicyRuns> per_policy;
  std::vector<eval::PolicySummary> summary;
  std::vector<std::vector<agent::EpisodeTrace>> traces;  // [policy][run], if kept
};

struct RunOptions {
  bool keep_traces = false;
  bool write_files = true;
};

/// Runs every policy on every run index, using up to cfg.workers threads.
/// With write_files, writes per-run traces, runs.csv and summary.csv into
/// cfg.output_dir from the calling thread only.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

}  // namespace safe_explore::cli
