#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "safe_explore/env.hpp"
#include "safe_explore/kernel.hpp"
#include "safe_explore/safesets.hpp"

namespace safe_explore::agent {

enum class Policy { st_safemdp, random, unsafe, ignore_time, no_cross_cov };

inline constexpr std::array<Policy, 5> kAllPolicies = {
    Policy::st_safemdp, Policy::random, Policy::unsafe, Policy::ignore_time,
    Policy::no_cross_cov};

std::string_view to_string(Policy p) noexcept;
// Throws Error(config) for unknown names.
Policy policy_from_string(std::string_view name);
// Whether the policy maintains safe sets (and so has classification metrics).
bool is_safety_aware(Policy p) noexcept;

struct AgentConfig {
  Policy policy = Policy::st_safemdp;
  double beta = 2.0;
  double p = 3.0;  // weight of the confidence width in the sampling score
  safesets::LipschitzParams lipschitz{0.1, 0.1};
  // Kernel of the full spatio-temporal model. Baselines derive theirs from it
  // unless `kernel_override` is given.
  stgp::KernelSpec kernel = stgp::default_kernel();
  std::optional<stgp::KernelSpec> kernel_override;
  std::uint64_t seed = 0;
};

/// Kernel the given policy actually fits: the spatial part for ignore_time,
/// the cross-term-free part for no_cross_cov, the full kernel otherwise.
stgp::KernelSpec policy_kernel(const AgentConfig& cfg);

struct StepRecord {
  int t = 0;
  StateId state = 0;
  double y = 0.0;
  std::optional<safesets::SafeSets> sets;  // absent for random / unsafe
  bool unsafe_visit = false;
  bool stuck = false;
  // Posterior mean over every state at time t after observing y.
  std::vector<double> predicted_mean;
};

struct EpisodeTrace {
  Policy policy = Policy::st_safemdp;
  GridShape shape;
  std::vector<StepRecord> steps;
  std::size_t calibration_warnings = 0;
};

struct Selection {
  StateId state = 0;
  bool stuck = false;
};

/// Lowest-index member of `set` maximizing scores[s]; -1 if `set` is empty.
StateId argmax_score(const StateSet& set, std::span<const double> scores);

/// Maximizes mean(t, s) + p * width(t, s) over `primary` when nonempty, else
/// over `fallback`. With both empty the agent keeps `current` and is flagged
/// stuck.
Selection select_next(const StateSet& primary, const StateSet& fallback,
                      std::span<const double> mean_at_t, const stgp::BoundsTable& bounds, int t,
                      double p, StateId current);

/// Runs `steps` iterations (at most the world's horizon) of the policy named
/// in `cfg`.
EpisodeTrace run_episode(const env::GridWorld& world, const AgentConfig& cfg, int steps);

// Individual policies; run_episode dispatches to these.
EpisodeTrace run_st_safemdp(const env::GridWorld& world, const AgentConfig& cfg, int steps);
EpisodeTrace run_baseline_random(const env::GridWorld& world, const AgentConfig& cfg, int steps);
EpisodeTrace run_baseline_unsafe(const env::GridWorld& world, const AgentConfig& cfg, int steps);
EpisodeTrace run_baseline_ignore_time(const env::GridWorld& world, const AgentConfig& cfg,
                                      int steps);
EpisodeTrace run_baseline_no_cross_cov(const env::GridWorld& world, const AgentConfig& cfg,
                                       int steps);

/// CSV header `step,t,row,col,y,unsafe,stuck`.
void write_trace_csv(std::ostream& out, const EpisodeTrace& trace);
void write_trace_csv(const std::filesystem::path& path, const EpisodeTrace& trace);
/// CSV header `t,set_name,state`.
void write_sets_csv(std::ostream& out, const EpisodeTrace& trace);
void write_sets_csv(const std::filesystem::path& path, const EpisodeTrace& trace);

}  // namespace safe_explore::agent
