#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "safe_explore/agent.hpp"

namespace safe_explore::eval {

struct Confusion {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

  Confusion& operator+=(const Confusion& o) {
    tp += o.tp; tn += o.tn; fp += o.fp; fn += o.fn;
    return *this;
  }
};

// Ratios with a zero denominator are undefined rather than 0.
struct Classification {
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
};

Classification classification_from(const Confusion& c);

struct RunMetrics {
  double rmse_raw = 0.0;
  int failures = 0;        // 1 if the run had any unsafe visit
  int unsafe_actions = 0;  // number of unsafe visits
  std::optional<Confusion> confusion;  // safety-aware policies only
  Classification classification;
};

/// Mean over steps of the per-step RMSE between the recorded posterior mean
/// and g[t][.] over all states.
double compute_rmse(const agent::EpisodeTrace& trace, const env::GridWorld& world);

/// Predicted positives are S_hat_t, truth is g[t][s] >= h; counts are pooled
/// over all steps. Returns nullopt if the trace carries no safe sets.
std::optional<Confusion> compute_confusion(const agent::EpisodeTrace& trace,
                                           const env::GridWorld& world);
Classification compute_classification(const agent::EpisodeTrace& trace,
                                      const env::GridWorld& world);

struct SafetyCounts {
  int failures = 0;
  int unsafe_actions = 0;
};
SafetyCounts count_safety(std::span<const agent::EpisodeTrace> traces);

RunMetrics compute_run_metrics(const agent::EpisodeTrace& trace, const env::GridWorld& world);

struct Stat {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single value
};
// nullopt for an empty input.
std::optional<Stat> mean_sd(std::span<const double> values);

struct PolicySummary {
  agent::Policy policy;
  std::size_t runs = 0;
  std::optional<Stat> normalized_rmse;  // absent without a reference policy
  Stat rmse_raw;
  int failures = 0;
  int unsafe_actions = 0;
  std::optional<Stat> accuracy;
  std::optional<Stat> precision;
  std::optional<Stat> recall;
  Confusion pooled;  // summed over runs, safety-aware policies only
};

struct PolicyRuns {
  agent::Policy policy;
  std::vector<RunMetrics> runs;  // indexed by run index
};

/// Mean and sd per metric and policy. RMSE is normalized per run index by the
/// reference policy's run on the same environment; with no reference the
/// normalized column is left undefined. Throws Error(aggregation) when run
/// counts differ or a requested reference policy is missing.
std::vector<PolicySummary> aggregate_runs(std::span<const PolicyRuns> per_policy,
                                          std::optional<agent::Policy> reference);

/// Columns: policy, normalized RMSE, failures, unsafe actions, accuracy,
/// precision, recall (each metric as mean and sd; "-" when undefined).
std::string summary_csv(std::span<const PolicySummary> rows);

}  // namespace safe_explore::eval
