#include "safe_explore/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "safe_explore/error.hpp"

namespace safe_explore::eval {

Classification classification_from(const Confusion& c) {
  auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  return {ratio(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn), ratio(c.tp, c.tp + c.fp),
          ratio(c.tp, c.tp + c.fn)};
}

double compute_rmse(const agent::EpisodeTrace& trace, const env::GridWorld& world) {
  if (trace.steps.empty()) throw Error(ErrorCode::invalid_parameter, "RMSE of an empty trace");
  const auto n = static_cast<std::size_t>(world.num_states());
  double total = 0.0;
  for (const auto& r : trace.steps) {
    if (r.predicted_mean.size() != n)
      throw Error(ErrorCode::invalid_parameter,
                  "step " + std::to_string(r.t) + " has no prediction for every state");
    const auto& truth = world.slice(r.t);
    double sq = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const double d = r.predicted_mean[s] - truth[s];
      sq += d * d;
    }
    total += std::sqrt(sq / static_cast<double>(n));
  }
  return total / static_cast<double>(trace.steps.size());
}

std::optional<Confusion> compute_confusion(const agent::EpisodeTrace& trace,
                                           const env::GridWorld& world) {
  Confusion c;
  bool any = false;
  for (const auto& r : trace.steps) {
    if (!r.sets) continue;
    any = true;
    for (StateId s = 0; s < world.num_states(); ++s) {
      const bool predicted = r.sets->S_hat.contains(s);
      const bool truth = world.is_safe(r.t, s);
      if (predicted && truth) ++c.tp;
      else if (predicted) ++c.fp;
      else if (truth) ++c.fn;
      else ++c.tn;
    }
  }
  if (!any) return std::nullopt;
  return c;
}

Classification compute_classification(const agent::EpisodeTrace& trace,
                                      const env::GridWorld& world) {
  auto c = compute_confusion(trace, world);
  return c ? classification_from(*c) : Classification{};
}

SafetyCounts count_safety(std::span<const agent::EpisodeTrace> traces) {
  SafetyCounts out;
  for (const auto& tr : traces) {
    int unsafe = 0;
    for (const auto& r : tr.steps) unsafe += r.unsafe_visit ? 1 : 0;
    out.unsafe_actions += unsafe;
    out.failures += unsafe > 0 ? 1 : 0;
  }
  return out;
}

RunMetrics compute_run_metrics(const agent::EpisodeTrace& trace, const env::GridWorld& world) {
  RunMetrics m;
  m.rmse_raw = compute_rmse(trace, world);
  const auto counts = count_safety(std::span(&trace, 1));
  m.failures = counts.failures;
  m.unsafe_actions = counts.unsafe_actions;
  m.confusion = compute_confusion(trace, world);
  if (m.confusion) m.classification = classification_from(*m.confusion);
  return m;
}

std::optional<Stat> mean_sd(std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() == 1) return Stat{mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return Stat{mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

namespace {

template <typename Get>
std::optional<Stat> defined_stat(const std::vector<RunMetrics>& runs, Get get) {
  std::vector<double> vals;
  for (const auto& r : runs)
    if (auto v = get(r.classification)) vals.push_back(*v);
  return mean_sd(vals);
}

}  // namespace

std::vector<PolicySummary> aggregate_runs(std::span<const PolicyRuns> per_policy,
                                          std::optional<agent::Policy> reference) {
  if (per_policy.empty()) throw Error(ErrorCode::aggregation, "no policies to aggregate");
  const PolicyRuns* ref = nullptr;
  if (reference) {
    for (const auto& pr : per_policy)
      if (pr.policy == *reference) ref = &pr;
    if (!ref)
      throw Error(ErrorCode::aggregation,
                  "reference policy " + std::string(agent::to_string(*reference)) + " has no runs");
    for (const auto& r : ref->runs)
      if (!(r.rmse_raw > 0.0))
        throw Error(ErrorCode::aggregation, "reference RMSE is zero; cannot normalize");
  }
  const std::size_t expected = ref ? ref->runs.size() : per_policy.front().runs.size();
  if (expected == 0) throw Error(ErrorCode::aggregation, "no runs to aggregate");

  std::vector<PolicySummary> out;
  for (const auto& pr : per_policy) {
    if (pr.runs.size() != expected)
      throw Error(ErrorCode::aggregation,
                  std::string(agent::to_string(pr.policy)) + " has " +
                      std::to_string(pr.runs.size()) + " runs, expected " +
                      std::to_string(expected));
    PolicySummary s;
    s.policy = pr.policy;
    s.runs = pr.runs.size();
    std::vector<double> norm, raw;
    for (std::size_t i = 0; i < pr.runs.size(); ++i) {
      const auto& r = pr.runs[i];
      raw.push_back(r.rmse_raw);
      if (ref) norm.push_back(r.rmse_raw / ref->runs[i].rmse_raw);
      s.failures += r.failures;
      s.unsafe_actions += r.unsafe_actions;
      if (r.confusion) s.pooled += *r.confusion;
    }
    s.normalized_rmse = mean_sd(norm);
    s.rmse_raw = *mean_sd(raw);
    s.accuracy = defined_stat(pr.runs, [](const Classification& c) { return c.accuracy; });
    s.precision = defined_stat(pr.runs, [](const Classification& c) { return c.precision; });
    s.recall = defined_stat(pr.runs, [](const Classification& c) { return c.recall; });
    out.push_back(s);
  }
  return out;
}

namespace {

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string stat_cells(const std::optional<Stat>& s) {
  return s ? fixed(s->mean) + "," + fixed(s->sd) : std::string("-,-");
}

}  // namespace

std::string summary_csv(std::span<const PolicySummary> rows) {
  std::string out =
      "policy,normalized_rmse_mean,normalized_rmse_sd,failures,unsafe_actions,accuracy_mean,"
      "accuracy_sd,precision_mean,precision_sd,recall_mean,recall_sd\n";
  for (const auto& r : rows) {
    out += std::string(agent::to_string(r.policy)) + "," + stat_cells(r.normalized_rmse) + "," +
           std::to_string(r.failures) + "," + std::to_string(r.unsafe_actions) + "," +
           stat_cells(r.accuracy) + "," + stat_cells(r.precision) + "," + stat_cells(r.recall) +
           "\n";
  }
  return out;
}

}  // namespace safe_explore::eval
