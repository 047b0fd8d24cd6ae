#include "safe_explore/agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <string>

#include "safe_explore/error.hpp"
#include "safe_explore/gp.hpp"

namespace safe_explore::agent {

using stgp::BoundsTable;
using stgp::GpModel;
using stgp::SpaceTimePoint;

std::string_view to_string(Policy p) noexcept {
  switch (p) {
    case Policy::st_safemdp: return "st_safemdp";
    case Policy::random: return "random";
    case Policy::unsafe: return "unsafe";
    case Policy::ignore_time: return "ignore_time";
    case Policy::no_cross_cov: return "no_cross_cov";
  }
  return "unknown";
}

Policy policy_from_string(std::string_view name) {
  for (Policy p : kAllPolicies)
    if (to_string(p) == name) return p;
  throw Error(ErrorCode::config, "unknown policy '" + std::string(name) + "'");
}

bool is_safety_aware(Policy p) noexcept {
  return p == Policy::st_safemdp || p == Policy::ignore_time || p == Policy::no_cross_cov;
}

stgp::KernelSpec policy_kernel(const AgentConfig& cfg) {
  if (cfg.kernel_override) return *cfg.kernel_override;
  switch (cfg.policy) {
    case Policy::ignore_time: {
      auto k = stgp::spatial_part(cfg.kernel);
      if (!k) throw Error(ErrorCode::config, "ignore_time needs a kernel with a spatial-only term");
      return *k;
    }
    case Policy::no_cross_cov: {
      auto k = stgp::without_cross_terms(cfg.kernel);
      if (!k) throw Error(ErrorCode::config, "no_cross_cov needs a kernel with non-product terms");
      return *k;
    }
    default:
      return cfg.kernel;
  }
}

StateId argmax_score(const StateSet& set, std::span<const double> scores) {
  StateId best = -1;
  double best_score = 0.0;
  set.for_each([&](StateId s) {
    const double v = scores[static_cast<std::size_t>(s)];
    if (best < 0 || v > best_score) {
      best = s;
      best_score = v;
    }
  });
  return best;
}

namespace {

Selection select_by_scores(const StateSet& primary, const StateSet& fallback,
                           std::span<const double> scores, StateId current) {
  if (!primary.empty()) return {argmax_score(primary, scores), false};
  if (!fallback.empty()) return {argmax_score(fallback, scores), false};
  return {current, true};
}

void check_steps(const env::GridWorld& world, int steps) {
  if (steps < 1) throw Error(ErrorCode::invalid_parameter, "an episode needs at least one step");
  if (steps > world.horizon())
    throw Error(ErrorCode::invalid_parameter,
                "episode of " + std::to_string(steps) + " steps exceeds the horizon " +
                    std::to_string(world.horizon()));
}

void check_config(const AgentConfig& cfg) {
  if (!(std::isfinite(cfg.beta) && cfg.beta > 0.0))
    throw Error(ErrorCode::invalid_parameter, "beta must be finite and positive");
  if (!(std::isfinite(cfg.p) && cfg.p >= 0.0))
    throw Error(ErrorCode::invalid_parameter, "p must be finite and non-negative");
  const auto& L = cfg.lipschitz;
  if (!(std::isfinite(L.spatial) && L.spatial >= 0.0 && std::isfinite(L.temporal) &&
        L.temporal >= 0.0))
    throw Error(ErrorCode::invalid_parameter, "Lipschitz constants must be finite and non-negative");
}

// Observation noise and action choice draw from separate streams so that a
// policy's choices never shift the noise sequence.
env::Rng noise_rng(std::uint64_t seed) { return env::Rng(seed); }
env::Rng action_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 1u};
  return env::Rng(seq);
}

std::vector<double> mean_slice(const GpModel& gp, int t) {
  const auto n = gp.grid().size();
  std::vector<SpaceTimePoint> q;
  q.reserve(static_cast<std::size_t>(n));
  for (StateId s = 0; s < n; ++s) q.push_back({t, s});
  const auto post = gp.posterior(q);
  std::vector<double> out(post.size());
  for (std::size_t i = 0; i < post.size(); ++i) out[i] = post[i].mean;
  return out;
}

StateId start_state(const env::GridWorld& world) { return world.initial_safe().first(); }

struct Episode {
  const env::GridWorld& world;
  EpisodeTrace trace;
  env::Rng noise;

  Episode(const env::GridWorld& w, Policy p, std::uint64_t seed)
      : world(w), noise(noise_rng(seed)) {
    trace.policy = p;
    trace.shape = w.shape();
  }

  // Observes the state at time t and appends the record. `model_t` is the
  // time index the model uses for this observation.
  StepRecord& visit(GpModel& gp, int t, int model_t, StateId s, bool stuck,
                    std::optional<safesets::SafeSets> sets) {
    StepRecord rec;
    rec.t = t;
    rec.state = s;
    rec.y = world.observe(t, s, noise);
    rec.unsafe_visit = !world.is_safe(t, s);
    rec.stuck = stuck;
    rec.sets = std::move(sets);
    gp.add_observation({model_t, s}, rec.y);
    rec.predicted_mean = mean_slice(gp, model_t);
    trace.steps.push_back(std::move(rec));
    return trace.steps.back();
  }
};

safesets::SafeSets initial_sets(const env::GridWorld& world, StateId s0) {
  const auto n = static_cast<std::size_t>(world.num_states());
  safesets::SafeSets sets{world.initial_safe(), world.initial_safe(), StateSet(n), StateSet(n),
                          StateSet(n)};
  sets.candidates.insert(s0);
  return sets;
}

EpisodeTrace run_time_aware(const env::GridWorld& world, const AgentConfig& cfg, int steps,
                            Policy label) {
  check_steps(world, steps);
  check_config(cfg);
  const GridShape& grid = world.shape();
  const double h = world.threshold();
  const auto& L = cfg.lipschitz;

  GpModel gp(policy_kernel(cfg), grid, world.noise_std() * world.noise_std());
  BoundsTable bounds(static_cast<std::size_t>(grid.size()), cfg.beta, h, world.initial_safe());
  Episode ep(world, label, cfg.seed);

  StateId current = start_state(world);
  StateSet prev_S_hat = world.initial_safe();
  ep.visit(gp, 0, 0, current, false, initial_sets(world, current));

  for (int t = 1; t < steps; ++t) {
    const int times[] = {t - 1, t, t + 1, t + 2};
    const auto means = stgp::refresh_bounds(gp, bounds, times);
    bounds.forget_before(t - 1);

    safesets::SafeSets sets;
    sets.S = safesets::compute_S(prev_S_hat, bounds, t, L, h, grid);
    sets.G_next = safesets::compute_G(t - 1, t + 1, prev_S_hat, bounds, L, h, grid);
    sets.S_hat = safesets::compute_S_hat(sets.S, prev_S_hat, sets.G_next, grid);
    sets.expanders = safesets::compute_expanders(sets.S_hat, sets.S, bounds, t, L, h, grid);
    sets.candidates = safesets::compute_candidates(current, grid);

    const Selection next = select_next(sets.expanders & sets.candidates,
                                       sets.S_hat & sets.candidates, means[1], bounds, t, cfg.p,
                                       current);
    current = next.state;
    prev_S_hat = sets.S_hat;
    ep.visit(gp, t, t, current, next.stuck, std::move(sets));
  }
  ep.trace.calibration_warnings = bounds.warning_count();
  return std::move(ep.trace);
}

}  // namespace

Selection select_next(const StateSet& primary, const StateSet& fallback,
                      std::span<const double> mean_at_t, const BoundsTable& bounds, int t,
                      double p, StateId current) {
  std::vector<double> scores(mean_at_t.size(), 0.0);
  auto score = [&](StateId s) {
    scores[static_cast<std::size_t>(s)] =
        mean_at_t[static_cast<std::size_t>(s)] + p * bounds.width(SpaceTimePoint{t, s});
  };
  primary.for_each(score);
  fallback.for_each(score);
  return select_by_scores(primary, fallback, scores, current);
}

EpisodeTrace run_st_safemdp(const env::GridWorld& world, const AgentConfig& cfg, int steps) {
  return run_time_aware(world, cfg, steps, Policy::st_safemdp);
}

EpisodeTrace run_baseline_no_cross_cov(const env::GridWorld& world, const AgentConfig& cfg,
                                       int steps) {
  AgentConfig c = cfg;
  c.policy = Policy::no_cross_cov;
  return run_time_aware(world, c, steps, Policy::no_cross_cov);
}

EpisodeTrace run_baseline_random(const env::GridWorld& world, const AgentConfig& cfg, int steps) {
  check_steps(world, steps);
  check_config(cfg);
  // The model only feeds the RMSE metric; it never steers the agent.
  GpModel gp(policy_kernel(cfg), world.shape(), world.noise_std() * world.noise_std());
  Episode ep(world, Policy::random, cfg.seed);
  env::Rng rng = action_rng(cfg.seed);

  StateId current = start_state(world);
  ep.visit(gp, 0, 0, current, false, std::nullopt);
  for (int t = 1; t < steps; ++t) {
    const auto actions = world.available_actions(current);
    std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
    current = world.transition(current, actions[pick(rng)]);
    ep.visit(gp, t, t, current, false, std::nullopt);
  }
  return std::move(ep.trace);
}

EpisodeTrace run_baseline_unsafe(const env::GridWorld& world, const AgentConfig& cfg, int steps) {
  check_steps(world, steps);
  check_config(cfg);
  const GridShape& grid = world.shape();
  GpModel gp(policy_kernel(cfg), grid, world.noise_std() * world.noise_std());
  Episode ep(world, Policy::unsafe, cfg.seed);

  StateId current = start_state(world);
  ep.visit(gp, 0, 0, current, false, std::nullopt);
  for (int t = 1; t < steps; ++t) {
    const StateSet psi = safesets::compute_candidates(current, grid);
    std::vector<double> var(static_cast<std::size_t>(grid.size()), 0.0);
    psi.for_each([&](StateId s) { var[static_cast<std::size_t>(s)] = gp.posterior({t, s}).var; });
    current = argmax_score(psi, var);
    ep.visit(gp, t, t, current, false, std::nullopt);
  }
  return std::move(ep.trace);
}

EpisodeTrace run_baseline_ignore_time(const env::GridWorld& world, const AgentConfig& cfg,
                                      int steps) {
  check_steps(world, steps);
  check_config(cfg);
  AgentConfig c = cfg;
  c.policy = Policy::ignore_time;
  const GridShape& grid = world.shape();
  const double h = world.threshold();
  const double Ls = cfg.lipschitz.spatial;

  // Every observation is keyed to time index 0, so bounds and the running
  // intersection span the whole episode.
  GpModel gp(policy_kernel(c), grid, world.noise_std() * world.noise_std());
  BoundsTable bounds(static_cast<std::size_t>(grid.size()), cfg.beta, h, world.initial_safe());
  Episode ep(world, Policy::ignore_time, cfg.seed);

  StateId current = start_state(world);
  StateSet prev_S_hat = world.initial_safe();
  ep.visit(gp, 0, 0, current, false, initial_sets(world, current));

  const int times[] = {0};
  for (int t = 1; t < steps; ++t) {
    stgp::refresh_bounds(gp, bounds, times);

    safesets::SafeSets sets;
    sets.S = safesets::compute_S_static(prev_S_hat, bounds, Ls, h, grid);
    sets.S_hat = safesets::compute_S_hat_static(sets.S, prev_S_hat, grid);
    sets.G_next = StateSet(static_cast<std::size_t>(grid.size()));
    sets.expanders = safesets::compute_expanders_static(sets.S_hat, sets.S, bounds, Ls, h, grid);
    sets.candidates = safesets::compute_candidates(current, grid);

    std::vector<double> width(static_cast<std::size_t>(grid.size()));
    for (StateId s = 0; s < grid.size(); ++s)
      width[static_cast<std::size_t>(s)] = bounds.width(SpaceTimePoint{0, s});
    const Selection next = select_by_scores(sets.expanders & sets.candidates,
                                            sets.S_hat & sets.candidates, width, current);
    current = next.state;
    prev_S_hat = sets.S_hat;
    ep.visit(gp, t, 0, current, next.stuck, std::move(sets));
  }
  ep.trace.calibration_warnings = bounds.warning_count();
  return std::move(ep.trace);
}

EpisodeTrace run_episode(const env::GridWorld& world, const AgentConfig& cfg, int steps) {
  switch (cfg.policy) {
    case Policy::st_safemdp: return run_st_safemdp(world, cfg, steps);
    case Policy::random: return run_baseline_random(world, cfg, steps);
    case Policy::unsafe: return run_baseline_unsafe(world, cfg, steps);
    case Policy::ignore_time: return run_baseline_ignore_time(world, cfg, steps);
    case Policy::no_cross_cov: return run_baseline_no_cross_cov(world, cfg, steps);
  }
  throw Error(ErrorCode::invalid_parameter, "unknown policy");
}

namespace {

template <typename Body>
void write_file(const std::filesystem::path& path, Body&& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  body(out);
  if (!out) throw Error(ErrorCode::io, "failed writing " + path.string());
}

}  // namespace

void write_trace_csv(std::ostream& out, const EpisodeTrace& trace) {
  const auto old = out.precision(17);
  out << "step,t,row,col,y,unsafe,stuck\n";
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& r = trace.steps[i];
    out << i << ',' << r.t << ',' << trace.shape.row(r.state) << ',' << trace.shape.col(r.state)
        << ',' << r.y << ',' << (r.unsafe_visit ? 1 : 0) << ',' << (r.stuck ? 1 : 0) << '\n';
  }
  out.precision(old);
}

void write_trace_csv(const std::filesystem::path& path, const EpisodeTrace& trace) {
  write_file(path, [&](std::ostream& out) { write_trace_csv(out, trace); });
}

void write_sets_csv(std::ostream& out, const EpisodeTrace& trace) {
  out << "t,set_name,state\n";
  for (const auto& r : trace.steps) {
    if (!r.sets) continue;
    const std::pair<const char*, const StateSet*> named[] = {
        {"S", &r.sets->S},
        {"S_hat", &r.sets->S_hat},
        {"G_next", &r.sets->G_next},
        {"expanders", &r.sets->expanders},
        {"candidates", &r.sets->candidates}};
    for (const auto& [name, set] : named)
      set->for_each([&](StateId s) { out << r.t << ',' << name << ',' << s << '\n'; });
  }
}

void write_sets_csv(const std::filesystem::path& path, const EpisodeTrace& trace) {
  write_file(path, [&](std::ostream& out) { write_sets_csv(out, trace); });
}

}  // namespace safe_explore::agent
