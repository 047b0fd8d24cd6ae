#include "safe_explore/safesets.hpp"

#include <cstdlib>
#include <string>

#include "safe_explore/error.hpp"

namespace safe_explore::safesets {

using stgp::SpaceTimePoint;

double lipschitz_metric(const GridShape& grid, StateId a, StateId b, int t1, int t2,
                        const LipschitzParams& p) {
  return p.spatial * manhattan_distance(grid, a, b) + p.temporal * std::abs(t1 - t2);
}

namespace {

// {s | exists s' in sources: value(s') - (L_s d(s, s') + time_cost) >= h}, evaluated
// in the same operation order as lipschitz_metric.
template <typename Value>
StateSet propagate(const StateSet& sources, Value&& value, double time_cost, double spatial,
                   double h, const GridShape& grid) {
  const auto n = static_cast<StateId>(grid.size());
  StateSet out(static_cast<std::size_t>(n));
  sources.for_each([&](StateId src) {
    const double v = value(src);
    if (!(v - time_cost >= h)) return;  // no state can pass
    for (StateId s = 0; s < n; ++s) {
      if (out.contains(s)) continue;
      if (v - (spatial * manhattan_distance(grid, s, src) + time_cost) >= h) out.insert(s);
    }
  });
  return out;
}

void check_universe(const StateSet& X, const GridShape& grid, const char* what) {
  if (X.universe() != static_cast<std::size_t>(grid.size()))
    throw Error(ErrorCode::invalid_parameter, std::string(what) + " does not match the grid size");
}

}  // namespace

StateSet certify(const StateSet& sources, const BoundsTable& bounds, int from_t, int to_t,
                 const LipschitzParams& p, double h, const GridShape& grid) {
  check_universe(sources, grid, "source set");
  const double time_cost = p.temporal * std::abs(to_t - from_t);
  return propagate(
      sources, [&](StateId s) { return bounds.lower(SpaceTimePoint{from_t, s}); }, time_cost,
      p.spatial, h, grid);
}

StateSet compute_S(const StateSet& prev_S_hat, const BoundsTable& bounds, int t,
                   const LipschitzParams& p, double h, const GridShape& grid) {
  return certify(prev_S_hat, bounds, t - 1, t, p, h, grid);
}

StateSet compute_G(int from_t, int to_t, const StateSet& S_hat_from, const BoundsTable& bounds,
                   const LipschitzParams& p, double h, const GridShape& grid) {
  if (to_t <= from_t)
    throw Error(ErrorCode::invalid_parameter, "conservative set needs to_t > from_t");
  return certify(S_hat_from, bounds, from_t, to_t, p, h, grid);
}

StateSet reach_set(const StateSet& X, const GridShape& grid) {
  check_universe(X, grid, "set");
  StateSet out = X;
  X.for_each([&](StateId s) {
    for (Action a : available_actions(grid, s)) out.insert(transition(grid, s, a));
  });
  return out;
}

StateSet ret_set(const StateSet& X, const GridShape& grid) {
  check_universe(X, grid, "set");
  StateSet out = X;
  for (StateId s = 0; s < grid.size(); ++s) {
    if (out.contains(s)) continue;
    for (Action a : available_actions(grid, s)) {
      if (X.contains(transition(grid, s, a))) {
        out.insert(s);
        break;
      }
    }
  }
  return out;
}

StateSet ret_bar_set(const StateSet& X, const StateSet& X_bar, const GridShape& grid) {
  check_universe(X, grid, "set");
  check_universe(X_bar, grid, "target set");
  StateSet out = X_bar;
  bool grew = true;
  while (grew) {
    grew = false;
    (X - out).for_each([&](StateId s) {
      for (Action a : available_actions(grid, s)) {
        if (out.contains(transition(grid, s, a))) {
          out.insert(s);
          grew = true;
          break;
        }
      }
    });
  }
  return out;
}

StateSet compute_S_hat(const StateSet& S, const StateSet& prev_S_hat, const StateSet& G_fwd,
                       const GridShape& grid) {
  check_universe(S, grid, "safe set");
  return S & reach_set(prev_S_hat, grid) & ret_set(G_fwd, grid);
}

int expander_count(StateId s, const StateSet& S, const BoundsTable& bounds, int t,
                   const LipschitzParams& p, double h, const GridShape& grid) {
  const double u = bounds.upper(SpaceTimePoint{t, s});
  const double time_cost = p.temporal * 2;
  if (!(u - time_cost >= h)) return 0;
  int count = 0;
  for (StateId other = 0; other < grid.size(); ++other) {
    if (S.contains(other)) continue;
    if (u - (p.spatial * manhattan_distance(grid, s, other) + time_cost) >= h) ++count;
  }
  return count;
}

StateSet compute_expanders(const StateSet& S_hat, const StateSet& S, const BoundsTable& bounds,
                           int t, const LipschitzParams& p, double h, const GridShape& grid) {
  check_universe(S_hat, grid, "safe set");
  check_universe(S, grid, "safe set");
  StateSet out(static_cast<std::size_t>(grid.size()));
  S_hat.for_each([&](StateId s) {
    if (expander_count(s, S, bounds, t, p, h, grid) > 0) out.insert(s);
  });
  return out;
}

StateSet compute_candidates(StateId prev_state, const GridShape& grid) {
  if (!grid.valid(prev_state))
    throw Error(ErrorCode::invalid_parameter, "state " + std::to_string(prev_state) + " is outside the grid");
  StateSet out(static_cast<std::size_t>(grid.size()));
  for (Action a : available_actions(grid, prev_state)) out.insert(transition(grid, prev_state, a));
  return out;
}

std::vector<int> lower_bound_terms(const StateSet& S_hat_t, const BoundsTable& bounds, int t,
                                   int horizon, const LipschitzParams& p, double h,
                                   const GridShape& grid) {
  if (t >= horizon) throw Error(ErrorCode::invalid_parameter, "lower bound terms need t < horizon");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(horizon - t));
  for (int i = t + 1; i <= horizon; ++i) {
    const StateSet G = compute_G(t, i + 1, S_hat_t, bounds, p, h, grid);
    out.push_back(static_cast<int>((S_hat_t & G).count()));
  }
  return out;
}

StateSet compute_S_static(const StateSet& prev_S_hat, const BoundsTable& bounds,
                          double spatial_lipschitz, double h, const GridShape& grid) {
  check_universe(prev_S_hat, grid, "safe set");
  return propagate(
      prev_S_hat, [&](StateId s) { return bounds.lower(SpaceTimePoint{0, s}); }, 0.0,
      spatial_lipschitz, h, grid);
}

StateSet compute_S_hat_static(const StateSet& S, const StateSet& prev_S_hat, const GridShape& grid) {
  return S & reach_set(prev_S_hat, grid) & ret_bar_set(S, prev_S_hat, grid);
}

StateSet compute_expanders_static(const StateSet& S_hat, const StateSet& S,
                                  const BoundsTable& bounds, double spatial_lipschitz, double h,
                                  const GridShape& grid) {
  const LipschitzParams p{spatial_lipschitz, 0.0};
  StateSet out(static_cast<std::size_t>(grid.size()));
  S_hat.for_each([&](StateId s) {
    if (expander_count(s, S, bounds, 0, p, h, grid) > 0) out.insert(s);
  });
  return out;
}

}  // namespace safe_explore::safesets
