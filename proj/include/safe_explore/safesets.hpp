#pragma once

#include <vector>

#include "safe_explore/bounds.hpp"
#include "safe_explore/grid.hpp"

namespace safe_explore::safesets {

using stgp::BoundsTable;

struct LipschitzParams {
  double spatial = 0.0;   // safety units per cell
  double temporal = 0.0;  // safety units per step
};

/// L_s * manhattan(a, b) + L_t * |t1 - t2|.
double lipschitz_metric(const GridShape& grid, StateId a, StateId b, int t1, int t2,
                        const LipschitzParams& p);

/// Per-iteration snapshot of the sets driving exploration.
struct SafeSets {
  StateSet S;           // certified by Lipschitz propagation
  StateSet S_hat;       // additionally reachable and returnable
  StateSet G_next;      // conservative set two steps ahead
  StateSet expanders;
  StateSet candidates;  // one-step successors of the previous state
};

/// States certifiable at `to_t` from lower bounds at `from_t` of `sources`:
/// {s | exists s' in sources: l(from_t, s') - L(s, s', to_t, from_t) >= h}.
StateSet certify(const StateSet& sources, const BoundsTable& bounds, int from_t, int to_t,
                 const LipschitzParams& p, double h, const GridShape& grid);

/// S_t: certified at t from S_hat_{t-1} using bounds at t-1.
StateSet compute_S(const StateSet& prev_S_hat, const BoundsTable& bounds, int t,
                   const LipschitzParams& p, double h, const GridShape& grid);

/// G_{from}^{to}: certified at `to_t` from S_hat_{from} using bounds at
/// `from_t`. Requires to_t > from_t.
StateSet compute_G(int from_t, int to_t, const StateSet& S_hat_from, const BoundsTable& bounds,
                   const LipschitzParams& p, double h, const GridShape& grid);

/// X plus every one-step successor of X.
StateSet reach_set(const StateSet& X, const GridShape& grid);

/// X plus every state with an action leading into X.
StateSet ret_set(const StateSet& X, const GridShape& grid);

/// X_bar grown by states of X that can step into the growing set, until
/// stable.
StateSet ret_bar_set(const StateSet& X, const StateSet& X_bar, const GridShape& grid);

/// S ∩ reach(prev_S_hat) ∩ ret(G_fwd).
StateSet compute_S_hat(const StateSet& S, const StateSet& prev_S_hat, const StateSet& G_fwd,
                       const GridShape& grid);

/// Number of states outside S that an optimistic measurement at `s` would
/// certify two steps ahead, using the upper bound at (t, s).
int expander_count(StateId s, const StateSet& S, const BoundsTable& bounds, int t,
                   const LipschitzParams& p, double h, const GridShape& grid);

/// {s in S_hat : expander_count(s) > 0}.
StateSet compute_expanders(const StateSet& S_hat, const StateSet& S, const BoundsTable& bounds,
                           int t, const LipschitzParams& p, double h, const GridShape& grid);

/// Images of every available action from `prev_state`.
StateSet compute_candidates(StateId prev_state, const GridShape& grid);

/// [M_{t+1}, ..., M_N] with M_i = |S_hat_t ∩ G_t^{i+1}|.
std::vector<int> lower_bound_terms(const StateSet& S_hat_t, const BoundsTable& bounds, int t,
                                   int horizon, const LipschitzParams& p, double h,
                                   const GridShape& grid);

// Time-invariant variants. Bounds are read at time index 0 and only the
// spatial constant is used.

StateSet compute_S_static(const StateSet& prev_S_hat, const BoundsTable& bounds,
                          double spatial_lipschitz, double h, const GridShape& grid);

/// S ∩ reach(prev_S_hat) ∩ ret_bar(S, prev_S_hat).
StateSet compute_S_hat_static(const StateSet& S, const StateSet& prev_S_hat,
                              const GridShape& grid);

StateSet compute_expanders_static(const StateSet& S_hat, const StateSet& S,
                                  const BoundsTable& bounds, double spatial_lipschitz, double h,
                                  const GridShape& grid);

}  // namespace safe_explore::safesets
