#pragma once

// Brute-force reference implementations used by the unit tests and the
// acceptance binary. They are written straight from the set-builder and
// closed-form definitions and share no code paths with the library beyond
// the plain data types.

#include <cmath>
#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "safe_explore/bounds.hpp"
#include "safe_explore/grid.hpp"
#include "safe_explore/kernel.hpp"
#include "safe_explore/safesets.hpp"

namespace oracle {

using safe_explore::GridShape;
using safe_explore::StateId;
using safe_explore::StateSet;
using safe_explore::stgp::BaseKernel;
using safe_explore::stgp::BaseKind;
using safe_explore::stgp::BoundsTable;
using safe_explore::stgp::SpaceTimePoint;

struct Composite {
  BaseKernel space, time, cross_space, cross_time;
};

inline double rbf(double d, const BaseKernel& k) {
  return k.variance * std::exp(-d * d / (2.0 * k.length_scale * k.length_scale));
}

// (k_s + k_t) + k^_s * k^_t written out as a scalar formula.
inline double composite_value(const Composite& c, double ds, double dt) {
  return rbf(ds, c.space) + rbf(dt, c.time) + rbf(ds, c.cross_space) * rbf(dt, c.cross_time);
}

inline double cell_distance(const GridShape& g, StateId a, StateId b) {
  const double dr = a / g.cols - b / g.cols;
  const double dc = a % g.cols - b % g.cols;
  return std::sqrt(dr * dr + dc * dc);
}

struct DensePosterior {
  std::vector<double> mean, var;
};

// Forms K explicitly and inverts it directly in extended precision.
inline DensePosterior dense_posterior(const Composite& c, const GridShape& g,
                                      const std::vector<SpaceTimePoint>& train,
                                      const std::vector<double>& y, double noise_plus_jitter,
                                      const std::vector<SpaceTimePoint>& query) {
  using Mat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  auto k = [&](SpaceTimePoint a, SpaceTimePoint b) {
    return static_cast<long double>(
        composite_value(c, cell_distance(g, a.s, b.s), std::abs(a.t - b.t)));
  };
  const auto n = static_cast<Eigen::Index>(train.size());
  DensePosterior out;
  if (n == 0) {
    for (const auto& q : query) {
      out.mean.push_back(0.0);
      out.var.push_back(static_cast<double>(k(q, q)));
    }
    return out;
  }
  Mat K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) K(i, j) = k(train[i], train[j]);
  K.diagonal().array() += static_cast<long double>(noise_plus_jitter);
  const Mat Kinv = K.fullPivLu().inverse();
  Vec yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv(i) = y[static_cast<std::size_t>(i)];
  for (const auto& q : query) {
    Vec kq(n);
    for (Eigen::Index i = 0; i < n; ++i) kq(i) = k(q, train[i]);
    out.mean.push_back(static_cast<double>(kq.dot(Kinv * yv)));
    out.var.push_back(static_cast<double>(k(q, q) - kq.dot(Kinv * kq)));
  }
  return out;
}

// ---- grid geometry --------------------------------------------------------

inline std::vector<StateId> successors(const GridShape& g, StateId s) {
  const int r = s / g.cols, c = s % g.cols;
  std::vector<StateId> out{s};
  const int dr[] = {-1, 1, 0, 0};
  const int dc[] = {0, 0, -1, 1};
  for (int k = 0; k < 4; ++k) {
    const int nr = r + dr[k], nc = c + dc[k];
    if (nr >= 0 && nr < g.rows && nc >= 0 && nc < g.cols) out.push_back(nr * g.cols + nc);
  }
  return out;
}

inline int manhattan(const GridShape& g, StateId a, StateId b) {
  return std::abs(a / g.cols - b / g.cols) + std::abs(a % g.cols - b % g.cols);
}

inline double lipschitz(const GridShape& g, StateId a, StateId b, int t1, int t2, double Ls,
                        double Lt) {
  return Ls * manhattan(g, a, b) + Lt * std::abs(t1 - t2);
}

// ---- set builders ---------------------------------------------------------

inline StateSet certified(const GridShape& g, const StateSet& sources, const BoundsTable& b,
                          int from_t, int to_t, double Ls, double Lt, double h) {
  StateSet out(static_cast<std::size_t>(g.size()));
  for (StateId s = 0; s < g.size(); ++s)
    for (StateId sp = 0; sp < g.size(); ++sp)
      if (sources.contains(sp) &&
          b.lower({from_t, sp}) - lipschitz(g, s, sp, to_t, from_t, Ls, Lt) >= h)
        out.insert(s);
  return out;
}

inline StateSet reach(const GridShape& g, const StateSet& X) {
  StateSet out(static_cast<std::size_t>(g.size()));
  for (StateId s = 0; s < g.size(); ++s) {
    if (X.contains(s)) out.insert(s);
    for (StateId sp = 0; sp < g.size(); ++sp)
      if (X.contains(sp))
        for (StateId n : successors(g, sp))
          if (n == s) out.insert(s);
  }
  return out;
}

inline StateSet ret(const GridShape& g, const StateSet& X) {
  StateSet out(static_cast<std::size_t>(g.size()));
  for (StateId s = 0; s < g.size(); ++s)
    for (StateId n : successors(g, s))
      if (X.contains(n)) out.insert(s);
  return out;
}

// States with a path through X (forward moves) that ends in X_bar, plus X_bar.
inline StateSet ret_bar(const GridShape& g, const StateSet& X, const StateSet& X_bar) {
  StateSet out = X_bar;
  for (StateId s = 0; s < g.size(); ++s) {
    if (!X.contains(s) || X_bar.contains(s)) continue;
    std::vector<bool> seen(static_cast<std::size_t>(g.size()), false);
    std::deque<StateId> queue{s};
    seen[static_cast<std::size_t>(s)] = true;
    bool found = false;
    while (!queue.empty() && !found) {
      const StateId cur = queue.front();
      queue.pop_front();
      for (StateId n : successors(g, cur)) {
        if (X_bar.contains(n)) {
          found = true;
          break;
        }
        if (X.contains(n) && !seen[static_cast<std::size_t>(n)]) {
          seen[static_cast<std::size_t>(n)] = true;
          queue.push_back(n);
        }
      }
    }
    if (found) out.insert(s);
  }
  return out;
}

inline StateSet expanders(const GridShape& g, const StateSet& S_hat, const StateSet& S,
                          const BoundsTable& b, int t, double Ls, double Lt, double h) {
  StateSet out(static_cast<std::size_t>(g.size()));
  for (StateId s = 0; s < g.size(); ++s) {
    if (!S_hat.contains(s)) continue;
    int xi = 0;
    for (StateId sp = 0; sp < g.size(); ++sp)
      if (!S.contains(sp) && b.upper({t, s}) - lipschitz(g, s, sp, t, t + 2, Ls, Lt) >= h) ++xi;
    if (xi > 0) out.insert(s);
  }
  return out;
}

// ---- random instances -----------------------------------------------------

inline StateSet random_set(std::mt19937_64& rng, std::size_t n, double p) {
  std::bernoulli_distribution in(p);
  StateSet out(n);
  for (std::size_t s = 0; s < n; ++s)
    if (in(rng)) out.insert(static_cast<StateId>(s));
  return out;
}

// Table over `times` with random intervals around 0, lower <= upper.
inline BoundsTable random_bounds(std::mt19937_64& rng, const GridShape& g,
                                 const std::vector<int>& times, double h) {
  BoundsTable b(static_cast<std::size_t>(g.size()), 2.0, h, StateSet(static_cast<std::size_t>(g.size())));
  std::normal_distribution<double> centre(0.3, 0.6);
  std::uniform_real_distribution<double> half(0.0, 0.8);
  for (int t : times)
    for (StateId s = 0; s < g.size(); ++s) {
      const double m = centre(rng), w = half(rng);
      b.set({t, s}, {m - w, m + w});
    }
  return b;
}

}  // namespace oracle
