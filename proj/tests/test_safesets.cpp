#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "safe_explore/error.hpp"
#include "safe_explore/safesets.hpp"

using namespace safe_explore;
using namespace safe_explore::safesets;

namespace {

StateSet none(const GridShape& g) { return StateSet(static_cast<std::size_t>(g.size())); }

// Table with one lower/upper pair per (t, state), row-major values.
BoundsTable hand_bounds(const GridShape& g, int t, const std::vector<double>& lower,
                        const std::vector<double>& upper) {
  BoundsTable b(static_cast<std::size_t>(g.size()), 2.0, 0.0, none(g));
  for (StateId s = 0; s < g.size(); ++s)
    b.set({t, s}, {lower[static_cast<std::size_t>(s)], upper[static_cast<std::size_t>(s)]});
  return b;
}

}  // namespace

TEST_CASE("lipschitz metric") {
  const GridShape g{4, 4};
  const LipschitzParams p{0.1, 0.1};
  CHECK(lipschitz_metric(g, 5, 5, 3, 3, p) == 0.0);
  CHECK(lipschitz_metric(g, 5, 6, 3, 3, p) == doctest::Approx(0.1));
  CHECK(lipschitz_metric(g, g.index(1, 1), g.index(2, 2), 0, 2, p) == doctest::Approx(0.4));
  CHECK(lipschitz_metric(g, 0, 15, 7, 2, {0.5, 2.0}) == doctest::Approx(0.5 * 6 + 2.0 * 5));
}

TEST_CASE("compute_S examples") {
  const GridShape g{3, 3};
  std::vector<double> l(9, 0.5), u(9, 1.0);
  const auto b = hand_bounds(g, 0, l, u);
  const StateSet prev(9, {4});

  CHECK(compute_S(prev, b, 1, {0.0, 0.0}, 0.0, g) == StateSet::full(9));
  CHECK(compute_S(prev, b, 1, {1e9, 0.1}, 0.0, g) == prev);
  CHECK(compute_S(prev, b, 1, {1e9, 0.6}, 0.0, g).empty());

  const std::vector<double> hand = {0.05, 0.33, -0.2, 0.37, 0.12, 0.0, 0.2, -1.0, 0.05};
  const auto hb = hand_bounds(g, 2, hand, std::vector<double>(9, 2.0));
  const StateSet src(9, {0, 1, 3, 5, 8});
  CHECK(compute_S(src, hb, 3, {0.1, 0.1}, 0.0, g) ==
        oracle::certified(g, src, hb, 2, 3, 0.1, 0.1, 0.0));
  CHECK(compute_S(src, hb, 3, {0.1, 0.1}, 0.0, g) == StateSet(9, {0, 1, 2, 3, 4, 5, 6, 7}));
}

TEST_CASE("compute_G examples") {
  const GridShape g{3, 3};
  const std::vector<double> hand = {0.05, 0.3, -0.2, 0.45, 0.12, 0.0, 0.2, -1.0, 0.33};
  const auto b = hand_bounds(g, 0, hand, std::vector<double>(9, 2.0));
  const StateSet src(9, {0, 1, 3, 4, 8});

  CHECK(compute_G(0, 1, src, b, {0.1, 0.0}, 0.0, g) == compute_S(src, b, 1, {0.1, 0.0}, 0.0, g));
  const auto g2 = compute_G(0, 2, src, b, {0.1, 0.1}, 0.0, g);
  const auto g3 = compute_G(0, 3, src, b, {0.1, 0.1}, 0.0, g);
  CHECK(g3.is_subset_of(g2));
  CHECK(g2 == oracle::certified(g, src, b, 0, 2, 0.1, 0.1, 0.0));
  CHECK(g3 == oracle::certified(g, src, b, 0, 3, 0.1, 0.1, 0.0));
  CHECK_THROWS_AS(compute_G(1, 1, src, b, {0.1, 0.1}, 0.0, g), Error);
}

TEST_CASE("reach and return operators") {
  const GridShape g{5, 5};
  const StateId c = g.index(2, 2);
  const StateSet centre(25, {c});
  const StateSet cross(25, {c, g.index(1, 2), g.index(3, 2), g.index(2, 1), g.index(2, 3)});
  CHECK(reach_set(none(g), g).empty());
  CHECK(ret_set(none(g), g).empty());
  CHECK(reach_set(centre, g) == cross);
  CHECK(ret_set(centre, g) == cross);
  CHECK(reach_set(StateSet(25, {0}), g) == StateSet(25, {0, 1, 5}));

  // Corridor (0,1),(0,2),(0,3) leading into (0,4).
  const StateSet target(25, {g.index(0, 4)});
  const StateSet corridor(25, {g.index(0, 1), g.index(0, 2), g.index(0, 3)});
  CHECK(ret_bar_set(none(g), target, g) == target);
  CHECK(ret_bar_set(corridor, target, g) == (corridor | target));
  // A gap breaks the chain.
  const StateSet gapped(25, {g.index(0, 1), g.index(0, 3)});
  CHECK(ret_bar_set(gapped, target, g) == StateSet(25, {g.index(0, 3), g.index(0, 4)}));
}

TEST_CASE("compute_S_hat examples") {
  const GridShape g{3, 3};
  const auto full = StateSet::full(9);
  CHECK(compute_S_hat(full, full, none(g), g).empty());
  CHECK(compute_S_hat(full, full, full, g) == full);

  const StateSet S(9, {0, 1, 2, 4, 5, 7});
  const StateSet prev(9, {1, 4});
  const StateSet G(9, {2});
  const auto expected = S & oracle::reach(g, prev) & oracle::ret(g, G);
  CHECK(compute_S_hat(S, prev, G, g) == expected);
  CHECK(expected == StateSet(9, {1, 2, 5}));
}

TEST_CASE("expander examples") {
  const GridShape g{4, 4};
  const auto full = StateSet::full(16);
  const auto b = hand_bounds(g, 1, std::vector<double>(16, 0.0), std::vector<double>(16, 5.0));
  CHECK(compute_expanders(full, full, b, 1, {0.1, 0.1}, 0.0, g).empty());

  std::vector<double> u(16, -0.5);
  u[5] = 100.0;
  const auto big = hand_bounds(g, 1, std::vector<double>(16, -1.0), u);
  const StateSet S(16, {5, 6, 9});
  CHECK(compute_expanders(S, S, big, 1, {0.1, 0.1}, 0.0, g) == StateSet(16, {5}));
  CHECK(expander_count(5, S, big, 1, {0.1, 0.1}, 0.0, g) == 13);

  const std::vector<double> mixed = {0.3, 0.1, 0.25, -0.4, 0.5, 0.2, 0.15, 0.0,
                                     0.05, 0.35, 0.22, 0.6, -0.1, 0.12, 0.44, 0.2};
  const auto mb = hand_bounds(g, 2, std::vector<double>(16, -1.0), mixed);
  const StateSet S2(16, {1, 2, 5, 6, 9, 10});
  const StateSet Sh(16, {1, 5, 6, 10});
  CHECK(compute_expanders(Sh, S2, mb, 2, {0.1, 0.1}, 0.0, g) ==
        oracle::expanders(g, Sh, S2, mb, 2, 0.1, 0.1, 0.0));
}

TEST_CASE("candidates") {
  const GridShape g{4, 5};
  CHECK(compute_candidates(g.index(1, 1), g).count() == 5);
  CHECK(compute_candidates(g.index(0, 0), g).count() == 3);
  CHECK(compute_candidates(g.index(3, 4), g).count() == 3);
  CHECK(compute_candidates(g.index(0, 2), g).count() == 4);
  for (StateId s = 0; s < g.size(); ++s) CHECK(compute_candidates(s, g).contains(s));
  CHECK_THROWS_AS(compute_candidates(20, g), Error);
}

TEST_CASE("lower bound terms") {
  const GridShape g{3, 3};
  const std::vector<double> l = {0.42, 0.3, 0.2, 0.35, 0.52, 0.1, 0.0, 0.25, 0.45};
  const auto b = hand_bounds(g, 1, l, std::vector<double>(9, 1.0));
  const StateSet Sh(9, {0, 1, 3, 4, 8});

  const auto flat = lower_bound_terms(Sh, b, 1, 8, {0.1, 0.0}, 0.0, g);
  CHECK(flat.size() == 7);
  for (int m : flat) CHECK(m == flat.front());

  const auto terms = lower_bound_terms(Sh, b, 1, 8, {0.1, 0.1}, 0.0, g);
  for (std::size_t i = 1; i < terms.size(); ++i) CHECK(terms[i] <= terms[i - 1]);
  for (int i = 2; i <= 8; ++i) {
    const auto expected = Sh & oracle::certified(g, Sh, b, 1, i + 1, 0.1, 0.1, 0.0);
    CHECK(terms[static_cast<std::size_t>(i - 2)] == static_cast<int>(expected.count()));
  }
  CHECK(terms == std::vector<int>{5, 5, 5, 1, 0, 0, 0});
  CHECK_THROWS_AS(lower_bound_terms(Sh, b, 8, 8, {0.1, 0.1}, 0.0, g), Error);
}

TEST_CASE("set operations match brute force on random instances") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 5);
  std::uniform_real_distribution<double> lip(0.0, 0.4);
  for (int trial = 0; trial < 60; ++trial) {
    const GridShape g{dim(rng), dim(rng)};
    const auto n = static_cast<std::size_t>(g.size());
    const double Ls = lip(rng), Lt = lip(rng), h = 0.0;
    const int t = 3;
    const auto b = oracle::random_bounds(rng, g, {t - 1, t}, h);
    const auto X = oracle::random_set(rng, n, 0.4);
    const auto Y = oracle::random_set(rng, n, 0.3);
    const LipschitzParams p{Ls, Lt};

    const auto S = compute_S(X, b, t, p, h, g);
    CHECK(S == oracle::certified(g, X, b, t - 1, t, Ls, Lt, h));
    CHECK(compute_G(t - 1, t + 1, X, b, p, h, g) == oracle::certified(g, X, b, t - 1, t + 1, Ls, Lt, h));
    CHECK(reach_set(X, g) == oracle::reach(g, X));
    CHECK(ret_set(X, g) == oracle::ret(g, X));
    CHECK(ret_bar_set(X, Y, g) == oracle::ret_bar(g, X, Y));
    const auto G = compute_G(t - 1, t + 1, X, b, p, h, g);
    const auto Sh = compute_S_hat(S, X, G, g);
    CHECK(Sh == (oracle::certified(g, X, b, t - 1, t, Ls, Lt, h) & oracle::reach(g, X) & oracle::ret(g, G)));
    CHECK(Sh.is_subset_of(S));
    const auto xi = compute_expanders(Sh, S, b, t, p, h, g);
    CHECK(xi == oracle::expanders(g, Sh, S, b, t, Ls, Lt, h));
    CHECK(xi.is_subset_of(Sh));
    CHECK(oracle::ret_bar(g, X, Y).is_subset_of(X | Y));
  }
}

TEST_CASE("reach and return are extensive and monotone") {
  std::mt19937_64 rng(77);
  const GridShape g{5, 4};
  for (int trial = 0; trial < 50; ++trial) {
    const auto X = oracle::random_set(rng, 20, 0.3);
    const auto Y = X | oracle::random_set(rng, 20, 0.2);
    CHECK(X.is_subset_of(reach_set(X, g)));
    CHECK(X.is_subset_of(ret_set(X, g)));
    CHECK(reach_set(X, g).is_subset_of(reach_set(Y, g)));
    CHECK(ret_set(X, g).is_subset_of(ret_set(Y, g)));
  }
}

TEST_CASE("tighter bounds never shrink S or G") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> centre(0.3, 0.6);
  std::uniform_real_distribution<double> half(0.0, 0.8);
  const GridShape g{4, 4};
  const LipschitzParams p{0.1, 0.1};
  for (int trial = 0; trial < 40; ++trial) {
    auto b = oracle::random_bounds(rng, g, {0, 1}, 0.0);
    const auto X = oracle::random_set(rng, 16, 0.5);
    const auto S_before = compute_S(X, b, 1, p, 0.0, g);
    const auto G_before = compute_G(0, 2, X, b, p, 0.0, g);
    for (StateId s = 0; s < 16; ++s) {
      const double m = centre(rng), w = half(rng);
      b.intersect({0, s}, {m - w, m + w});
    }
    CHECK(S_before.is_subset_of(compute_S(X, b, 1, p, 0.0, g)));
    CHECK(G_before.is_subset_of(compute_G(0, 2, X, b, p, 0.0, g)));
  }
}

TEST_CASE("frozen-bounds chain") {
  // Bounds after time t are frozen at their time-t values and S_hat is
  // rolled forward with the library operators. Then every state in
  // S_hat_t ∩ G_t^{i+1} stays in S_hat_i.
  std::mt19937_64 rng(11);
  const GridShape g{5, 5};
  const LipschitzParams p{0.1, 0.05};
  const int t = 0, last = 6;
  for (int trial = 0; trial < 40; ++trial) {
    auto b = oracle::random_bounds(rng, g, {t}, 0.0);
    for (int j = t + 1; j <= last + 1; ++j)
      for (StateId s = 0; s < 25; ++s) b.set({j, s}, *b.find({t, s}));
    const auto S_hat_t = compute_S_hat(StateSet::full(25), StateSet::full(25),
                                       oracle::random_set(rng, 25, 0.6), g) &
                         oracle::random_set(rng, 25, 0.7);
    StateSet prev = S_hat_t;
    for (int i = t + 1; i <= last; ++i) {
      const auto S = compute_S(prev, b, i, p, 0.0, g);
      const auto G = compute_G(i - 1, i + 1, prev, b, p, 0.0, g);
      const auto cur = compute_S_hat(S, prev, G, g);
      CHECK((S_hat_t & compute_G(t, i + 1, S_hat_t, b, p, 0.0, g)).is_subset_of(cur));
      prev = cur;
    }
  }
}

TEST_CASE("time-invariant variants") {
  const GridShape g{3, 3};
  const std::vector<double> l = {0.4, 0.3, 0.2, 0.35, 0.5, 0.1, 0.0, 0.25, 0.45};
  const auto b = hand_bounds(g, 0, l, std::vector<double>(9, 0.65));
  const StateSet prev(9, {4});
  const auto S = compute_S_static(prev, b, 0.3, 0.0, g);
  CHECK(S == oracle::certified(g, prev, b, 0, 0, 0.3, 0.0, 0.0));
  CHECK(S == StateSet(9, {1, 3, 4, 5, 7}));
  const auto Sh = compute_S_hat_static(S, prev, g);
  CHECK(Sh == (S & oracle::reach(g, prev) & oracle::ret_bar(g, S, prev)));
  const auto xi = compute_expanders_static(Sh, S, b, 0.3, 0.0, g);
  CHECK(xi == oracle::expanders(g, Sh, S, b, 0, 0.3, 0.0, 0.0));
  CHECK(xi == Sh);
}
