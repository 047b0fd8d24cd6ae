#include "safe_explore/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "safe_explore/error.hpp"

namespace safe_explore::stgp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Interval confidence_interval(const Posterior& post, double beta) {
  if (!(beta > 0.0)) throw Error(ErrorCode::invalid_parameter, "beta must be positive");
  const double half = std::sqrt(beta) * std::sqrt(std::max(0.0, post.var));
  return {post.mean - half, post.mean + half};
}

BoundsTable::BoundsTable(std::size_t num_states, double beta, double threshold, StateSet initial_safe)
    : num_states_(num_states), beta_(beta), threshold_(threshold), initial_safe_(std::move(initial_safe)) {
  if (!(beta > 0.0)) throw Error(ErrorCode::invalid_parameter, "beta must be positive");
  if (initial_safe_.universe() != num_states_)
    throw Error(ErrorCode::invalid_parameter, "initial safe set does not match the state count");
}

BoundsTable::Slice& BoundsTable::slice(int t) {
  auto [it, inserted] = slices_.try_emplace(t);
  if (inserted) {
    it->second.resize(num_states_);
    if (t == 0) {
      initial_safe_.for_each([&](StateId s) {
        it->second[static_cast<std::size_t>(s)] = Interval{threshold_, kInf};
      });
    }
  }
  return it->second;
}

Interval BoundsTable::intersect(SpaceTimePoint q, const Interval& next) {
  auto& cell = slice(q.t).at(static_cast<std::size_t>(q.s));
  if (!cell) {
    cell = next;
    return *cell;
  }
  const Interval merged{std::max(cell->lower, next.lower), std::min(cell->upper, next.upper)};
  if (merged.lower <= merged.upper) {
    cell = merged;
  } else {
    ++warnings_;
  }
  return *cell;
}

void BoundsTable::set(SpaceTimePoint q, const Interval& value) {
  slice(q.t).at(static_cast<std::size_t>(q.s)) = value;
}

std::optional<Interval> BoundsTable::find(SpaceTimePoint q) const {
  if (q.s < 0 || static_cast<std::size_t>(q.s) >= num_states_) return std::nullopt;
  auto it = slices_.find(q.t);
  if (it == slices_.end()) {
    if (q.t == 0 && !initial_dropped_ && initial_safe_.contains(q.s)) return Interval{threshold_, kInf};
    return std::nullopt;
  }
  return it->second[static_cast<std::size_t>(q.s)];
}

double BoundsTable::lower(SpaceTimePoint q) const {
  auto c = find(q);
  return c ? c->lower : -kInf;
}

double BoundsTable::upper(SpaceTimePoint q) const {
  auto c = find(q);
  return c ? c->upper : kInf;
}

double BoundsTable::width(SpaceTimePoint q) const {
  auto c = find(q);
  return c ? c->width() : kInf;
}

void BoundsTable::forget_before(int t) {
  if (t > 0) initial_dropped_ = true;
  slices_.erase(slices_.begin(), slices_.lower_bound(t));
}

std::vector<int> BoundsTable::tracked_times() const {
  std::vector<int> out;
  for (const auto& [t, _] : slices_) out.push_back(t);
  return out;
}

Interval confidence_interval(const GpModel& gp, const BoundsTable& bounds, SpaceTimePoint q) {
  return confidence_interval(gp.posterior(q), bounds.beta());
}

std::vector<std::vector<double>> refresh_bounds(const GpModel& gp, BoundsTable& bounds,
                                                std::span<const int> times) {
  const auto n = static_cast<StateId>(bounds.num_states());
  std::vector<SpaceTimePoint> queries;
  queries.reserve(times.size() * bounds.num_states());
  for (int t : times)
    for (StateId s = 0; s < n; ++s) queries.push_back({t, s});

  const auto post = gp.posterior(queries);
  std::vector<std::vector<double>> means(times.size(), std::vector<double>(bounds.num_states()));
  for (std::size_t i = 0; i < queries.size(); ++i) {
    bounds.intersect(queries[i], confidence_interval(post[i], bounds.beta()));
    means[i / bounds.num_states()][i % bounds.num_states()] = post[i].mean;
  }
  return means;
}

}  // namespace safe_explore::stgp
