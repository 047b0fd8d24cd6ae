#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "safe_explore/gp.hpp"

namespace safe_explore::stgp {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  double width() const noexcept { return upper - lower; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// [mean - sqrt(beta) * sd, mean + sqrt(beta) * sd].
Interval confidence_interval(const Posterior& post, double beta);

/// Running intersection of confidence intervals per space-time point.
///
/// Points at time 0 whose state belongs to the initial safe set start from
/// [h, +inf). Every other point starts from the first interval it is given.
/// When a new interval does not overlap the stored one, the stored interval is
/// kept and a calibration warning is counted, so lower bounds never decrease
/// and upper bounds never increase.
class BoundsTable {
 public:
  BoundsTable(std::size_t num_states, double beta, double threshold, StateSet initial_safe);

  double beta() const noexcept { return beta_; }
  double threshold() const noexcept { return threshold_; }
  std::size_t num_states() const noexcept { return num_states_; }
  const StateSet& initial_safe() const noexcept { return initial_safe_; }

  Interval intersect(SpaceTimePoint q, const Interval& next);

  // Overwrites the stored interval. Used for hand-built tables in tests and
  // diagnostics; the exploration loop only goes through intersect().
  void set(SpaceTimePoint q, const Interval& value);

  std::optional<Interval> find(SpaceTimePoint q) const;
  // Untracked points report -inf / +inf.
  double lower(SpaceTimePoint q) const;
  double upper(SpaceTimePoint q) const;
  double width(SpaceTimePoint q) const;

  // Drops every time slice strictly before `t`.
  void forget_before(int t);
  std::vector<int> tracked_times() const;

  std::size_t warning_count() const noexcept { return warnings_; }

 private:
  using Slice = std::vector<std::optional<Interval>>;
  Slice& slice(int t);

  std::size_t num_states_;
  double beta_;
  double threshold_;
  StateSet initial_safe_;
  std::map<int, Slice> slices_;
  std::size_t warnings_ = 0;
  bool initial_dropped_ = false;
};

/// Confidence interval from the model's posterior at `q`, using the table's
/// beta.
Interval confidence_interval(const GpModel& gp, const BoundsTable& bounds, SpaceTimePoint q);

/// Refreshes every state at each of `times` from the model's posterior.
/// Returns the posterior means, one row of `num_states` per requested time.
std::vector<std::vector<double>> refresh_bounds(const GpModel& gp, BoundsTable& bounds,
                                                std::span<const int> times);

}  // namespace safe_explore::stgp
