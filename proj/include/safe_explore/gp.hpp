#pragma once

#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "safe_explore/kernel.hpp"

namespace safe_explore::stgp {

struct Posterior {
  double mean = 0.0;
  double var = 0.0;
};

/// Zero-mean GP regression over space-time points with constant noise.
///
/// The factorization of K + noise*I is refreshed on every observation, so all
/// const members are pure reads and may run concurrently. Mutation needs
/// exclusive access.
class GpModel {
 public:
  // Diagonal jitter added before factorization, and the fallback used when
  // the first attempt is not positive definite.
  static constexpr double kJitter = 1e-9;
  static constexpr double kFallbackJitter = 1e-6;

  GpModel(KernelSpec kernel, GridShape grid, double noise_var);

  void add_observation(SpaceTimePoint p, double y);
  void add_observations(std::span<const SpaceTimePoint> points, std::span<const double> values);

  Posterior posterior(SpaceTimePoint q) const;
  std::vector<Posterior> posterior(std::span<const SpaceTimePoint> queries) const;

  const KernelSpec& kernel() const noexcept { return kernel_; }
  const GridShape& grid() const noexcept { return grid_; }
  double noise_var() const noexcept { return noise_var_; }
  std::size_t size() const noexcept { return points_.size(); }
  const std::vector<SpaceTimePoint>& points() const noexcept { return points_; }
  const std::vector<double>& values() const noexcept { return values_; }

  // Jitter that made the current factorization succeed (0 when empty).
  double jitter() const noexcept { return jitter_; }

 private:
  void refactor();

  KernelSpec kernel_;
  GridShape grid_;
  double noise_var_;
  std::vector<SpaceTimePoint> points_;
  std::vector<double> values_;

  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

}  // namespace safe_explore::stgp
