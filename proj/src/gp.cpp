#include "safe_explore/gp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "safe_explore/error.hpp"

namespace safe_explore::stgp {

GpModel::GpModel(KernelSpec kernel, GridShape grid, double noise_var)
    : kernel_(std::move(kernel)), grid_(grid), noise_var_(noise_var) {
  if (!(std::isfinite(noise_var) && noise_var >= 0.0))
    throw Error(ErrorCode::invalid_parameter, "noise variance must be finite and non-negative");
  if (grid.rows <= 0 || grid.cols <= 0)
    throw Error(ErrorCode::invalid_parameter, "grid must have positive dimensions");
}

void GpModel::add_observation(SpaceTimePoint p, double y) {
  add_observations(std::span<const SpaceTimePoint>(&p, 1), std::span<const double>(&y, 1));
}

void GpModel::add_observations(std::span<const SpaceTimePoint> points, std::span<const double> values) {
  if (points.size() != values.size())
    throw Error(ErrorCode::invalid_parameter, "points and values differ in length");
  if (points.empty()) return;
  const std::size_t before = points_.size();
  points_.insert(points_.end(), points.begin(), points.end());
  values_.insert(values_.end(), values.begin(), values.end());
  try {
    refactor();
  } catch (const Error&) {
    // Leave the model as it was before the offending observations.
    points_.resize(before);
    values_.resize(before);
    refactor();
    throw;
  }
}

void GpModel::refactor() {
  const auto n = static_cast<Eigen::Index>(points_.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double k = eval_kernel(kernel_, points_[i], points_[j], grid_);
      K(i, j) = k;
      K(j, i) = k;
    }
  }
  K.diagonal().array() += noise_var_;

  for (double jitter : {kJitter, kFallbackJitter}) {
    Eigen::MatrixXd A = K;
    A.diagonal().array() += jitter;
    chol_.compute(A);
    if (chol_.info() == Eigen::Success) {
      jitter_ = jitter;
      const Eigen::Map<const Eigen::VectorXd> y(values_.data(), n);
      alpha_ = chol_.solve(y);
      return;
    }
  }
  throw Error(ErrorCode::ill_conditioned,
              "kernel matrix is not positive definite after jitter (" + std::to_string(n) + " points)");
}

Posterior GpModel::posterior(SpaceTimePoint q) const {
  return posterior(std::span<const SpaceTimePoint>(&q, 1)).front();
}

std::vector<Posterior> GpModel::posterior(std::span<const SpaceTimePoint> queries) const {
  const auto m = static_cast<Eigen::Index>(queries.size());
  const auto n = static_cast<Eigen::Index>(points_.size());
  const double prior = kernel_.prior_variance();
  std::vector<Posterior> out(static_cast<std::size_t>(m), Posterior{0.0, prior});
  if (n == 0 || m == 0) return out;

  Eigen::MatrixXd Kq(n, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i) Kq(i, j) = eval_kernel(kernel_, points_[i], queries[j], grid_);

  const Eigen::VectorXd mean = Kq.transpose() * alpha_;
  const Eigen::MatrixXd V = chol_.matrixL().solve(Kq);
  const Eigen::VectorXd reduction = V.colwise().squaredNorm().transpose();
  for (Eigen::Index j = 0; j < m; ++j) {
    out[j].mean = mean(j);
    out[j].var = std::max(0.0, prior - reduction(j));
  }
  return out;
}

}  // namespace safe_explore::stgp
