#include "safe_explore/info_gain.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "safe_explore/error.hpp"

namespace safe_explore::stgp {

double mutual_information(const KernelSpec& kernel, std::span<const SpaceTimePoint> subset,
                          double noise_var, const GridShape& grid) {
  if (!(noise_var > 0.0)) throw Error(ErrorCode::invalid_parameter, "noise variance must be positive");
  const auto n = static_cast<Eigen::Index>(subset.size());
  if (n == 0) return 0.0;
  Eigen::MatrixXd A(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      A(i, j) = eval_kernel(kernel, subset[i], subset[j], grid) / noise_var;
  A.diagonal().array() += 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::ill_conditioned, "I + K/noise is not positive definite");
  // 1/2 log det(A) = sum log diag(L)
  return llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

namespace {

void enumerate(const KernelSpec& kernel, std::span<const SpaceTimePoint> domain, double noise_var,
               const GridShape& grid, std::size_t start, std::size_t remaining,
               std::vector<SpaceTimePoint>& current, InfoGainResult& best) {
  if (!current.empty()) {
    const double mi = mutual_information(kernel, current, noise_var, grid);
    if (mi > best.gamma) {
      best.gamma = mi;
      best.selected_subset = current;
    }
  }
  if (remaining == 0) return;
  for (std::size_t i = start; i < domain.size(); ++i) {
    current.push_back(domain[i]);
    enumerate(kernel, domain, noise_var, grid, i + 1, remaining - 1, current, best);
    current.pop_back();
  }
}

}  // namespace

InfoGainResult information_gain(const KernelSpec& kernel, std::span<const SpaceTimePoint> domain,
                                int max_points, double noise_var, InfoGainMode mode,
                                const GridShape& grid) {
  if (max_points < 1) throw Error(ErrorCode::invalid_parameter, "information gain needs T >= 1");
  if (!(noise_var > 0.0)) throw Error(ErrorCode::invalid_parameter, "noise variance must be positive");
  const auto limit = std::min(static_cast<std::size_t>(max_points), domain.size());

  InfoGainResult best;
  if (mode == InfoGainMode::exact) {
    if (domain.size() > kMaxExactDomain)
      throw Error(ErrorCode::domain_too_large,
                  "exact information gain supports at most " + std::to_string(kMaxExactDomain) +
                      " points, got " + std::to_string(domain.size()));
    std::vector<SpaceTimePoint> current;
    enumerate(kernel, domain, noise_var, grid, 0, limit, current, best);
    return best;
  }

  std::vector<bool> used(domain.size(), false);
  for (std::size_t round = 0; round < limit; ++round) {
    double round_best = -1.0;
    std::size_t pick = domain.size();
    for (std::size_t i = 0; i < domain.size(); ++i) {
      if (used[i]) continue;
      best.selected_subset.push_back(domain[i]);
      const double mi = mutual_information(kernel, best.selected_subset, noise_var, grid);
      best.selected_subset.pop_back();
      if (mi > round_best) {
        round_best = mi;
        pick = i;
      }
    }
    used[pick] = true;
    best.selected_subset.push_back(domain[pick]);
    best.gamma = round_best;
  }
  return best;
}

double compute_beta(int t, double rkhs_bound, double gamma, double delta) {
  if (t < 1) throw Error(ErrorCode::invalid_parameter, "beta schedule needs t >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::invalid_parameter, "delta must lie in (0, 1)");
  if (!(rkhs_bound >= 0.0)) throw Error(ErrorCode::invalid_parameter, "RKHS bound must be non-negative");
  if (!(gamma >= 0.0)) throw Error(ErrorCode::invalid_parameter, "information gain must be non-negative");
  const double log_term = std::log(static_cast<double>(t) / delta);
  return 2.0 * rkhs_bound + 300.0 * gamma * log_term * log_term * log_term;
}

}  // namespace safe_explore::stgp
