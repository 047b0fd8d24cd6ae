#pragma once

#include <span>
#include <vector>

#include "safe_explore/kernel.hpp"

namespace safe_explore::stgp {

enum class InfoGainMode { exact, greedy };

struct InfoGainResult {
  double gamma = 0.0;
  std::vector<SpaceTimePoint> selected_subset;
};

// Exact mode enumerates subsets and is limited to this many domain points.
inline constexpr std::size_t kMaxExactDomain = 15;

/// I(g; y_A) = 1/2 log det(I + K_A / noise_var).
double mutual_information(const KernelSpec& kernel, std::span<const SpaceTimePoint> subset,
                          double noise_var, const GridShape& grid);

/// Maximum mutual information over subsets of `domain` with at most
/// `max_points` elements. Exact mode throws Error(domain_too_large) when the
/// domain exceeds kMaxExactDomain.
InfoGainResult information_gain(const KernelSpec& kernel, std::span<const SpaceTimePoint> domain,
                                int max_points, double noise_var, InfoGainMode mode,
                                const GridShape& grid);

/// Confidence scaling 2B + 300 * gamma * ln(t / delta)^3.
double compute_beta(int t, double rkhs_bound, double gamma, double delta);

}  // namespace safe_explore::stgp
