#pragma once

#include <compare>
#include <memory>
#include <optional>

#include <nlohmann/json.hpp>

#include "safe_explore/grid.hpp"

namespace safe_explore::stgp {

/// A (time index, state id) pair; the input space of the spatio-temporal GP.
struct SpaceTimePoint {
  int t = 0;
  StateId s = 0;

  friend auto operator<=>(const SpaceTimePoint&, const SpaceTimePoint&) = default;
};

enum class BaseKind { rbf_space, rbf_time };

struct BaseKernel {
  BaseKind kind = BaseKind::rbf_space;
  double length_scale = 1.0;
  double variance = 1.0;
};

/// Immutable expression tree of RBF leaves joined by sum and product nodes.
///
/// Copies share the underlying tree, so a KernelSpec is cheap to pass by value
/// and safe to read from several threads.
class KernelSpec {
 public:
  enum class NodeKind { leaf, sum, product };

  // Throws Error(invalid_parameter) unless length scale and variance are
  // finite and positive.
  static KernelSpec leaf(BaseKind kind, double length_scale, double variance);
  static KernelSpec leaf(const BaseKernel& base) {
    return leaf(base.kind, base.length_scale, base.variance);
  }
  static KernelSpec sum(KernelSpec a, KernelSpec b);
  static KernelSpec product(KernelSpec a, KernelSpec b);

  NodeKind node_kind() const;
  const BaseKernel& base() const;   // leaf only
  const KernelSpec& left() const;   // sum/product only
  const KernelSpec& right() const;  // sum/product only

  /// Evaluates the tree for a pair of inputs `space_dist` cells and
  /// `time_dist` steps apart. Throws Error(invalid_kernel) on a non-finite
  /// result.
  double operator()(double space_dist, double time_dist) const;

  /// k(q, q): the prior variance.
  double prior_variance() const { return (*this)(0.0, 0.0); }

  bool depends_on_time() const;
  bool depends_on_space() const;

 private:
  struct Node;
  explicit KernelSpec(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  double eval_unchecked(double space_dist, double time_dist) const;

  std::shared_ptr<const Node> node_;
};

/// (k_s + k_t) + (k^_s * k^_t): separate space and time terms plus a
/// space-time interaction term.
KernelSpec composite_kernel(const BaseKernel& space, const BaseKernel& time,
                            const BaseKernel& cross_space, const BaseKernel& cross_time);

/// composite_kernel with the random-environment settings: space (var 1,
/// ls 2), time (var 1, ls 1.5), cross space (var 0.5, ls 4), cross time
/// (var 0.5, ls 10).
KernelSpec default_kernel();

/// Drops every subtree that mixes space and time through a product. Returns
/// nullopt if nothing is left.
std::optional<KernelSpec> without_cross_terms(const KernelSpec& k);

/// Keeps only the purely spatial part of the tree. Returns nullopt if the
/// kernel has no spatial-only component.
std::optional<KernelSpec> spatial_part(const KernelSpec& k);

/// Kernel value between two space-time points on `grid`. Spatial leaves use
/// the Euclidean distance between cell centres, temporal leaves |t_a - t_b|.
double eval_kernel(const KernelSpec& k, SpaceTimePoint a, SpaceTimePoint b,
                   const GridShape& grid);

// Config representation:
//   leaf:   {"kind": "rbf-space" | "rbf-time", "length_scale": x, "variance": v}
//   inner:  {"op": "sum" | "product", "children": [a, b]}
nlohmann::json to_json(const KernelSpec& k);
KernelSpec kernel_from_json(const nlohmann::json& j);

}  // namespace safe_explore::stgp
