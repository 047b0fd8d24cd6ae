#include "safe_explore/kernel.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "safe_explore/error.hpp"

namespace safe_explore::stgp {

struct KernelSpec::Node {
  NodeKind kind;
  BaseKernel base;
  KernelSpec lhs;
  KernelSpec rhs;
};

KernelSpec KernelSpec::leaf(BaseKind kind, double length_scale, double variance) {
  if (!(std::isfinite(length_scale) && length_scale > 0.0))
    throw Error(ErrorCode::invalid_parameter,
                "kernel length_scale must be finite and positive, got " + std::to_string(length_scale));
  if (!(std::isfinite(variance) && variance > 0.0))
    throw Error(ErrorCode::invalid_parameter,
                "kernel variance must be finite and positive, got " + std::to_string(variance));
  return KernelSpec(std::make_shared<const Node>(
      Node{NodeKind::leaf, BaseKernel{kind, length_scale, variance}, KernelSpec(nullptr), KernelSpec(nullptr)}));
}

KernelSpec KernelSpec::sum(KernelSpec a, KernelSpec b) {
  if (!a.node_ || !b.node_) throw Error(ErrorCode::invalid_kernel, "sum of an empty kernel");
  return KernelSpec(std::make_shared<const Node>(Node{NodeKind::sum, {}, std::move(a), std::move(b)}));
}

KernelSpec KernelSpec::product(KernelSpec a, KernelSpec b) {
  if (!a.node_ || !b.node_) throw Error(ErrorCode::invalid_kernel, "product of an empty kernel");
  return KernelSpec(
      std::make_shared<const Node>(Node{NodeKind::product, {}, std::move(a), std::move(b)}));
}

KernelSpec::NodeKind KernelSpec::node_kind() const {
  if (!node_) throw Error(ErrorCode::invalid_kernel, "empty kernel");
  return node_->kind;
}

const BaseKernel& KernelSpec::base() const {
  if (node_kind() != NodeKind::leaf) throw Error(ErrorCode::invalid_kernel, "not a leaf kernel");
  return node_->base;
}

const KernelSpec& KernelSpec::left() const {
  if (node_kind() == NodeKind::leaf) throw Error(ErrorCode::invalid_kernel, "leaf has no children");
  return node_->lhs;
}

const KernelSpec& KernelSpec::right() const {
  if (node_kind() == NodeKind::leaf) throw Error(ErrorCode::invalid_kernel, "leaf has no children");
  return node_->rhs;
}

double KernelSpec::eval_unchecked(double space_dist, double time_dist) const {
  switch (node_->kind) {
    case NodeKind::leaf: {
      const BaseKernel& b = node_->base;
      const double d = b.kind == BaseKind::rbf_space ? space_dist : time_dist;
      return b.variance * std::exp(-d * d / (2.0 * b.length_scale * b.length_scale));
    }
    case NodeKind::sum:
      return node_->lhs.eval_unchecked(space_dist, time_dist) +
             node_->rhs.eval_unchecked(space_dist, time_dist);
    case NodeKind::product:
      return node_->lhs.eval_unchecked(space_dist, time_dist) *
             node_->rhs.eval_unchecked(space_dist, time_dist);
  }
  return 0.0;
}

double KernelSpec::operator()(double space_dist, double time_dist) const {
  if (!node_) throw Error(ErrorCode::invalid_kernel, "empty kernel");
  const double v = eval_unchecked(space_dist, time_dist);
  if (!std::isfinite(v)) throw Error(ErrorCode::invalid_kernel, "kernel evaluated to a non-finite value");
  return v;
}

bool KernelSpec::depends_on_time() const {
  if (node_kind() == NodeKind::leaf) return node_->base.kind == BaseKind::rbf_time;
  return node_->lhs.depends_on_time() || node_->rhs.depends_on_time();
}

bool KernelSpec::depends_on_space() const {
  if (node_kind() == NodeKind::leaf) return node_->base.kind == BaseKind::rbf_space;
  return node_->lhs.depends_on_space() || node_->rhs.depends_on_space();
}

KernelSpec composite_kernel(const BaseKernel& space, const BaseKernel& time,
                            const BaseKernel& cross_space, const BaseKernel& cross_time) {
  return KernelSpec::sum(
      KernelSpec::sum(KernelSpec::leaf(space), KernelSpec::leaf(time)),
      KernelSpec::product(KernelSpec::leaf(cross_space), KernelSpec::leaf(cross_time)));
}

KernelSpec default_kernel() {
  return composite_kernel({BaseKind::rbf_space, 2.0, 1.0}, {BaseKind::rbf_time, 1.5, 1.0},
                          {BaseKind::rbf_space, 4.0, 0.5}, {BaseKind::rbf_time, 10.0, 0.5});
}

namespace {

std::optional<KernelSpec> combine(KernelSpec::NodeKind kind, std::optional<KernelSpec> a,
                                  std::optional<KernelSpec> b) {
  if (!a) return b;
  if (!b) return a;
  return kind == KernelSpec::NodeKind::sum ? KernelSpec::sum(*a, *b) : KernelSpec::product(*a, *b);
}

}  // namespace

std::optional<KernelSpec> without_cross_terms(const KernelSpec& k) {
  switch (k.node_kind()) {
    case KernelSpec::NodeKind::leaf:
      return k;
    case KernelSpec::NodeKind::product:
      if (k.depends_on_space() && k.depends_on_time()) return std::nullopt;
      return k;
    case KernelSpec::NodeKind::sum:
      return combine(KernelSpec::NodeKind::sum, without_cross_terms(k.left()),
                     without_cross_terms(k.right()));
  }
  return std::nullopt;
}

std::optional<KernelSpec> spatial_part(const KernelSpec& k) {
  switch (k.node_kind()) {
    case KernelSpec::NodeKind::leaf:
      if (k.base().kind == BaseKind::rbf_space) return k;
      return std::nullopt;
    case KernelSpec::NodeKind::product:
      if (k.depends_on_time()) return std::nullopt;
      return k;
    case KernelSpec::NodeKind::sum:
      return combine(KernelSpec::NodeKind::sum, spatial_part(k.left()), spatial_part(k.right()));
  }
  return std::nullopt;
}

double eval_kernel(const KernelSpec& k, SpaceTimePoint a, SpaceTimePoint b, const GridShape& grid) {
  return k(euclidean_distance(grid, a.s, b.s), std::abs(static_cast<double>(a.t - b.t)));
}

nlohmann::json to_json(const KernelSpec& k) {
  switch (k.node_kind()) {
    case KernelSpec::NodeKind::leaf: {
      const BaseKernel& b = k.base();
      return {{"kind", b.kind == BaseKind::rbf_space ? "rbf-space" : "rbf-time"},
              {"length_scale", b.length_scale},
              {"variance", b.variance}};
    }
    case KernelSpec::NodeKind::sum:
    case KernelSpec::NodeKind::product:
      return {{"op", k.node_kind() == KernelSpec::NodeKind::sum ? "sum" : "product"},
              {"children", nlohmann::json::array({to_json(k.left()), to_json(k.right())})}};
  }
  return {};
}

namespace {

KernelSpec parse_node(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::config, "kernel node must be an object");
  if (j.contains("op")) {
    const std::string op = j.at("op").get<std::string>();
    const auto& children = j.at("children");
    if (!children.is_array() || children.size() != 2)
      throw Error(ErrorCode::config, "kernel '" + op + "' node needs exactly two children");
    KernelSpec a = parse_node(children[0]);
    KernelSpec b = parse_node(children[1]);
    if (op == "sum") return KernelSpec::sum(std::move(a), std::move(b));
    if (op == "product") return KernelSpec::product(std::move(a), std::move(b));
    throw Error(ErrorCode::config, "unknown kernel op '" + op + "'");
  }
  if (!j.contains("kind")) throw Error(ErrorCode::config, "kernel node needs 'op' or 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  BaseKind base_kind;
  if (kind == "rbf-space") {
    base_kind = BaseKind::rbf_space;
  } else if (kind == "rbf-time") {
    base_kind = BaseKind::rbf_time;
  } else {
    throw Error(ErrorCode::config, "unknown kernel kind '" + kind + "'");
  }
  for (const auto& [key, _] : j.items())
    if (key != "kind" && key != "length_scale" && key != "variance")
      throw Error(ErrorCode::config, "unknown kernel key '" + key + "'");
  return KernelSpec::leaf(base_kind, j.at("length_scale").get<double>(), j.at("variance").get<double>());
}

}  // namespace

KernelSpec kernel_from_json(const nlohmann::json& j) {
  try {
    return parse_node(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, std::string("malformed kernel: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::config) throw;
    throw Error(ErrorCode::config, e.what());
  }
}

}  // namespace safe_explore::stgp
