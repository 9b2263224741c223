#pragma once

#include <compare>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kbp/mps.hpp"
#include "kbp/tensor.hpp"

namespace kbp {

using NodeId = std::string;

struct LegRef {
  NodeId node;
  LegId leg;
  auto operator<=>(const LegRef&) const = default;
};

std::string to_string(const LegRef& r);

struct TNEdge {
  LegRef a;
  LegRef b;
};

// Planar tensor network. A node's legs, in tensor order, are read as its counter-clockwise
// cyclic order; for a node on the outer face the outer face sits between its last and first leg.
class TNGraph {
 public:
  void add_node(const NodeId& id, Tensor t);
  void connect(const LegRef& a, const LegRef& b);
  // Fixes the order of open legs; by default they are listed in node insertion order.
  void set_open_legs(std::vector<LegRef> legs);

  bool has_node(const NodeId& id) const { return index_.count(id) != 0; }
  const Tensor& node(const NodeId& id) const;
  Tensor& mutable_node(const NodeId& id);
  const std::vector<NodeId>& node_ids() const { return order_; }
  std::size_t node_count() const { return order_.size(); }
  const std::vector<TNEdge>& edges() const { return edges_; }
  std::vector<LegRef> open_legs() const;
  std::optional<LegRef> partner(const LegRef& r) const;

  // Throws DimensionMismatch or InvalidPlan on inconsistent wiring.
  void validate() const;

 private:
  std::vector<NodeId> order_;
  std::map<NodeId, std::size_t> index_;
  std::vector<Tensor> tensors_;
  std::vector<TNEdge> edges_;
  std::map<LegRef, LegRef> partner_;
  std::optional<std::vector<LegRef>> open_legs_;
};

struct SweepPlan {
  std::vector<NodeId> swallow_order;
  // Expected order of the final frontier (open legs); empty means "as produced".
  std::vector<LegRef> emit_legs;
};

// A frontier leg belongs to a swallowed node (inner) and points at an unswallowed
// node leg (outer) or at nothing for an open leg.
struct FrontierLeg {
  LegRef inner;
  std::optional<LegRef> outer;
};

struct BoundaryResult {
  MPS mps;                          // empty when the whole network was contracted
  std::vector<FrontierLeg> legs;    // one per MPS site, in chain order
  ScaledScalar scalar;              // value when legs is empty
  double truncation_error = 0.0;    // relative, accumulated in quadrature
  std::size_t max_frontier = 0;
};

struct BoundaryOptions {
  // Orthogonality centre is moved to each swallow site so truncation is locally optimal.
  bool canonical_center = true;
};

// Boundary-MPS contraction: the swallowed region grows node by node; the MPS runs
// counter-clockwise around the region, cut at the outer face next to the first node.
BoundaryResult boundary_contract(const TNGraph& tn, const SweepPlan& plan, std::size_t chi,
                                 BoundaryOptions options = {});

struct PlanIssue {
  std::size_t prefix = 0;  // number of nodes swallowed before the issue
  std::string message;
  bool warning = false;
};

struct ValidateOptions {
  // Frontier width above which a warning is emitted; 0 means 2*ceil(sqrt(#nodes)).
  std::size_t width_warning = 0;
};

std::vector<PlanIssue> validate_plan(const TNGraph& tn, const SweepPlan& plan, ValidateOptions options = {});

// Greedy plan over `nodes`: starts at `start`, then repeatedly swallows the valid candidate
// with the smallest priority (ties by id order in `nodes`).
SweepPlan greedy_plan(const TNGraph& tn, const std::vector<NodeId>& nodes, const NodeId& start,
                      const std::function<double(const NodeId&)>& priority);

struct ExactOptions {
  std::size_t open_cap = std::size_t{1} << 16;
  std::size_t intermediate_cap = std::size_t{1} << 26;
  // Explicit pairwise order (edge indices); empty selects a greedy smallest-result order.
  std::vector<std::size_t> edge_order;
};

// Open legs of the result are named "<node>:<leg>" and follow tn.open_legs().
Tensor contract_exact(const TNGraph& tn, const ExactOptions& options = {});
std::string exact_leg_name(const LegRef& r);

// Periodic boundary around a region: ring site i attaches to region leg legs[i].
// The ring runs counter-clockwise around the region.
struct RingEnvironment {
  PeriodicMPS ring;
  std::vector<LegRef> legs;
};

// Contracts region node `id` into the ring exactly (numerical-rank SVD splits).
void absorb_into_ring(RingEnvironment& env, const TNGraph& region, const NodeId& id,
                      std::size_t chi = kUnlimited);
// Whether `id` currently touches the ring in one contiguous run.
bool ring_absorbable(const RingEnvironment& env, const TNGraph& region, const NodeId& id);

}  // namespace kbp
