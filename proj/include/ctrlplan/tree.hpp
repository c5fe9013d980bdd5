#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "ctrlplan/core.hpp"
#include "ctrlplan/spatial_index.hpp"

namespace ctrlplan {

using NodeId = std::uint32_t;

struct TreeNode {
  NodeId id = 0;
  State state;
  double costToCome = 0.0;
  std::optional<NodeId> parent;
  std::optional<ControlInput> edgeControl;
  std::optional<double> edgeDuration;
  bool onBestPath = false;
  bool live = true;
  bool reachesGoal = false;
};

// R(t) = R0 * (1 + t)^(-gamma).
struct RadiusSchedule {
  double initial = 1.0;
  double shrinkExponent = 0.5;

  double at(std::uint64_t t) const;
  void validate() const;
};

// The search tree with cost-to-come annotations. Node records are kept for
// the whole run; "live" nodes are the ones that can still be expanded and
// are visible to the spatial index. Removing a node detaches its whole
// subtree from the live set.
class PlanTree {
 public:
  PlanTree(std::size_t stateDim, std::size_t controlDim, StateMetric metric);

  NodeId addRoot(const State& root);

  // Adds a live child; costToCome = parent cost + edgeCost.
  NodeId insert(NodeId parent, const State& state, const ControlInput& control, double duration,
                double edgeCost);

  std::size_t nodeCount() const noexcept { return records_.size(); }
  std::size_t liveCount() const noexcept { return liveList_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  TreeNode node(NodeId id) const;
  State state(NodeId id) const;
  double costToCome(NodeId id) const;
  std::optional<NodeId> parent(NodeId id) const;
  bool isLive(NodeId id) const;
  bool onBestPath(NodeId id) const;

  // Live nodes in swap-remove order; used for uniform selection.
  const std::vector<NodeId>& liveNodes() const noexcept { return liveList_; }

  NodeId nearest(const State& q) const;
  std::vector<NodeId> neighborsWithinRange(const State& q, double radius) const;

  // Detaches `id` and its live descendants. Returns the number detached;
  // their ids are appended to `detached` when given.
  std::size_t removeSubtree(NodeId id, std::vector<NodeId>* detached = nullptr);

  // Marks the root-to-`leaf` chain as the best path (clearing the previous
  // one) and records the best cost.
  void setBest(NodeId leaf);
  double bestCost() const noexcept { return bestCost_; }
  std::optional<NodeId> bestNode() const noexcept { return bestNode_; }
  void markGoal(NodeId id);

  // Root-to-node chain, root first.
  std::vector<NodeId> chainTo(NodeId id) const;

  const StateMetric& metric() const noexcept { return index_.metric(); }
  const SpatialIndex& index() const noexcept { return index_; }

  // Line-oriented record dump (see README for the format).
  void dump(std::ostream& out) const;

 private:
  struct Record {
    std::int64_t parent = -1;
    double cost = 0.0;
    double duration = 0.0;
    std::int64_t firstChild = -1;
    std::int64_t nextSibling = -1;
    std::uint8_t flags = 0;
  };

  static constexpr std::uint8_t kLive = 1;
  static constexpr std::uint8_t kBest = 2;
  static constexpr std::uint8_t kGoal = 4;

  void checkId(NodeId id) const;
  void detach(NodeId id);

  std::size_t stateDim_;
  std::size_t controlDim_;
  std::vector<Record> records_;
  std::vector<double> states_;
  std::vector<double> controls_;
  std::vector<NodeId> liveList_;
  std::vector<std::uint32_t> livePos_;
  SpatialIndex index_;
  double bestCost_ = std::numeric_limits<double>::infinity();
  std::optional<NodeId> bestNode_;
};

struct PruneCandidate {
  State state;
  double cost = 0.0;
};

// Neighborhood pruning. Rejects (false) when a live node within `radius`
// is strictly cheaper than the candidate. Otherwise accepts (true) and
// detaches every neighbor that is strictly more expensive and not on the
// best path. Equal-cost neighbors are kept. Detached ids go to `detached`.
bool prune(PlanTree& tree, const PruneCandidate& child, double radius,
           std::vector<NodeId>* detached = nullptr);

}  // namespace ctrlplan
