#include "ctrlplan/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace ctrlplan {

double RadiusSchedule::at(std::uint64_t t) const {
  return initial * std::pow(1.0 + static_cast<double>(t), -shrinkExponent);
}

void RadiusSchedule::validate() const {
  if (!(initial > 0.0) || !std::isfinite(initial)) throw Error(ErrorKind::InvalidConfig, "R0 must be positive");
  if (!(shrinkExponent > 0.0 && shrinkExponent <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "radius shrink exponent must lie in (0, 1]");
  }
}

PlanTree::PlanTree(std::size_t stateDim, std::size_t controlDim, StateMetric metric)
    : stateDim_(stateDim), controlDim_(controlDim), index_(std::move(metric)) {
  if (index_.metric().dim() != stateDim) throw Error(ErrorKind::DimensionMismatch, "metric dimension differs from state");
}

void PlanTree::checkId(NodeId id) const {
  if (id >= records_.size()) throw Error(ErrorKind::UnknownNode, "node " + std::to_string(id) + " does not exist");
}

NodeId PlanTree::addRoot(const State& root) {
  if (!records_.empty()) throw Error(ErrorKind::InvalidArgument, "tree already has a root");
  if (root.size() != stateDim_) throw Error(ErrorKind::DimensionMismatch, "root state dimension");
  records_.push_back({-1, 0.0, 0.0, -1, -1, kLive});
  states_.insert(states_.end(), root.begin(), root.end());
  controls_.insert(controls_.end(), controlDim_, 0.0);
  liveList_.push_back(0);
  livePos_.push_back(0);
  index_.insert(0, root);
  return 0;
}

NodeId PlanTree::insert(NodeId parent, const State& state, const ControlInput& control, double duration,
                        double edgeCost) {
  checkId(parent);
  if (!isLive(parent)) throw Error(ErrorKind::UnknownNode, "parent " + std::to_string(parent) + " is not live");
  if (!(edgeCost >= 0.0)) throw Error(ErrorKind::InvalidArgument, "edge cost must be non-negative");
  if (state.size() != stateDim_ || control.size() != controlDim_) {
    throw Error(ErrorKind::DimensionMismatch, "node state or control dimension");
  }
  const auto id = static_cast<NodeId>(records_.size());
  Record rec;
  rec.parent = parent;
  rec.cost = records_[parent].cost + edgeCost;
  rec.duration = duration;
  rec.flags = kLive;
  rec.nextSibling = records_[parent].firstChild;
  records_[parent].firstChild = id;
  records_.push_back(rec);
  states_.insert(states_.end(), state.begin(), state.end());
  controls_.insert(controls_.end(), control.begin(), control.end());
  livePos_.push_back(static_cast<std::uint32_t>(liveList_.size()));
  liveList_.push_back(id);
  index_.insert(id, state);
  return id;
}

State PlanTree::state(NodeId id) const {
  checkId(id);
  return State(std::span<const double>(states_.data() + static_cast<std::size_t>(id) * stateDim_, stateDim_));
}

double PlanTree::costToCome(NodeId id) const {
  checkId(id);
  return records_[id].cost;
}

std::optional<NodeId> PlanTree::parent(NodeId id) const {
  checkId(id);
  if (records_[id].parent < 0) return std::nullopt;
  return static_cast<NodeId>(records_[id].parent);
}

bool PlanTree::isLive(NodeId id) const {
  checkId(id);
  return (records_[id].flags & kLive) != 0;
}

bool PlanTree::onBestPath(NodeId id) const {
  checkId(id);
  return (records_[id].flags & kBest) != 0;
}

TreeNode PlanTree::node(NodeId id) const {
  checkId(id);
  const Record& r = records_[id];
  TreeNode n;
  n.id = id;
  n.state = state(id);
  n.costToCome = r.cost;
  if (r.parent >= 0) {
    n.parent = static_cast<NodeId>(r.parent);
    n.edgeControl =
        ControlInput(std::span<const double>(controls_.data() + static_cast<std::size_t>(id) * controlDim_, controlDim_));
    n.edgeDuration = r.duration;
  }
  n.onBestPath = (r.flags & kBest) != 0;
  n.live = (r.flags & kLive) != 0;
  n.reachesGoal = (r.flags & kGoal) != 0;
  return n;
}

NodeId PlanTree::nearest(const State& q) const {
  const auto hit = index_.nearest(q);
  if (!hit) throw Error(ErrorKind::EmptyTree, "nearest query on a tree without live nodes");
  return hit->id;
}

std::vector<NodeId> PlanTree::neighborsWithinRange(const State& q, double radius) const {
  return index_.withinRadius(q, radius);
}

void PlanTree::detach(NodeId id) {
  Record& r = records_[id];
  if ((r.flags & kLive) == 0) return;
  r.flags = static_cast<std::uint8_t>(r.flags & ~kLive);
  const std::uint32_t pos = livePos_[id];
  const NodeId moved = liveList_.back();
  liveList_[pos] = moved;
  livePos_[moved] = pos;
  liveList_.pop_back();
  index_.remove(id);
}

std::size_t PlanTree::removeSubtree(NodeId id, std::vector<NodeId>* detached) {
  checkId(id);
  std::size_t removed = 0;
  std::vector<NodeId> stack{id};
  while (!stack.empty()) {
    const NodeId cur = stack.back();
    stack.pop_back();
    if ((records_[cur].flags & kLive) != 0) {
      detach(cur);
      if (detached) detached->push_back(cur);
      ++removed;
    }
    for (std::int64_t c = records_[cur].firstChild; c >= 0; c = records_[c].nextSibling) {
      stack.push_back(static_cast<NodeId>(c));
    }
  }
  return removed;
}

std::vector<NodeId> PlanTree::chainTo(NodeId id) const {
  checkId(id);
  std::vector<NodeId> chain;
  for (std::int64_t cur = id; cur >= 0; cur = records_[cur].parent) {
    chain.push_back(static_cast<NodeId>(cur));
    if (chain.size() > records_.size()) throw Error(ErrorKind::BrokenChain, "cycle in parent chain");
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

void PlanTree::setBest(NodeId leaf) {
  checkId(leaf);
  if (bestNode_) {
    for (NodeId n : chainTo(*bestNode_)) records_[n].flags = static_cast<std::uint8_t>(records_[n].flags & ~kBest);
  }
  for (NodeId n : chainTo(leaf)) records_[n].flags |= kBest;
  bestNode_ = leaf;
  bestCost_ = records_[leaf].cost;
}

void PlanTree::markGoal(NodeId id) {
  checkId(id);
  records_[id].flags |= kGoal;
}

void PlanTree::dump(std::ostream& out) const {
  out << "# ctrlplan-tree v1 state_dim=" << stateDim_ << " control_dim=" << controlDim_
      << " nodes=" << records_.size() << '\n';
  out << "# id\tparent\tcost\tduration\tflags\tstate\tcontrol\n";
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (std::size_t id = 0; id < records_.size(); ++id) {
    const Record& r = records_[id];
    std::string flags;
    if (r.flags & kLive) flags += 'L';
    if (r.flags & kBest) flags += 'B';
    if (r.flags & kGoal) flags += 'G';
    if (flags.empty()) flags = "-";
    out << id << '\t' << r.parent << '\t' << num(r.cost) << '\t' << num(r.duration) << '\t' << flags << '\t';
    for (std::size_t d = 0; d < stateDim_; ++d) out << (d ? "," : "") << num(states_[id * stateDim_ + d]);
    out << '\t';
    if (r.parent < 0) {
      out << '-';
    } else {
      for (std::size_t d = 0; d < controlDim_; ++d) out << (d ? "," : "") << num(controls_[id * controlDim_ + d]);
    }
    out << '\n';
  }
}

bool prune(PlanTree& tree, const PruneCandidate& child, double radius, std::vector<NodeId>* detached) {
  if (!(radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "prune radius must be positive");
  const auto neighbors = tree.neighborsWithinRange(child.state, radius);
  for (NodeId n : neighbors) {
    if (tree.costToCome(n) < child.cost) return false;
  }
  for (NodeId n : neighbors) {
    if (tree.isLive(n) && tree.costToCome(n) > child.cost && !tree.onBestPath(n)) tree.removeSubtree(n, detached);
  }
  return true;
}

}  // namespace ctrlplan
