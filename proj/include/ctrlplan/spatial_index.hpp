#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "ctrlplan/core.hpp"

namespace ctrlplan {

// Weighted L2 over state coordinates; angular dimensions use the shorter
// way around the circle.
class StateMetric {
 public:
  StateMetric(std::vector<double> weights, std::vector<bool> angular);

  // Unit weights, no angles.
  static StateMetric euclidean(std::size_t dim);

  std::size_t dim() const noexcept { return weights_.size(); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<std::uint8_t>& wrapMask() const noexcept { return wrap_; }

  // Angular coordinates mapped onto [-pi, pi]; others copied.
  void canonicalize(const State& s, double* out) const noexcept;

  double squaredDistance(const State& a, const State& b) const;
  double distance(const State& a, const State& b) const;

 private:
  std::vector<double> weights_;
  std::vector<std::uint8_t> wrap_;
};

struct NearestHit {
  std::uint32_t id = 0;
  double squaredDistance = 0.0;
};

// Dynamic nearest-neighbor and range index over (id, state) pairs.
//
// Points go to a small insertion buffer; full buffers are merged into a
// logarithmic forest of static kd-trees (level i holds up to buffer * 2^i
// points). Removal is a tombstone; the forest is rebuilt once tombstones
// outnumber live points. Leaves are scanned with the batched distance
// kernel. Ties in nearest() resolve to the lowest id, and withinRadius()
// returns ids in ascending order, so results are independent of layout.
class SpatialIndex {
 public:
  explicit SpatialIndex(StateMetric metric, std::size_t bufferCapacity = 32);

  const StateMetric& metric() const noexcept { return metric_; }

  // Ids must be unique; re-inserting a removed id is rejected.
  void insert(std::uint32_t id, const State& s);
  void remove(std::uint32_t id);
  bool contains(std::uint32_t id) const noexcept;

  std::size_t size() const noexcept { return live_; }
  bool empty() const noexcept { return live_ == 0; }

  std::optional<NearestHit> nearest(const State& q) const;
  std::vector<std::uint32_t> withinRadius(const State& q, double radius) const;

  // Forest shape, for tests.
  std::size_t treeCount() const noexcept;

 private:
  static constexpr std::size_t kLeafSize = 16;

  struct KdNode {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  struct StaticTree {
    std::size_t count = 0;
    std::vector<double> coords;  // SoA, stride = count
    std::vector<std::uint32_t> ids;
    std::vector<KdNode> nodes;
    std::vector<double> boxes;  // per node: dims lows then dims highs
  };

  // Row-major (AoS) staging area for rebuilds.
  struct PointSet {
    std::vector<std::uint32_t> ids;
    std::vector<double> coords;
  };

  StaticTree build(const PointSet& points) const;
  std::int32_t buildNode(StaticTree& tree, const PointSet& points, std::vector<std::uint32_t>& perm,
                         std::uint32_t begin, std::uint32_t end) const;
  void collect(const StaticTree& tree, PointSet& out) const;
  void collectBuffer(PointSet& out) const;
  void flushBuffer();
  void rebuildAll();

  double boxLowerBound(const StaticTree& tree, std::size_t node, const double* q) const noexcept;
  void nearestInTree(const StaticTree& tree, std::size_t node, const double* q, NearestHit& best,
                     bool& found) const;
  void rangeInTree(const StaticTree& tree, std::size_t node, const double* q, double limit,
                   std::vector<std::uint32_t>& out) const;
  void scan(const double* coords, std::size_t stride, std::size_t begin, std::size_t count,
            const double* q, double* out) const;

  StateMetric metric_;
  std::size_t bufferCapacity_;
  std::vector<double> bufferCoords_;  // SoA, stride = bufferCapacity_
  std::vector<std::uint32_t> bufferIds_;
  std::vector<std::optional<StaticTree>> levels_;
  std::vector<std::uint8_t> state_;  // per id: 0 unseen, 1 live, 2 removed
  std::size_t live_ = 0;
  std::size_t tombstones_ = 0;
};

}  // namespace ctrlplan
