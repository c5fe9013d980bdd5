#include "ctrlplan/spatial_index.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "ctrlplan/simd/kernels.hpp"

namespace ctrlplan {

namespace {

// Box bounds are shrunk by this relative margin before pruning so rounding
// in the bound never discards a point the exact scan would keep.
constexpr double kPruneSlack = 1e-12;
constexpr double kAbsoluteSlack = 1e-13;

}  // namespace

StateMetric::StateMetric(std::vector<double> weights, std::vector<bool> angular) : weights_(std::move(weights)) {
  if (weights_.empty()) throw Error(ErrorKind::InvalidConfig, "metric needs at least one dimension");
  if (!angular.empty() && angular.size() != weights_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "metric angular flags differ from weights");
  }
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorKind::InvalidConfig, "metric weights must be finite and >= 0");
  }
  wrap_.assign(weights_.size(), 0);
  for (std::size_t d = 0; d < angular.size(); ++d) wrap_[d] = angular[d] ? 1 : 0;
}

StateMetric StateMetric::euclidean(std::size_t dim) {
  return StateMetric(std::vector<double>(dim, 1.0), {});
}

void StateMetric::canonicalize(const State& s, double* out) const noexcept {
  for (std::size_t d = 0; d < weights_.size(); ++d) out[d] = wrap_[d] ? wrapAngle(s[d]) : s[d];
}

double StateMetric::squaredDistance(const State& a, const State& b) const {
  if (a.size() != dim() || b.size() != dim()) {
    throw Error(ErrorKind::DimensionMismatch, "state dimension does not match the metric");
  }
  std::array<double, State::kCapacity> ca{}, cb{};
  canonicalize(a, ca.data());
  canonicalize(b, cb.data());
  double acc = 0.0;
  for (std::size_t d = 0; d < dim(); ++d) {
    const double diff = simd::wrappedDiff(ca[d], cb[d], wrap_[d] != 0);
    acc = acc + weights_[d] * (diff * diff);
  }
  return acc;
}

double StateMetric::distance(const State& a, const State& b) const { return std::sqrt(squaredDistance(a, b)); }

SpatialIndex::SpatialIndex(StateMetric metric, std::size_t bufferCapacity)
    : metric_(std::move(metric)), bufferCapacity_(std::max<std::size_t>(bufferCapacity, 1)) {
  bufferCoords_.resize(metric_.dim() * bufferCapacity_);
  bufferIds_.reserve(bufferCapacity_);
}

std::size_t SpatialIndex::treeCount() const noexcept {
  return static_cast<std::size_t>(std::count_if(levels_.begin(), levels_.end(), [](const auto& t) { return t.has_value(); }));
}

bool SpatialIndex::contains(std::uint32_t id) const noexcept { return id < state_.size() && state_[id] == 1; }

void SpatialIndex::insert(std::uint32_t id, const State& s) {
  if (s.size() != metric_.dim()) throw Error(ErrorKind::DimensionMismatch, "state dimension does not match the index");
  if (id < state_.size() && state_[id] != 0) throw Error(ErrorKind::InvalidArgument, "id already indexed");
  if (id >= state_.size()) state_.resize(static_cast<std::size_t>(id) + 1, 0);

  std::array<double, State::kCapacity> c{};
  metric_.canonicalize(s, c.data());
  const std::size_t slot = bufferIds_.size();
  for (std::size_t d = 0; d < metric_.dim(); ++d) bufferCoords_[d * bufferCapacity_ + slot] = c[d];
  bufferIds_.push_back(id);
  state_[id] = 1;
  ++live_;
  if (bufferIds_.size() == bufferCapacity_) flushBuffer();
}

void SpatialIndex::remove(std::uint32_t id) {
  if (!contains(id)) return;
  state_[id] = 2;
  --live_;
  ++tombstones_;
  if (tombstones_ > live_ && tombstones_ > bufferCapacity_) rebuildAll();
}

void SpatialIndex::collectBuffer(PointSet& out) const {
  const std::size_t dims = metric_.dim();
  for (std::size_t i = 0; i < bufferIds_.size(); ++i) {
    if (state_[bufferIds_[i]] != 1) continue;
    out.ids.push_back(bufferIds_[i]);
    for (std::size_t d = 0; d < dims; ++d) out.coords.push_back(bufferCoords_[d * bufferCapacity_ + i]);
  }
}

void SpatialIndex::collect(const StaticTree& tree, PointSet& out) const {
  const std::size_t dims = metric_.dim();
  for (std::size_t i = 0; i < tree.count; ++i) {
    if (state_[tree.ids[i]] != 1) continue;
    out.ids.push_back(tree.ids[i]);
    for (std::size_t d = 0; d < dims; ++d) out.coords.push_back(tree.coords[d * tree.count + i]);
  }
}

void SpatialIndex::flushBuffer() {
  PointSet carry;
  collectBuffer(carry);
  bufferIds_.clear();
  std::size_t level = 0;
  while (level < levels_.size() && levels_[level].has_value()) {
    collect(*levels_[level], carry);
    levels_[level].reset();
    ++level;
  }
  // Tombstones in the merged levels are gone now; recount the rest.
  if (level == levels_.size()) levels_.emplace_back();
  if (!carry.ids.empty()) levels_[level] = build(carry);
  std::size_t stored = bufferIds_.size();
  for (const auto& t : levels_) {
    if (t) stored += t->count;
  }
  tombstones_ = stored - live_;
}

void SpatialIndex::rebuildAll() {
  PointSet all;
  collectBuffer(all);
  for (const auto& t : levels_) {
    if (t) collect(*t, all);
  }
  bufferIds_.clear();
  levels_.clear();
  tombstones_ = 0;
  if (all.ids.empty()) return;
  std::size_t level = 0;
  while ((bufferCapacity_ << level) < all.ids.size()) ++level;
  levels_.resize(level + 1);
  levels_[level] = build(all);
}

SpatialIndex::StaticTree SpatialIndex::build(const PointSet& points) const {
  StaticTree tree;
  tree.count = points.ids.size();
  std::vector<std::uint32_t> perm(tree.count);
  std::iota(perm.begin(), perm.end(), 0u);
  tree.nodes.reserve(2 * (tree.count / kLeafSize + 1));
  buildNode(tree, points, perm, 0, static_cast<std::uint32_t>(tree.count));

  const std::size_t dims = metric_.dim();
  tree.coords.resize(dims * tree.count);
  tree.ids.resize(tree.count);
  for (std::size_t i = 0; i < tree.count; ++i) {
    tree.ids[i] = points.ids[perm[i]];
    for (std::size_t d = 0; d < dims; ++d) tree.coords[d * tree.count + i] = points.coords[perm[i] * dims + d];
  }
  return tree;
}

std::int32_t SpatialIndex::buildNode(StaticTree& tree, const PointSet& points, std::vector<std::uint32_t>& perm,
                                     std::uint32_t begin, std::uint32_t end) const {
  const std::size_t dims = metric_.dim();
  const auto index = static_cast<std::int32_t>(tree.nodes.size());
  tree.nodes.push_back({begin, end, -1, -1});
  const std::size_t boxOffset = tree.boxes.size();
  tree.boxes.resize(boxOffset + 2 * dims);
  double* lo = tree.boxes.data() + boxOffset;
  double* hi = lo + dims;
  for (std::size_t d = 0; d < dims; ++d) {
    lo[d] = std::numeric_limits<double>::infinity();
    hi[d] = -std::numeric_limits<double>::infinity();
  }
  for (std::uint32_t i = begin; i < end; ++i) {
    const double* p = points.coords.data() + static_cast<std::size_t>(perm[i]) * dims;
    for (std::size_t d = 0; d < dims; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  }
  if (end - begin <= kLeafSize) return index;

  std::size_t splitDim = 0;
  double widest = -1.0;
  for (std::size_t d = 0; d < dims; ++d) {
    const double spread = (hi[d] - lo[d]) * std::sqrt(metric_.weights()[d]);
    if (spread > widest) {
      widest = spread;
      splitDim = d;
    }
  }
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(perm.begin() + begin, perm.begin() + mid, perm.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points.coords[a * dims + splitDim] < points.coords[b * dims + splitDim];
                   });
  const std::int32_t left = buildNode(tree, points, perm, begin, mid);
  const std::int32_t right = buildNode(tree, points, perm, mid, end);
  tree.nodes[index].left = left;
  tree.nodes[index].right = right;
  return index;
}

double SpatialIndex::boxLowerBound(const StaticTree& tree, std::size_t node, const double* q) const noexcept {
  const std::size_t dims = metric_.dim();
  const double* lo = tree.boxes.data() + node * 2 * dims;
  const double* hi = lo + dims;
  const auto& w = metric_.weights();
  const auto& wrap = metric_.wrapMask();
  double acc = 0.0;
  double weightSum = 0.0;
  for (std::size_t d = 0; d < dims; ++d) {
    weightSum += w[d];
    double gap = 0.0;
    if (wrap[d]) {
      if (q[d] < lo[d] || q[d] > hi[d]) {
        gap = std::min(std::abs(simd::wrappedDiff(q[d], lo[d], true)), std::abs(simd::wrappedDiff(q[d], hi[d], true)));
      }
    } else if (q[d] < lo[d]) {
      gap = lo[d] - q[d];
    } else if (q[d] > hi[d]) {
      gap = q[d] - hi[d];
    }
    acc = acc + w[d] * (gap * gap);
  }
  return acc * (1.0 - kPruneSlack) - kAbsoluteSlack * weightSum;
}

void SpatialIndex::scan(const double* coords, std::size_t stride, std::size_t begin, std::size_t count,
                        const double* q, double* out) const {
  const simd::SoaView view{coords + begin, metric_.dim(), stride, count};
  const simd::MetricParams params{metric_.weights(), metric_.wrapMask()};
  simd::activeKernels().weightedSqDist({q, metric_.dim()}, view, params, out);
}

void SpatialIndex::nearestInTree(const StaticTree& tree, std::size_t node, const double* q, NearestHit& best,
                                 bool& found) const {
  const KdNode& n = tree.nodes[node];
  if (n.left < 0) {
    std::array<double, kLeafSize> dist{};
    scan(tree.coords.data(), tree.count, n.begin, n.end - n.begin, q, dist.data());
    for (std::uint32_t i = n.begin; i < n.end; ++i) {
      const std::uint32_t id = tree.ids[i];
      if (state_[id] != 1) continue;
      const double d = dist[i - n.begin];
      if (!found || d < best.squaredDistance || (d == best.squaredDistance && id < best.id)) {
        best = {id, d};
        found = true;
      }
    }
    return;
  }
  const double boundLeft = boxLowerBound(tree, static_cast<std::size_t>(n.left), q);
  const double boundRight = boxLowerBound(tree, static_cast<std::size_t>(n.right), q);
  const bool leftFirst = boundLeft <= boundRight;
  const std::int32_t first = leftFirst ? n.left : n.right;
  const std::int32_t second = leftFirst ? n.right : n.left;
  const double firstBound = leftFirst ? boundLeft : boundRight;
  const double secondBound = leftFirst ? boundRight : boundLeft;
  if (!found || firstBound <= best.squaredDistance) nearestInTree(tree, static_cast<std::size_t>(first), q, best, found);
  if (!found || secondBound <= best.squaredDistance) nearestInTree(tree, static_cast<std::size_t>(second), q, best, found);
}

void SpatialIndex::rangeInTree(const StaticTree& tree, std::size_t node, const double* q, double limit,
                               std::vector<std::uint32_t>& out) const {
  if (boxLowerBound(tree, node, q) > limit) return;
  const KdNode& n = tree.nodes[node];
  if (n.left < 0) {
    std::array<double, kLeafSize> dist{};
    scan(tree.coords.data(), tree.count, n.begin, n.end - n.begin, q, dist.data());
    for (std::uint32_t i = n.begin; i < n.end; ++i) {
      if (state_[tree.ids[i]] == 1 && dist[i - n.begin] <= limit) out.push_back(tree.ids[i]);
    }
    return;
  }
  rangeInTree(tree, static_cast<std::size_t>(n.left), q, limit, out);
  rangeInTree(tree, static_cast<std::size_t>(n.right), q, limit, out);
}

std::optional<NearestHit> SpatialIndex::nearest(const State& q) const {
  if (q.size() != metric_.dim()) throw Error(ErrorKind::DimensionMismatch, "query dimension does not match the index");
  if (live_ == 0) return std::nullopt;
  std::array<double, State::kCapacity> c{};
  metric_.canonicalize(q, c.data());

  NearestHit best;
  bool found = false;
  if (!bufferIds_.empty()) {
    std::vector<double> dist(bufferIds_.size());
    scan(bufferCoords_.data(), bufferCapacity_, 0, bufferIds_.size(), c.data(), dist.data());
    for (std::size_t i = 0; i < bufferIds_.size(); ++i) {
      const std::uint32_t id = bufferIds_[i];
      if (state_[id] != 1) continue;
      if (!found || dist[i] < best.squaredDistance || (dist[i] == best.squaredDistance && id < best.id)) {
        best = {id, dist[i]};
        found = true;
      }
    }
  }
  for (const auto& t : levels_) {
    if (t && t->count > 0) nearestInTree(*t, 0, c.data(), best, found);
  }
  if (!found) return std::nullopt;
  return best;
}

std::vector<std::uint32_t> SpatialIndex::withinRadius(const State& q, double radius) const {
  if (q.size() != metric_.dim()) throw Error(ErrorKind::DimensionMismatch, "query dimension does not match the index");
  std::vector<std::uint32_t> out;
  if (live_ == 0 || radius < 0.0) return out;
  std::array<double, State::kCapacity> c{};
  metric_.canonicalize(q, c.data());
  const double limit = radius * radius;

  if (!bufferIds_.empty()) {
    std::vector<double> dist(bufferIds_.size());
    scan(bufferCoords_.data(), bufferCapacity_, 0, bufferIds_.size(), c.data(), dist.data());
    for (std::size_t i = 0; i < bufferIds_.size(); ++i) {
      if (state_[bufferIds_[i]] == 1 && dist[i] <= limit) out.push_back(bufferIds_[i]);
    }
  }
  for (const auto& t : levels_) {
    if (t && t->count > 0) rangeInTree(*t, 0, c.data(), limit, out);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ctrlplan
