#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "ctrlplan/spatial_index.hpp"

using namespace ctrlplan;

namespace {

struct Brute {
  StateMetric metric;
  std::vector<std::pair<std::uint32_t, State>> points;

  std::optional<NearestHit> nearest(const State& q) const {
    std::optional<NearestHit> best;
    for (const auto& [id, s] : points) {
      const double d = metric.squaredDistance(q, s);
      if (!best || d < best->squaredDistance || (d == best->squaredDistance && id < best->id)) best = NearestHit{id, d};
    }
    return best;
  }

  std::vector<std::uint32_t> within(const State& q, double r) const {
    std::vector<std::uint32_t> out;
    for (const auto& [id, s] : points) {
      if (metric.squaredDistance(q, s) <= r * r) out.push_back(id);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  void erase(std::uint32_t id) {
    std::erase_if(points, [id](const auto& p) { return p.first == id; });
  }
};

const std::vector<Interval> kBox{{0, 60}, {-20, 20}, {-7, 7}, {-10, 10}};

}  // namespace

TEST_CASE("single-node and two-node queries") {
  SpatialIndex idx(StateMetric::euclidean(2));
  CHECK_FALSE(idx.nearest(State{0, 0}).has_value());
  idx.insert(4, State{1, 1});
  CHECK(idx.nearest(State{100, -3})->id == 4);
  idx.insert(9, State{0, 10});
  CHECK(idx.nearest(State{0, 0})->id == 4);
  CHECK(idx.withinRadius(State{1, 1}, 0.5) == std::vector<std::uint32_t>{4});
  CHECK(idx.withinRadius(State{0, 5}, 100).size() == 2);
}

TEST_CASE("nearest ties resolve to the lowest id") {
  SpatialIndex idx(StateMetric::euclidean(1));
  idx.insert(7, State{1.0});
  idx.insert(3, State{-1.0});
  idx.insert(5, State{1.0});
  CHECK(idx.nearest(State{0.0})->id == 3);
}

TEST_CASE("duplicate and re-inserted ids are rejected") {
  SpatialIndex idx(StateMetric::euclidean(1));
  idx.insert(0, State{0.0});
  CHECK_THROWS(idx.insert(0, State{1.0}));
  idx.remove(0);
  CHECK_THROWS(idx.insert(0, State{1.0}));
  CHECK(idx.empty());
}

TEST_CASE("index agrees with brute force under inserts and removals") {
  const StateMetric metric({1, 0.5, 2.5, 0.5}, {false, false, true, false});
  Rng rng(31);
  for (std::size_t buffer : {1u, 4u, 32u}) {
    SpatialIndex idx(metric, buffer);
    Brute brute{metric, {}};
    std::uint32_t next = 0;
    for (int step = 0; step < 3000; ++step) {
      const auto op = uniformIndex(rng, 10);
      if (op < 7 || brute.points.empty()) {
        const State s = testutil::randomState(rng, kBox);
        idx.insert(next, s);
        brute.points.emplace_back(next, s);
        ++next;
      } else {
        const auto victim = brute.points[uniformIndex(rng, brute.points.size())].first;
        idx.remove(victim);
        brute.erase(victim);
      }
      REQUIRE(idx.size() == brute.points.size());
      if (step % 10 == 0) {
        const State q = testutil::randomState(rng, kBox);
        const auto a = idx.nearest(q), b = brute.nearest(q);
        REQUIRE(a.has_value() == b.has_value());
        if (a) {
          CHECK(a->id == b->id);
          CHECK(a->squaredDistance == b->squaredDistance);
        }
        const double r = uniformIn(rng, 0.5, 15);
        CHECK(idx.withinRadius(q, r) == brute.within(q, r));
      }
    }
  }
}

TEST_CASE("angular wrap is honored by the index") {
  const StateMetric metric({1, 1}, {false, true});
  SpatialIndex idx(metric);
  idx.insert(0, State{0, 3.1});
  idx.insert(1, State{0, 0.0});
  CHECK(idx.nearest(State{0, -3.1})->id == 0);
  CHECK(idx.nearest(State{0, 3.1 + kTwoPi})->id == 0);
  CHECK(idx.withinRadius(State{0, -3.1}, 0.1) == std::vector<std::uint32_t>{0});
}
