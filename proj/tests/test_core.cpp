#include <doctest.h>

#include "helpers.hpp"

using namespace ctrlplan;
using testutil::cartPoleWorkspace;

namespace {

ControlSequence seq(std::initializer_list<std::initializer_list<double>> controls, double dt = 1.0) {
  ControlSequence s;
  for (auto c : controls) s.steps.push_back({ControlInput(c), dt});
  return s;
}

ControlSequence randomSeq(Rng& rng, std::size_t m) {
  ControlSequence s;
  const auto k = 1 + uniformIndex(rng, 5);
  for (std::size_t i = 0; i < k; ++i) {
    ControlInput u(m);
    for (std::size_t d = 0; d < m; ++d) u[d] = uniformIn(rng, -3, 3);
    s.steps.push_back({u, 1.0});
  }
  return s;
}

// Constant-state path with samples every `dt` seconds over `T`.
StatePath flatPath(double T, double dt, const State& s) {
  StatePath p;
  const auto n = static_cast<std::size_t>(std::llround(T / dt));
  for (std::size_t i = 0; i <= n; ++i) p.push(i * dt, s);
  return p;
}

}  // namespace

TEST_CASE("epsilonDistance examples") {
  const auto a = seq({{1.0}, {2.0}});
  CHECK(epsilonDistance(a, a) == 0.0);
  CHECK(epsilonDistance(a, seq({{1.0}})) == doctest::Approx(2.0));
  CHECK(epsilonDistance(seq({{0.3, 0.4}}), seq({{0.1, 0.1}})) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(epsilonDistance(seq({{1.0}}), seq({{1.0, 2.0}})), Error);
}

TEST_CASE("epsilonDistance is a pseudometric on random triples") {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const auto a = randomSeq(rng, 2), b = randomSeq(rng, 2), c = randomSeq(rng, 2);
    CHECK(epsilonDistance(a, b) == epsilonDistance(b, a));
    CHECK(epsilonDistance(a, c) <= epsilonDistance(a, b) + epsilonDistance(b, c) + 1e-12);
  }
}

TEST_CASE("inGoal on the cart-pole goal region") {
  const auto ws = cartPoleWorkspace();
  const double pi = std::numbers::pi;
  CHECK(inGoal(State{50, 0, pi, 0}, ws));
  CHECK_FALSE(inGoal(State{0, 0, 0, 0}, ws));
  CHECK(inGoal(State{50, 0, pi + kTwoPi, 0}, ws));
  CHECK_FALSE(inGoal(State{50, 5, pi, 0}, ws));

  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    State s = testutil::randomState(rng, {{46, 54}, {-5, 5}, {2.5, 3.8}, {-4, 4}});
    const bool base = inGoal(s, ws);
    const int k = static_cast<int>(uniformIndex(rng, 11)) - 5;
    s[2] += k * kTwoPi;
    CHECK(inGoal(s, ws) == base);
  }
}

TEST_CASE("isCollisionFree") {
  const auto ws = cartPoleWorkspace();
  SUBCASE("free straight path") {
    StatePath p;
    for (int i = 0; i <= 10; ++i) p.push(0.1 * i, State{1.0 + i, 0, 0, 0});
    CHECK(isCollisionFree(p, ws, 0.01));
  }
  SUBCASE("sample inside an obstacle") {
    StatePath p;
    p.push(0.0, State{10, 0, 0, 0});
    p.push(1.0, State{36, 0, 0, 0});
    p.push(2.0, State{40, 0, 0, 0});
    CHECK_FALSE(isCollisionFree(p, ws, 1.0));
  }
  SUBCASE("violation only between coarse samples") {
    // x(t) = 30 + 10 t crosses the box [34, 38] x [-0.6, 0.6] for t in [0.4, 0.8];
    // the recorded samples at t = 0 and t = 1 are both free.
    StatePath p;
    p.push(0.0, State{30, 0, 0, 0});
    p.push(1.0, State{40, 0, 0, 0});
    // Dense oracle on the analytic segment.
    bool oracleHit = false;
    for (int i = 0; i <= 100000; ++i) oracleHit |= ws.inObstacle(State{30 + 10 * i * 1e-5, 0, 0, 0});
    REQUIRE(oracleHit);
    CHECK(isCollisionFree(p, ws, 1.0));
    CHECK_FALSE(isCollisionFree(p, ws, 0.1));
  }
  SUBCASE("out of bounds") {
    StatePath p;
    p.push(0.0, State{59, 0, 0, 0});
    p.push(1.0, State{61, 0, 0, 0});
    CHECK_FALSE(isCollisionFree(p, ws, 0.5));
  }
  SUBCASE("empty path") { CHECK_THROWS_AS(isCollisionFree(StatePath{}, ws, 0.1), Error); }
}

TEST_CASE("isCollisionFree is monotone in resolution") {
  const auto ws = cartPoleWorkspace();
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    StatePath p;
    State s{uniformIn(rng, 10, 45), 0, uniformIn(rng, -3, 3), 0};
    p.push(0.0, s);
    for (int i = 1; i <= 3; ++i) {
      s[0] += uniformIn(rng, -4, 4);
      s[2] += uniformIn(rng, -1.5, 1.5);
      p.push(i, s);
    }
    bool seenFalse = false;
    for (double r : {2.0, 1.0, 0.5, 0.25, 0.1, 0.05, 0.01}) {
      const bool ok = isCollisionFree(p, ws, r);
      if (seenFalse) CHECK_FALSE(ok);
      seenFalse |= !ok;
    }
  }
}

TEST_CASE("pathCost examples") {
  const auto cf = quadraticEffortCost(1.0, 1000.0);
  const State s{0, 0, 0, 0};
  CHECK(pathCost(flatPath(1, 0.01, s), seq({{0.0}}), cf) == doctest::Approx(1000.0).epsilon(1e-12));
  CHECK(pathCost(flatPath(1, 0.01, s), seq({{100.0}}), cf) == doctest::Approx(11000.0).epsilon(1e-12));
  CHECK(pathCost(flatPath(2, 0.01, s), seq({{0.0}, {100.0}}), cf) == doctest::Approx(12000.0).epsilon(1e-12));
  CHECK_THROWS_AS(pathCost(flatPath(1, 0.01, s), seq({{0.0}, {1.0}}), cf), Error);
}

TEST_CASE("pathCost is additive over concatenation") {
  auto model = CartPoleModel{};
  const auto cf = quadraticEffortCost(1.0, 1000.0);
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    ControlSequence a, b;
    for (int i = 0; i < 3; ++i) a.steps.push_back({ControlInput{uniformIn(rng, 0, 300)}, uniformIn(rng, 0.1, 1.5)});
    for (int i = 0; i < 2; ++i) b.steps.push_back({ControlInput{uniformIn(rng, 0, 300)}, uniformIn(rng, 0.1, 1.5)});
    const auto simA = simulateSequence(model, State{0, 0, 0, 0}, a, {});
    const auto simB = simulateSequence(model, simA.terminal, b, {});
    ControlSequence ab = a;
    ab.steps.insert(ab.steps.end(), b.steps.begin(), b.steps.end());
    StatePath pab = simA.path;
    pab.append(simB.path);
    const double joint = pathCost(pab, ab, cf);
    const double split = pathCost(simA.path, a, cf) + pathCost(simB.path, b, cf);
    CHECK(std::abs(joint - split) <= 1e-9 * std::abs(joint));
  }
}
