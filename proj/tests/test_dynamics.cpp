#include <doctest.h>

#include <cstring>

#include "helpers.hpp"

using namespace ctrlplan;
using testutil::l1;

namespace {

double maxAbsDiff(const State& a, const State& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

IntegratorConfig fine() { return {1e-4, false}; }

}  // namespace

TEST_CASE("cart-pole hanging equilibrium is a fixed point") {
  CartPoleModel cp;
  const auto d = cp.derivative(State{0, 0, 0, 0}, ControlInput{0.0}, 0.0);
  for (double v : d) CHECK(v == 0.0);
  for (double T : {0.3, 1.0, 7.5}) {
    const auto r = propagate(cp, State{0, 0, 0, 0}, ControlInput{0.0}, T, {});
    for (double v : r.terminal) CHECK(v == 0.0);
  }
}

TEST_CASE("linear flow x_dot = u") {
  LinearModel m(0.0, {-1, 1});
  const auto r = propagate(m, State{0.0}, ControlInput{1.0}, 1.0, {});
  CHECK(r.terminal[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.path.times.front() == 0.0);
  CHECK(r.path.times.back() == 1.0);
}

TEST_CASE("linear flow x_dot = x + u matches the closed form") {
  LinearModel m(1.0, {-1, 1});
  const auto r = propagate(m, State{0.5}, ControlInput{-0.25}, 2.0, {});
  const double exact = std::exp(2.0) * 0.5 + (-0.25) * (std::exp(2.0) - 1.0);
  CHECK(r.terminal[0] == doctest::Approx(exact).epsilon(1e-9));
}

TEST_CASE("cart-pole full force for 1 s matches a refined-step oracle") {
  CartPoleModel cp;
  const auto coarse = propagate(cp, State{0, 0, 0, 0}, ControlInput{300.0}, 1.0, {});
  const auto oracle = propagate(cp, State{0, 0, 0, 0}, ControlInput{300.0}, 1.0, fine());
  CHECK(maxAbsDiff(coarse.terminal, oracle.terminal) <= 1e-4);
  // Sanity: the cart moved forward and the pole swung back.
  CHECK(oracle.terminal[0] > 0.0);
}

TEST_CASE("RK4 is fourth order on the cart-pole") {
  CartPoleModel cp;
  const State x0{5, 1, 0.3, -0.5};
  const auto oracle = propagate(cp, x0, ControlInput{150.0}, 1.0, fine());
  const auto e1 = maxAbsDiff(propagate(cp, x0, ControlInput{150.0}, 1.0, {0.1, false}).terminal, oracle.terminal);
  const auto e2 = maxAbsDiff(propagate(cp, x0, ControlInput{150.0}, 1.0, {0.05, false}).terminal, oracle.terminal);
  const double ratio = e1 / e2;
  MESSAGE("error ratio per halving: " << ratio);
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("propagation is bitwise deterministic") {
  CartPoleModel cp;
  const auto a = propagate(cp, State{1, 2, 3, 4}, ControlInput{123.0}, 1.37, {});
  const auto b = propagate(cp, State{1, 2, 3, 4}, ControlInput{123.0}, 1.37, {});
  REQUIRE(a.path.size() == b.path.size());
  CHECK(std::memcmp(a.terminal.data(), b.terminal.data(), 4 * sizeof(double)) == 0);
  for (std::size_t i = 0; i < a.path.size(); ++i) CHECK(a.path.states[i] == b.path.states[i]);
}

TEST_CASE("blowup carries the last finite state") {
  LinearModel m(1000.0, {-1, 1});
  try {
    propagate(m, State{1.0}, ControlInput{0.0}, 10.0, {});
    FAIL("expected a blowup");
  } catch (const IntegrationBlowup& e) {
    CHECK(e.lastFiniteState().allFinite());
    CHECK(e.time() > 0.0);
  }
}

TEST_CASE("simulateSequence") {
  CartPoleModel cp;
  const State x0{0, 0, 0, 0};
  SUBCASE("single step equals propagate") {
    ControlSequence s;
    s.steps.push_back({ControlInput{80.0}, 0.7});
    const auto sim = simulateSequence(cp, x0, s, {});
    const auto pr = propagate(cp, x0, ControlInput{80.0}, 0.7, {});
    CHECK(sim.terminal == pr.terminal);
    CHECK(sim.path.size() == pr.path.size());
  }
  SUBCASE("two steps (u,T)(u,T) equal one step (u,2T)") {
    ControlSequence two, one;
    two.steps = {{ControlInput{200.0}, 1.0}, {ControlInput{200.0}, 1.0}};
    one.steps = {{ControlInput{200.0}, 2.0}};
    const auto a = simulateSequence(cp, x0, two, {});
    const auto b = simulateSequence(cp, x0, one, {});
    CHECK(maxAbsDiff(a.terminal, b.terminal) <= 1e-9);
    CHECK(a.path.times.back() == doctest::Approx(2.0));
  }
  SUBCASE("random 5-step sequences against the refined oracle") {
    Rng rng(19);
    for (int trial = 0; trial < 10; ++trial) {
      ControlSequence s;
      for (int i = 0; i < 5; ++i) s.steps.push_back({ControlInput{uniformIn(rng, 0, 300)}, uniformIn(rng, 0.2, 1.0)});
      const auto a = simulateSequence(cp, x0, s, {});
      const auto b = simulateSequence(cp, x0, s, fine());
      CHECK(maxAbsDiff(a.terminal, b.terminal) <= 1e-4);
      CHECK(a.path.times.back() == doctest::Approx(s.totalDuration()).epsilon(1e-12));
    }
  }
}

TEST_CASE("stepFunctionApprox samples left endpoints") {
  const auto constant = stepFunctionApprox([](double) { return ControlInput{2.5}; }, 2.0, 0.5);
  REQUIRE(constant.size() == 4);
  for (const auto& st : constant.steps) {
    CHECK(st.control[0] == 2.5);
    CHECK(st.duration == 0.5);
  }

  const auto ramp = stepFunctionApprox([](double t) { return ControlInput{t}; }, 1.0, 0.25);
  REQUIRE(ramp.size() == 4);
  const double expect[] = {0.0, 0.25, 0.5, 0.75};
  for (int i = 0; i < 4; ++i) CHECK(ramp.steps[i].control[0] == doctest::Approx(expect[i]));

  const double pi = std::numbers::pi;
  const auto sine = stepFunctionApprox([](double t) { return ControlInput{std::sin(t)}; }, pi, pi / 4);
  REQUIRE(sine.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(sine.steps[i].control[0] == doctest::Approx(std::sin(i * pi / 4)).epsilon(1e-14));
}

TEST_CASE("declared cart-pole Lipschitz constant passes a random spot check") {
  CartPoleModel cp;
  const double L = cp.lipschitzConstant();
  const std::vector<Interval> box{{0, 60}, {-20, 20}, {-std::numbers::pi, std::numbers::pi}, {-10, 10}};
  Rng rng(2024);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const State a = testutil::randomState(rng, box);
    const double ua = uniformIn(rng, 0, 300);
    State b;
    double ub;
    if (i % 2 == 0) {
      b = testutil::randomState(rng, box);
      ub = uniformIn(rng, 0, 300);
    } else {
      // Close pairs probe the local constant.
      b = a;
      for (std::size_t d = 0; d < 4; ++d) b[d] += uniformIn(rng, -1e-3, 1e-3);
      ub = std::clamp(ua + uniformIn(rng, -1e-3, 1e-3), 0.0, 300.0);
    }
    const double lhs = l1(cp.derivative(a, ControlInput{ua}, 0), cp.derivative(b, ControlInput{ub}, 0));
    const double rhs = l1(a, b) + std::abs(ua - ub);
    worst = std::max(worst, lhs / rhs);
    CHECK(lhs <= L * rhs);
  }
  MESSAGE("largest observed ratio: " << worst);
}

TEST_CASE("estimateLipschitz stays below the declared constant") {
  CartPoleModel cp;
  const std::vector<Interval> box{{0, 60}, {-20, 20}, {-std::numbers::pi, std::numbers::pi}, {-10, 10}};
  const double est = estimateLipschitz(cp, box, 20000, 9);
  CHECK(est > 100.0);
  CHECK(est <= cp.lipschitzConstant());
  LinearModel lin(1.0, {-1, 1});
  CHECK(estimateLipschitz(lin, {{-5, 5}}, 100, 1) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("unforced cart-pole conserves energy") {
  CartPoleModel cp;
  State s{10, 1.5, 2.0, 0.8};
  const double e0 = cp.mechanicalEnergy(s);
  const auto r = propagate(cp, s, ControlInput{0.0}, 10.0, {});
  const double drift = std::abs(cp.mechanicalEnergy(r.terminal) - e0) / std::abs(e0);
  MESSAGE("relative energy drift over 10 s: " << drift);
  CHECK(drift < 1e-3);
}

TEST_CASE("cart-pole generalized momentum grows by the applied impulse") {
  // p = (M+m) v + m L cos(theta) Omega has p_dot = F.
  CartPoleModel cp;
  const auto& P = cp.params();
  auto momentum = [&](const State& s) {
    return (P.cartMass + P.poleMass) * s[1] + P.poleMass * P.length * std::cos(s[2]) * s[3];
  };
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const State s{uniformIn(rng, 0, 60), uniformIn(rng, -5, 5), uniformIn(rng, -3, 3), uniformIn(rng, -3, 3)};
    const double F = uniformIn(rng, 0, 300), T = uniformIn(rng, 0.1, 2);
    const auto r = propagate(cp, s, ControlInput{F}, T, {});
    CHECK(momentum(r.terminal) - momentum(s) == doctest::Approx(F * T).epsilon(1e-6));
  }
}
