#pragma once

#include <cmath>
#include <memory>

#include "ctrlplan/core.hpp"
#include "ctrlplan/dynamics.hpp"
#include "ctrlplan/planner.hpp"
#include "ctrlplan/random.hpp"

namespace testutil {

using namespace ctrlplan;

inline Workspace cartPoleWorkspace(bool obstacles = true) {
  Workspace ws;
  ws.stateBounds = {{0, 60}, {-20, 20}, {-std::numbers::pi, std::numbers::pi}, {-10, 10}};
  ws.angular = {false, false, true, false};
  ws.projection = {0, 2};
  if (obstacles) {
    ws.obstacles.push_back({{{18, 22}, {2.0, kTwoPi - 2.0}}});
    ws.obstacles.push_back({{{34, 38}, {-0.6, 0.6}}});
  }
  const double deg = std::numbers::pi / 180.0;
  ws.goal = {{48, 52}, {-4, 4}, {170 * deg, 190 * deg}, {-3.14, 3.14}};
  return ws;
}

inline Problem linearProblem(double a = 0.0) {
  Problem p;
  p.model = std::make_shared<LinearModel>(a, Interval{-1, 1});
  p.workspace.stateBounds = {{-2, 2}};
  p.workspace.angular = {false};
  p.workspace.projection = {0};
  p.workspace.goal = {{0.9, 1.1}};
  p.cost = quadraticEffortCost(1.0, 1.0);
  p.metric = StateMetric::euclidean(1);
  p.initial = State{0.0};
  return p;
}

inline Problem cartPoleProblem(bool obstacles = true, Interval force = {0, 300}) {
  Problem p;
  CartPoleParams cp;
  cp.force = force;
  p.model = std::make_shared<CartPoleModel>(cp);
  p.workspace = cartPoleWorkspace(obstacles);
  p.cost = quadraticEffortCost(1.0, 1000.0, 0, 600.0);
  p.metric = StateMetric({1, 0.5, 2.5, 0.5}, p.workspace.angular);
  p.initial = State{0, 0, 0, 0};
  return p;
}

inline State randomState(Rng& rng, const std::vector<Interval>& box) {
  State s(box.size());
  for (std::size_t d = 0; d < box.size(); ++d) s[d] = uniformIn(rng, box[d].lo, box[d].hi);
  return s;
}

inline double l1(const State& a, const State& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

}  // namespace testutil
