#include "ctrlplan/core.hpp"

#include <cmath>
#include <limits>

namespace ctrlplan {

const char* toString(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::EmptyPath: return "empty path";
    case ErrorKind::DurationMismatch: return "duration mismatch";
    case ErrorKind::IntegrationBlowup: return "integration blowup";
    case ErrorKind::UnknownNode: return "unknown node";
    case ErrorKind::EmptyTree: return "empty tree";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::BrokenChain: return "broken chain";
    case ErrorKind::InvalidConfig: return "invalid config";
    case ErrorKind::Io: return "io error";
  }
  return "error";
}

bool intervalContains(const Interval& iv, double v, bool angular) noexcept {
  if (!angular) return iv.contains(v);
  if (iv.width() >= kTwoPi) return true;
  // Smallest representative of v that is >= lo.
  double shifted = iv.lo + std::fmod(v - iv.lo, kTwoPi);
  if (shifted < iv.lo) shifted += kTwoPi;
  return shifted <= iv.hi;
}

double ControlSequence::totalDuration() const noexcept {
  double total = 0.0;
  for (const auto& step : steps) total += step.duration;
  return total;
}

void StatePath::append(const StatePath& tail) {
  if (tail.empty()) return;
  if (empty()) {
    *this = tail;
    return;
  }
  const double offset = times.back() - tail.times.front();
  for (std::size_t i = 1; i < tail.size(); ++i) push(tail.times[i] + offset, tail.states[i]);
}

bool Workspace::inBounds(const State& s) const noexcept {
  for (std::size_t d = 0; d < stateBounds.size() && d < s.size(); ++d) {
    if (!intervalContains(stateBounds[d], s[d], isAngular(d))) return false;
  }
  return true;
}

bool Workspace::inObstacle(const State& s) const noexcept {
  for (const auto& box : obstacles) {
    bool inside = true;
    for (std::size_t p = 0; p < projection.size() && inside; ++p) {
      const std::size_t d = projection[p];
      inside = intervalContains(box.extent[p], s[d], isAngular(d));
    }
    if (inside) return true;
  }
  return false;
}

void Workspace::validate() const {
  const std::size_t n = stateBounds.size();
  if (n == 0) throw Error(ErrorKind::InvalidConfig, "workspace has no state bounds");
  if (goal.size() != n) throw Error(ErrorKind::InvalidConfig, "goal dimension differs from state bounds");
  if (!angular.empty() && angular.size() != n) {
    throw Error(ErrorKind::InvalidConfig, "angular flags dimension differs from state bounds");
  }
  for (std::size_t d = 0; d < n; ++d) {
    const auto& b = stateBounds[d];
    const auto& g = goal[d];
    if (!(b.lo <= b.hi)) throw Error(ErrorKind::InvalidConfig, "empty state bound interval");
    if (!(g.lo <= g.hi)) throw Error(ErrorKind::InvalidConfig, "empty goal interval");
    if (!isAngular(d) && (g.hi < b.lo || g.lo > b.hi)) {
      throw Error(ErrorKind::InvalidConfig, "goal interval does not intersect state bounds");
    }
  }
  for (std::size_t p : projection) {
    if (p >= n) throw Error(ErrorKind::InvalidConfig, "projection dimension out of range");
  }
  for (const auto& box : obstacles) {
    if (box.extent.size() != projection.size()) {
      throw Error(ErrorKind::InvalidConfig, "obstacle extent does not match projection");
    }
    for (std::size_t p = 0; p < projection.size(); ++p) {
      const auto& e = box.extent[p];
      const auto& b = stateBounds[projection[p]];
      if (!(e.lo <= e.hi)) throw Error(ErrorKind::InvalidConfig, "empty obstacle interval");
      if (!isAngular(projection[p]) && (e.lo < b.lo || e.hi > b.hi)) {
        throw Error(ErrorKind::InvalidConfig, "obstacle lies outside state bounds");
      }
    }
  }
}

CostFunctional quadraticEffortCost(double effortWeight, double timeWeight, std::size_t controlIndex,
                                   double lipschitz) {
  CostFunctional cf;
  cf.runningCost = [effortWeight, timeWeight, controlIndex](const State&, const ControlInput& u) {
    const double f = u[controlIndex];
    return effortWeight * f * f + timeWeight;
  };
  cf.lipschitz = lipschitz;
  return cf;
}

double epsilonDistance(const ControlSequence& a, const ControlSequence& b) {
  std::size_t dim = 0;
  for (const auto* seq : {&a, &b}) {
    for (const auto& step : seq->steps) {
      if (dim == 0) dim = step.control.size();
      if (step.control.size() != dim) {
        throw Error(ErrorKind::DimensionMismatch, "control sequences mix control dimensions");
      }
    }
  }
  double worst = 0.0;
  const std::size_t len = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < len; ++i) {
    double gap = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double ua = i < a.size() ? a.steps[i].control[d] : 0.0;
      const double ub = i < b.size() ? b.steps[i].control[d] : 0.0;
      gap += std::abs(ua - ub);
    }
    worst = std::max(worst, gap);
  }
  return worst;
}

bool isCollisionFree(const StatePath& path, const Workspace& ws, double resolution) {
  if (path.empty()) throw Error(ErrorKind::EmptyPath, "collision check on an empty path");
  if (!(resolution > 0.0)) throw Error(ErrorKind::InvalidArgument, "collision resolution must be positive");

  if (!ws.isFree(path.states.front())) return false;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const State& a = path.states[i - 1];
    const State& b = path.states[i];
    const double dt = path.times[i] - path.times[i - 1];
    // Dyadic subdivision keeps finer resolutions a superset of coarser ones.
    std::size_t parts = 1;
    while (dt / static_cast<double>(parts) > resolution) parts *= 2;
    State s = a;
    for (std::size_t p = 1; p < parts; ++p) {
      const double w = static_cast<double>(p) / static_cast<double>(parts);
      for (std::size_t d = 0; d < a.size(); ++d) s[d] = a[d] + w * (b[d] - a[d]);
      if (!ws.isFree(s)) return false;
    }
    if (!ws.isFree(b)) return false;
  }
  return true;
}

bool inGoal(const State& s, const Workspace& ws) {
  for (std::size_t d = 0; d < ws.goal.size() && d < s.size(); ++d) {
    if (!intervalContains(ws.goal[d], s[d], ws.isAngular(d))) return false;
  }
  return true;
}

double pathCost(const StatePath& path, const ControlSequence& controls, const CostFunctional& cf) {
  const double total = controls.totalDuration();
  const double duration = path.duration();
  if (std::abs(total - duration) > 1e-9 * std::max(1.0, total)) {
    throw Error(ErrorKind::DurationMismatch, "path duration " + std::to_string(duration) +
                                                 " differs from control duration " +
                                                 std::to_string(total));
  }
  if (path.size() < 2 || controls.empty()) return 0.0;

  const double t0 = path.times.front();
  double cost = 0.0;
  std::size_t step = 0;
  double stepEnd = controls.steps[0].duration;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double mid = 0.5 * (path.times[i - 1] + path.times[i]) - t0;
    while (mid > stepEnd && step + 1 < controls.size()) {
      ++step;
      stepEnd += controls.steps[step].duration;
    }
    const ControlInput& u = controls.steps[step].control;
    const double h = path.times[i] - path.times[i - 1];
    cost += 0.5 * h * (cf.runningCost(path.states[i - 1], u) + cf.runningCost(path.states[i], u));
  }
  return cost;
}

}  // namespace ctrlplan
