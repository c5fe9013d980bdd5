#pragma once

// Domain types shared by every planner component: states, controls,
// control sequences, sampled state paths, workspaces and cost functionals.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctrlplan {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  EmptyPath,
  DurationMismatch,
  IntegrationBlowup,
  UnknownNode,
  EmptyTree,
  Domain,
  BrokenChain,
  InvalidConfig,
  Io,
};

const char* toString(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(toString(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Small inline real vector. Dimensions above kCapacity are rejected; the
// models handled here are at most 8-dimensional.
template <class Tag>
class FixedVector {
 public:
  static constexpr std::size_t kCapacity = 8;

  FixedVector() = default;

  explicit FixedVector(std::size_t n, double fill = 0.0) : size_(checked(n)) {
    std::fill_n(data_.begin(), size_, fill);
  }

  FixedVector(std::initializer_list<double> values) : size_(checked(values.size())) {
    std::copy(values.begin(), values.end(), data_.begin());
  }

  explicit FixedVector(std::span<const double> values) : size_(checked(values.size())) {
    std::copy(values.begin(), values.end(), data_.begin());
  }

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  double* begin() noexcept { return data_.data(); }
  double* end() noexcept { return data_.data() + size_; }
  const double* begin() const noexcept { return data_.data(); }
  const double* end() const noexcept { return data_.data() + size_; }

  std::span<const double> span() const noexcept { return {data_.data(), size_}; }

  bool allFinite() const noexcept {
    return std::all_of(begin(), end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const FixedVector& a, const FixedVector& b) noexcept {
    return a.size_ == b.size_ && std::equal(a.begin(), a.end(), b.begin());
  }

 private:
  static std::size_t checked(std::size_t n) {
    if (n > kCapacity) {
      throw Error(ErrorKind::DimensionMismatch,
                  "vector dimension " + std::to_string(n) + " exceeds capacity");
    }
    return n;
  }

  std::array<double, kCapacity> data_{};
  std::size_t size_ = 0;
};

struct StateTag {};
struct ControlTag {};

using State = FixedVector<StateTag>;
using ControlInput = FixedVector<ControlTag>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
  double width() const noexcept { return hi - lo; }
};

// Maps an angle onto [-pi, pi] (ties resolve through nearbyint).
inline double wrapAngle(double v) noexcept {
  return v - kTwoPi * std::nearbyint(v / kTwoPi);
}

// Interval membership, modulo 2*pi when `angular` is set.
bool intervalContains(const Interval& iv, double v, bool angular) noexcept;

struct ControlStep {
  ControlInput control;
  double duration = 0.0;
};

struct ControlSequence {
  std::vector<ControlStep> steps;

  std::size_t size() const noexcept { return steps.size(); }
  bool empty() const noexcept { return steps.empty(); }
  double totalDuration() const noexcept;
};

// Time-sampled state path. Times are strictly increasing and start at 0.
struct StatePath {
  std::vector<double> times;
  std::vector<State> states;

  std::size_t size() const noexcept { return times.size(); }
  bool empty() const noexcept { return times.empty(); }
  double duration() const noexcept { return times.empty() ? 0.0 : times.back() - times.front(); }

  void push(double t, const State& s) {
    times.push_back(t);
    states.push_back(s);
  }

  // Appends `tail` shifted so its first sample coincides with our last one;
  // the duplicated junction sample is dropped.
  void append(const StatePath& tail);
};

// Axis-aligned box in the workspace projection.
struct ObstacleBox {
  std::vector<Interval> extent;  // one interval per projection dimension
};

struct Workspace {
  std::vector<Interval> stateBounds;
  std::vector<bool> angular;            // per state dimension
  std::vector<std::size_t> projection;  // state dims the obstacle boxes live in
  std::vector<ObstacleBox> obstacles;
  std::vector<Interval> goal;

  std::size_t dim() const noexcept { return stateBounds.size(); }

  bool isAngular(std::size_t d) const noexcept { return d < angular.size() && angular[d]; }

  bool inBounds(const State& s) const noexcept;
  bool inObstacle(const State& s) const noexcept;
  bool isFree(const State& s) const noexcept { return inBounds(s) && !inObstacle(s); }

  // Throws InvalidConfig when the invariants do not hold.
  void validate() const;
};

struct CostFunctional {
  std::function<double(const State&, const ControlInput&)> runningCost;
  double lipschitz = 1.0;
};

// a_f * u[index]^2 + a_t, the control-effort plus time cost.
CostFunctional quadraticEffortCost(double effortWeight, double timeWeight,
                                   std::size_t controlIndex = 0, double lipschitz = 1.0);

// Definition of epsilon-closeness: max over padded steps of the L1 control gap.
double epsilonDistance(const ControlSequence& a, const ControlSequence& b);

// Sampled collision check. Every recorded sample is tested, and each segment
// is subdivided by linear interpolation so consecutive checks are at most
// `resolution` seconds apart.
bool isCollisionFree(const StatePath& path, const Workspace& ws, double resolution);

bool inGoal(const State& s, const Workspace& ws);

// Time integral of the running cost. Each path interval [t_i, t_{i+1}] is
// integrated with the trapezoid rule using the control active on it, so the
// result is additive over concatenation at step boundaries.
double pathCost(const StatePath& path, const ControlSequence& controls, const CostFunctional& cf);

}  // namespace ctrlplan
