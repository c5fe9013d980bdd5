#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ctrlplan/core.hpp"
#include "ctrlplan/dynamics.hpp"
#include "ctrlplan/random.hpp"
#include "ctrlplan/spatial_index.hpp"
#include "ctrlplan/tree.hpp"

namespace ctrlplan {

// Everything that defines a planning instance, independent of the planner
// settings. Shared read-only between concurrent runs.
struct Problem {
  std::shared_ptr<const DynamicsModel> model;
  Workspace workspace;
  CostFunctional cost;
  StateMetric metric = StateMetric::euclidean(1);
  State initial;

  void validate() const;
};

enum class Strategy { Uniform, Rrt };

const char* toString(Strategy s);
Strategy strategyFromString(const std::string& name);

struct DtPolicy {
  enum class Kind { Constant, UniformSample };

  Kind kind = Kind::Constant;
  double value = 1.0;  // the constant duration, or tau_max

  static DtPolicy constant(double dt) { return {Kind::Constant, dt}; }
  static DtPolicy uniformSample(double tauMax) { return {Kind::UniformSample, tauMax}; }

  // Constant: no draw. UniformSample: one draw, uniform on (0, tau_max].
  double draw(Rng& rng) const;
};

struct PlannerConfig {
  Strategy strategy = Strategy::Uniform;
  bool pruning = false;
  DtPolicy dt = DtPolicy::constant(1.0);
  std::uint64_t iterationBudget = 0;  // valid iterations; 0 = unlimited
  double wallClockBudget = 0.0;       // seconds; 0 = unlimited
  // Hard stop on total iterations (valid + discarded); 0 = 50 x budget.
  std::uint64_t totalIterationCap = 0;
  std::uint64_t seed = 1;
  RadiusSchedule radius;
  double collisionResolution = 0.01;
  IntegratorConfig integrator;
  std::uint64_t recordEvery = 1;
  int rrtSampleRetries = 100;
  bool recordWallTime = true;

  // Throws InvalidConfig.
  void validate() const;
};

struct IterationRecord {
  std::uint64_t iteration = 0;        // valid (collision-free) iterations
  std::uint64_t totalIterations = 0;  // including discarded ones
  double bestCost = 0.0;
  std::size_t nodeCount = 0;          // live nodes
  double wallTime = 0.0;

  // Everything except wall time.
  bool sameProgress(const IterationRecord& o) const noexcept {
    return iteration == o.iteration && totalIterations == o.totalIterations && bestCost == o.bestCost &&
           nodeCount == o.nodeCount;
  }
};

struct TrajectorySolution {
  ControlSequence controls;
  StatePath path;
  double cost = 0.0;
  bool reachedGoal = false;
};

// One tree expansion: the candidate child and the edge that produces it.
struct Expansion {
  State child;
  NodeId parent = 0;
  StatePath edgePath;
  ControlInput control;
  double duration = 0.0;
};

enum class ExpandFailure { None, Blowup, Sampling };

// Uniform node choice, uniform control, duration from the policy. Draw
// order: node index, control coordinates, duration. Empty on blowup.
std::optional<Expansion> expandUniform(const PlanTree& tree, const DynamicsModel& model, const DtPolicy& dt,
                                       const IntegratorConfig& integrator, Rng& rng,
                                       ExpandFailure* why = nullptr);

// RRT-style choice: a state drawn uniformly from the free part of the
// state bounds (bounded resampling), then its nearest live node. Draw
// order: state coordinates (per attempt), control coordinates, duration.
// Empty on retry exhaustion or blowup.
std::optional<Expansion> expandRRT(const PlanTree& tree, const DynamicsModel& model, const Workspace& ws,
                                   const DtPolicy& dt, const IntegratorConfig& integrator, Rng& rng,
                                   int maxRetries, ExpandFailure* why = nullptr);

// Uniform draw from the state bounds. Angular dimensions span at most one turn.
State sampleStateBounds(const Workspace& ws, Rng& rng);

struct PlanStats {
  std::uint64_t validIterations = 0;
  std::uint64_t totalIterations = 0;
  std::uint64_t collisions = 0;
  std::uint64_t blowups = 0;
  std::uint64_t samplingFailures = 0;
  std::uint64_t admissionRejects = 0;
  std::uint64_t pruneRejects = 0;
  std::uint64_t inserted = 0;
  std::uint64_t prunedNodes = 0;
  std::uint64_t bestPathRemovals = 0;  // must stay 0
  std::optional<std::uint64_t> firstSolutionIteration;
  double wallTime = 0.0;
};

struct PlanResult {
  std::optional<TrajectorySolution> solution;
  std::optional<NodeId> bestNode;
  std::vector<IterationRecord> records;
  PlanTree tree;
  PlanStats stats;
};

using RecordSink = std::function<void(const IterationRecord&)>;

// The main loop. Every valid iteration optionally emits a record (every
// `recordEvery` valid iterations, and at the end); records also go to
// `sink` as they are produced.
PlanResult plan(const Problem& problem, const PlannerConfig& cfg, const RecordSink& sink = {});

// Replays the root-to-node controls. Throws BrokenChain when the replayed
// terminal state differs from the stored state by more than 1e-6.
TrajectorySolution reconstructSolution(const PlanTree& tree, NodeId node, const Problem& problem,
                                       const IntegratorConfig& integrator);

// CSV: iteration,total_iterations,best_cost,node_count,wall_time_s
void writeRecordHeader(std::ostream& out);
void writeRecord(std::ostream& out, const IterationRecord& r);
std::vector<IterationRecord> readRecords(std::istream& in);

// Trajectory record: "step,duration,u0,..." rows, then the sampled path in
// a second file "t,s0,...".
void writeTrajectory(std::ostream& controlsOut, std::ostream& pathOut, const TrajectorySolution& sol);

}  // namespace ctrlplan
