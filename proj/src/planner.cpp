#include "ctrlplan/planner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace ctrlplan {

namespace {

ControlInput sampleControl(const DynamicsModel& model, Rng& rng) {
  const auto& bounds = model.controlBounds();
  ControlInput u(bounds.size());
  for (std::size_t i = 0; i < bounds.size(); ++i) u[i] = uniformIn(rng, bounds[i].lo, bounds[i].hi);
  return u;
}

std::optional<Expansion> extend(const PlanTree& tree, NodeId parent, const DynamicsModel& model,
                                const DtPolicy& dt, const IntegratorConfig& integrator, Rng& rng,
                                ExpandFailure* why) {
  Expansion e;
  e.parent = parent;
  e.control = sampleControl(model, rng);
  e.duration = dt.draw(rng);
  try {
    auto prop = propagate(model, tree.state(parent), e.control, e.duration, integrator);
    e.child = prop.terminal;
    e.edgePath = std::move(prop.path);
  } catch (const IntegrationBlowup&) {
    if (why) *why = ExpandFailure::Blowup;
    return std::nullopt;
  }
  return e;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void Problem::validate() const {
  if (!model) throw Error(ErrorKind::InvalidConfig, "problem has no dynamics model");
  workspace.validate();
  if (workspace.dim() != model->stateDim()) {
    throw Error(ErrorKind::DimensionMismatch, "workspace and model state dimensions differ");
  }
  if (metric.dim() != model->stateDim()) throw Error(ErrorKind::DimensionMismatch, "metric dimension");
  if (initial.size() != model->stateDim()) throw Error(ErrorKind::DimensionMismatch, "initial state dimension");
  if (!cost.runningCost) throw Error(ErrorKind::InvalidConfig, "problem has no running cost");
  if (!workspace.isFree(initial)) throw Error(ErrorKind::InvalidConfig, "initial state is not collision-free");
}

const char* toString(Strategy s) {
  return s == Strategy::Uniform ? "uniform" : "rrt";
}

Strategy strategyFromString(const std::string& name) {
  if (name == "uniform") return Strategy::Uniform;
  if (name == "rrt") return Strategy::Rrt;
  throw Error(ErrorKind::InvalidConfig, "unknown strategy '" + name + "'");
}

double DtPolicy::draw(Rng& rng) const {
  return kind == Kind::Constant ? value : uniformOpenClosed(rng, value);
}

void PlannerConfig::validate() const {
  if (!(dt.value > 0.0) || !std::isfinite(dt.value)) {
    throw Error(ErrorKind::InvalidConfig, "integration time (or its maximum) must be positive");
  }
  if (iterationBudget == 0 && !(wallClockBudget > 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "an iteration or wall-clock budget is required");
  }
  if (wallClockBudget < 0.0) throw Error(ErrorKind::InvalidConfig, "negative wall-clock budget");
  if (!(collisionResolution > 0.0)) throw Error(ErrorKind::InvalidConfig, "collision resolution must be positive");
  if (!(integrator.substep > 0.0)) throw Error(ErrorKind::InvalidConfig, "integrator substep must be positive");
  if (recordEvery == 0) throw Error(ErrorKind::InvalidConfig, "record cadence must be at least 1");
  if (rrtSampleRetries < 1) throw Error(ErrorKind::InvalidConfig, "RRT sample retries must be at least 1");
  radius.validate();
}

State sampleStateBounds(const Workspace& ws, Rng& rng) {
  State s(ws.dim());
  for (std::size_t d = 0; d < ws.dim(); ++d) {
    const Interval& b = ws.stateBounds[d];
    const double hi = ws.isAngular(d) ? std::min(b.hi, b.lo + kTwoPi) : b.hi;
    s[d] = uniformIn(rng, b.lo, hi);
  }
  return s;
}

std::optional<Expansion> expandUniform(const PlanTree& tree, const DynamicsModel& model, const DtPolicy& dt,
                                       const IntegratorConfig& integrator, Rng& rng, ExpandFailure* why) {
  const auto& live = tree.liveNodes();
  if (live.empty()) throw Error(ErrorKind::EmptyTree, "expansion on a tree without live nodes");
  const NodeId parent = live[uniformIndex(rng, live.size())];
  return extend(tree, parent, model, dt, integrator, rng, why);
}

std::optional<Expansion> expandRRT(const PlanTree& tree, const DynamicsModel& model, const Workspace& ws,
                                   const DtPolicy& dt, const IntegratorConfig& integrator, Rng& rng,
                                   int maxRetries, ExpandFailure* why) {
  if (tree.liveCount() == 0) throw Error(ErrorKind::EmptyTree, "expansion on a tree without live nodes");
  for (int attempt = 0; attempt < maxRetries; ++attempt) {
    const State sample = sampleStateBounds(ws, rng);
    if (ws.inObstacle(sample)) continue;
    return extend(tree, tree.nearest(sample), model, dt, integrator, rng, why);
  }
  if (why) *why = ExpandFailure::Sampling;
  return std::nullopt;
}

PlanResult plan(const Problem& problem, const PlannerConfig& cfg, const RecordSink& sink) {
  problem.validate();
  cfg.validate();

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&start] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  const DynamicsModel& model = *problem.model;
  const Workspace& ws = problem.workspace;
  PlanResult result{std::nullopt, std::nullopt, {}, PlanTree(model.stateDim(), model.controlDim(), problem.metric), {}};
  PlanTree& tree = result.tree;
  PlanStats& stats = result.stats;
  Rng rng(cfg.seed);
  // Edge paths feed the collision check, so they are always sampled.
  IntegratorConfig integ = cfg.integrator;
  integ.recordPath = true;

  const NodeId root = tree.addRoot(problem.initial);
  if (inGoal(problem.initial, ws)) {
    tree.markGoal(root);
    tree.setBest(root);
    stats.firstSolutionIteration = 0;
  }

  const std::uint64_t cap = cfg.totalIterationCap
                                ? cfg.totalIterationCap
                                : (cfg.iterationBudget ? 50 * cfg.iterationBudget
                                                       : std::numeric_limits<std::uint64_t>::max());
  std::uint64_t lastRecorded = std::numeric_limits<std::uint64_t>::max();
  auto emit = [&] {
    IterationRecord r;
    r.iteration = stats.validIterations;
    r.totalIterations = stats.totalIterations;
    r.bestCost = tree.bestCost();
    r.nodeCount = tree.liveCount();
    r.wallTime = cfg.recordWallTime ? elapsed() : 0.0;
    result.records.push_back(r);
    if (sink) sink(r);
    lastRecorded = stats.validIterations;
  };

  std::vector<NodeId> detached;
  while ((cfg.iterationBudget == 0 || stats.validIterations < cfg.iterationBudget) &&
         stats.totalIterations < cap) {
    if (cfg.wallClockBudget > 0.0 && elapsed() >= cfg.wallClockBudget) break;
    // Costs are non-negative, so nothing can beat a zero-cost solution.
    if (tree.bestCost() <= 0.0) break;
    ++stats.totalIterations;

    ExpandFailure why = ExpandFailure::None;
    const auto exp = cfg.strategy == Strategy::Uniform
                         ? expandUniform(tree, model, cfg.dt, integ, rng, &why)
                         : expandRRT(tree, model, ws, cfg.dt, integ, rng, cfg.rrtSampleRetries, &why);
    if (!exp) {
      ++(why == ExpandFailure::Sampling ? stats.samplingFailures : stats.blowups);
      continue;
    }
    if (!isCollisionFree(exp->edgePath, ws, cfg.collisionResolution)) {
      ++stats.collisions;
      continue;
    }
    ++stats.validIterations;

    ControlSequence edge;
    edge.steps.push_back({exp->control, exp->duration});
    const double edgeCost = pathCost(exp->edgePath, edge, problem.cost);
    // Same expression as PlanTree::insert, so the stored cost is the admitted one.
    const double cost = tree.costToCome(exp->parent) + edgeCost;

    bool admitted = cost < tree.bestCost();
    if (!admitted) ++stats.admissionRejects;
    if (admitted && cfg.pruning) {
      detached.clear();
      admitted = prune(tree, {exp->child, cost}, cfg.radius.at(stats.validIterations), &detached);
      if (!admitted) ++stats.pruneRejects;
      stats.prunedNodes += detached.size();
      for (NodeId n : detached) {
        if (tree.onBestPath(n)) ++stats.bestPathRemovals;
      }
    }
    if (admitted) {
      const NodeId id = tree.insert(exp->parent, exp->child, exp->control, exp->duration, edgeCost);
      ++stats.inserted;
      if (inGoal(exp->child, ws)) {
        tree.markGoal(id);
        tree.setBest(id);
        if (!stats.firstSolutionIteration) stats.firstSolutionIteration = stats.validIterations;
      }
    }
    if (stats.validIterations % cfg.recordEvery == 0) emit();
  }
  if (lastRecorded != stats.validIterations) emit();
  stats.wallTime = elapsed();

  result.bestNode = tree.bestNode();
  if (result.bestNode) {
    result.solution = reconstructSolution(tree, *result.bestNode, problem, integ);
  }
  return result;
}

TrajectorySolution reconstructSolution(const PlanTree& tree, NodeId node, const Problem& problem,
                                       const IntegratorConfig& integrator) {
  const auto chain = tree.chainTo(node);
  if (tree.parent(chain.front())) throw Error(ErrorKind::BrokenChain, "chain does not start at the root");
  TrajectorySolution sol;
  for (std::size_t i = 1; i < chain.size(); ++i) {
    const TreeNode n = tree.node(chain[i]);
    if (!n.parent || *n.parent != chain[i - 1]) throw Error(ErrorKind::BrokenChain, "inconsistent parent link");
    sol.controls.steps.push_back({*n.edgeControl, *n.edgeDuration});
  }
  IntegratorConfig cfg = integrator;
  cfg.recordPath = true;
  auto sim = simulateSequence(*problem.model, tree.state(chain.front()), sol.controls, cfg);
  const State stored = tree.state(node);
  for (std::size_t d = 0; d < stored.size(); ++d) {
    if (std::abs(sim.terminal[d] - stored[d]) > 1e-6 * std::max(1.0, std::abs(stored[d]))) {
      throw Error(ErrorKind::BrokenChain, "replayed state diverges from node " + std::to_string(node));
    }
  }
  sol.path = std::move(sim.path);
  sol.cost = pathCost(sol.path, sol.controls, problem.cost);
  sol.reachedGoal = inGoal(sim.terminal, problem.workspace);
  return sol;
}

void writeRecordHeader(std::ostream& out) {
  out << "iteration,total_iterations,best_cost,node_count,wall_time_s\n";
}

void writeRecord(std::ostream& out, const IterationRecord& r) {
  out << r.iteration << ',' << r.totalIterations << ',' << fmt(r.bestCost) << ',' << r.nodeCount << ','
      << fmt(r.wallTime) << '\n';
}

std::vector<IterationRecord> readRecords(std::istream& in) {
  std::vector<IterationRecord> out;
  std::string line;
  if (!std::getline(in, line) || line.rfind("iteration,", 0) != 0) {
    throw Error(ErrorKind::Io, "missing iteration record header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field[5];
    for (auto& f : field) {
      if (!std::getline(ss, f, ',')) throw Error(ErrorKind::Io, "short iteration record: " + line);
    }
    IterationRecord r;
    r.iteration = std::stoull(field[0]);
    r.totalIterations = std::stoull(field[1]);
    r.bestCost = std::stod(field[2]);
    r.nodeCount = std::stoull(field[3]);
    r.wallTime = std::stod(field[4]);
    out.push_back(r);
  }
  return out;
}

void writeTrajectory(std::ostream& controlsOut, std::ostream& pathOut, const TrajectorySolution& sol) {
  const std::size_t cdim = sol.controls.empty() ? 0 : sol.controls.steps[0].control.size();
  controlsOut << "# cost=" << fmt(sol.cost) << " reached_goal=" << (sol.reachedGoal ? 1 : 0) << '\n';
  controlsOut << "step,duration";
  for (std::size_t i = 0; i < cdim; ++i) controlsOut << ",u" << i;
  controlsOut << '\n';
  for (std::size_t k = 0; k < sol.controls.size(); ++k) {
    const auto& st = sol.controls.steps[k];
    controlsOut << k << ',' << fmt(st.duration);
    for (double u : st.control) controlsOut << ',' << fmt(u);
    controlsOut << '\n';
  }
  const std::size_t sdim = sol.path.empty() ? 0 : sol.path.states[0].size();
  pathOut << 't';
  for (std::size_t i = 0; i < sdim; ++i) pathOut << ",s" << i;
  pathOut << '\n';
  for (std::size_t k = 0; k < sol.path.size(); ++k) {
    pathOut << fmt(sol.path.times[k]);
    for (double v : sol.path.states[k]) pathOut << ',' << fmt(v);
    pathOut << '\n';
  }
}

}  // namespace ctrlplan
