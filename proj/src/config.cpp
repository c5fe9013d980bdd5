#include "ctrlplan/config.hpp"

#include <fstream>
#include <sstream>

namespace ctrlplan {

namespace {

using nlohmann::json;

Interval interval(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorKind::InvalidConfig, "interval must be [lo, hi]: " + j.dump());
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<Interval> intervals(const json& j) {
  std::vector<Interval> out;
  for (const auto& e : j) out.push_back(interval(e));
  return out;
}

std::shared_ptr<const DynamicsModel> modelFromJson(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "cartpole") {
    CartPoleParams p;
    p.cartMass = j.value("cart_mass", p.cartMass);
    p.poleMass = j.value("pole_mass", p.poleMass);
    p.inertia = j.value("inertia", p.inertia);
    p.length = j.value("length", p.length);
    p.gravity = j.value("gravity", p.gravity);
    if (j.contains("force")) p.force = interval(j["force"]);
    p.lipschitz = j.value("lipschitz", p.lipschitz);
    return std::make_shared<CartPoleModel>(p);
  }
  if (type == "linear") {
    const double a = j.value("a", 0.0);
    const Interval u = j.contains("control") ? interval(j["control"]) : Interval{-1.0, 1.0};
    if (j.contains("lipschitz")) return std::make_shared<LinearModel>(a, u, j["lipschitz"].get<double>());
    return std::make_shared<LinearModel>(a, u);
  }
  throw Error(ErrorKind::InvalidConfig, "unknown model type '" + type + "'");
}

template <class F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, e.what());
  }
}

}  // namespace

Problem problemFromJson(const json& j) {
  return guarded([&] {
    Problem p;
    p.model = modelFromJson(j.at("model"));
    const auto& w = j.at("workspace");
    p.workspace.stateBounds = intervals(w.at("state_bounds"));
    p.workspace.angular = w.value("angular", std::vector<bool>(p.workspace.stateBounds.size(), false));
    p.workspace.projection = w.value("projection", std::vector<std::size_t>{});
    for (const auto& box : w.value("obstacles", json::array())) p.workspace.obstacles.push_back({intervals(box)});
    p.workspace.goal = intervals(w.at("goal"));

    const auto& c = j.value("cost", json::object());
    p.cost = quadraticEffortCost(c.value("effort_weight", 1.0), c.value("time_weight", 0.0),
                                 c.value("control_index", std::size_t{0}), c.value("lipschitz", 1.0));

    const std::size_t n = p.model->stateDim();
    const auto& m = j.value("metric", json::object());
    p.metric = StateMetric(m.value("weights", std::vector<double>(n, 1.0)), p.workspace.angular);
    p.initial = State(std::span<const double>(j.value("initial_state", std::vector<double>(n, 0.0))));
    p.validate();
    return p;
  });
}

PlannerConfig plannerConfigFromJson(const json& j, const PlannerConfig& defaults) {
  return guarded([&] {
    PlannerConfig c = defaults;
    if (j.contains("strategy")) c.strategy = strategyFromString(j["strategy"].get<std::string>());
    c.pruning = j.value("pruning", c.pruning);
    if (j.contains("dt")) {
      const auto& d = j["dt"];
      const std::string policy = d.value("policy", std::string("constant"));
      if (policy == "constant") {
        c.dt = DtPolicy::constant(d.value("value", 1.0));
      } else if (policy == "uniform") {
        c.dt = DtPolicy::uniformSample(d.value("max", 3.0));
      } else {
        throw Error(ErrorKind::InvalidConfig, "unknown dt policy '" + policy + "'");
      }
    }
    c.iterationBudget = j.value("iteration_budget", c.iterationBudget);
    c.wallClockBudget = j.value("wall_clock_budget", c.wallClockBudget);
    c.totalIterationCap = j.value("total_iteration_cap", c.totalIterationCap);
    c.seed = j.value("seed", c.seed);
    if (j.contains("radius")) {
      c.radius.initial = j["radius"].value("initial", c.radius.initial);
      c.radius.shrinkExponent = j["radius"].value("shrink_exponent", c.radius.shrinkExponent);
    }
    c.collisionResolution = j.value("collision_resolution", c.collisionResolution);
    c.integrator.substep = j.value("substep", c.integrator.substep);
    c.recordEvery = j.value("record_every", c.recordEvery);
    c.rrtSampleRetries = j.value("rrt_sample_retries", c.rrtSampleRetries);
    c.recordWallTime = j.value("record_wall_time", c.recordWallTime);
    c.validate();
    return c;
  });
}

json toJson(const PlannerConfig& c) {
  json dt = c.dt.kind == DtPolicy::Kind::Constant ? json{{"policy", "constant"}, {"value", c.dt.value}}
                                                   : json{{"policy", "uniform"}, {"max", c.dt.value}};
  return {{"strategy", toString(c.strategy)},
          {"pruning", c.pruning},
          {"dt", dt},
          {"iteration_budget", c.iterationBudget},
          {"wall_clock_budget", c.wallClockBudget},
          {"total_iteration_cap", c.totalIterationCap},
          {"seed", c.seed},
          {"radius", {{"initial", c.radius.initial}, {"shrink_exponent", c.radius.shrinkExponent}}},
          {"collision_resolution", c.collisionResolution},
          {"substep", c.integrator.substep},
          {"record_every", c.recordEvery},
          {"rrt_sample_retries", c.rrtSampleRetries},
          {"record_wall_time", c.recordWallTime}};
}

json loadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return guarded([&] { return json::parse(ss.str()); });
}

}  // namespace ctrlplan
