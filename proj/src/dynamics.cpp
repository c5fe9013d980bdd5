#include "ctrlplan/dynamics.hpp"

#include <cmath>

#include "ctrlplan/random.hpp"

namespace ctrlplan {

bool DynamicsModel::controlInBounds(const ControlInput& u) const {
  const auto& bounds = controlBounds();
  if (u.size() != bounds.size()) return false;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!bounds[i].contains(u[i])) return false;
  }
  return true;
}

CartPoleModel::CartPoleModel(CartPoleParams params) : params_(params), bounds_{params.force} {
  const double mL = params_.poleMass * params_.length;
  const double minDenominator = (params_.cartMass + params_.poleMass) *
                                    (params_.inertia + params_.poleMass * params_.length * params_.length) -
                                mL * mL;
  if (!(minDenominator > 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "cart-pole parameters give a singular mass matrix");
  }
}

State CartPoleModel::derivative(const State& s, const ControlInput& u, double) const {
  const double M = params_.cartMass;
  const double m = params_.poleMass;
  const double I = params_.inertia;
  const double L = params_.length;
  const double g = params_.gravity;

  const double v = s[1];
  const double theta = s[2];
  const double omega = s[3];
  const double force = u[0];

  const double sinT = std::sin(theta);
  const double cosT = std::cos(theta);
  const double mL = m * L;
  const double inertiaPivot = I + m * L * L;
  const double denom = (M + m) * inertiaPivot - mL * mL * cosT * cosT;
  const double drive = force + mL * omega * omega * sinT;

  State d(4);
  d[0] = v;
  d[1] = (inertiaPivot * drive + mL * mL * cosT * sinT * g) / denom;
  d[2] = omega;
  d[3] = (-mL * cosT * drive + (M + m) * (-m * g * L * sinT)) / denom;
  return d;
}

double CartPoleModel::mechanicalEnergy(const State& s) const {
  const double M = params_.cartMass;
  const double m = params_.poleMass;
  const double L = params_.length;
  const double v = s[1];
  const double omega = s[3];
  const double kinetic = 0.5 * (M + m) * v * v + m * L * v * omega * std::cos(s[2]) +
                         0.5 * (params_.inertia + m * L * L) * omega * omega;
  const double potential = m * params_.gravity * L * (1.0 - std::cos(s[2]));
  return kinetic + potential;
}

LinearModel::LinearModel(double a, Interval control, double declaredLipschitz)
    : a_(a), bounds_{control}, lipschitz_(declaredLipschitz) {
  if (!(declaredLipschitz > 0.0)) throw Error(ErrorKind::InvalidConfig, "Lipschitz constant must be positive");
}

LinearModel::LinearModel(double a, Interval control) : LinearModel(a, control, std::max(std::abs(a), 1.0)) {}

State LinearModel::derivative(const State& s, const ControlInput& u, double) const {
  return State{a_ * s[0] + u[0]};
}

namespace {

// One classic RK4 step with the control supplied per stage time.
template <class ControlAt>
State rk4Step(const DynamicsModel& model, const State& s, double t, double h, ControlAt&& controlAt) {
  const std::size_t n = s.size();
  const ControlInput u0 = controlAt(t);
  const ControlInput uMid = controlAt(t + 0.5 * h);
  const ControlInput u1 = controlAt(t + h);

  const State k1 = model.derivative(s, u0, t);
  State tmp(n);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = s[i] + 0.5 * h * k1[i];
  const State k2 = model.derivative(tmp, uMid, t + 0.5 * h);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = s[i] + 0.5 * h * k2[i];
  const State k3 = model.derivative(tmp, uMid, t + 0.5 * h);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = s[i] + h * k3[i];
  const State k4 = model.derivative(tmp, u1, t + h);

  State next(n);
  for (std::size_t i = 0; i < n; ++i) {
    next[i] = s[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return next;
}

std::size_t stepCount(double duration, double substep) {
  const double ratio = duration / substep;
  // Tolerate ratios that are an integer up to rounding.
  const double n = std::ceil(ratio - 1e-9);
  return n < 1.0 ? 1 : static_cast<std::size_t>(n);
}

template <class ControlAt>
Simulation integrate(const DynamicsModel& model, const State& from, double duration,
                     const IntegratorConfig& cfg, double startTime, ControlAt&& controlAt) {
  if (from.size() != model.stateDim()) {
    throw Error(ErrorKind::DimensionMismatch, "state dimension does not match the model");
  }
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw Error(ErrorKind::InvalidArgument, "propagation duration must be positive and finite");
  }
  if (!(cfg.substep > 0.0)) throw Error(ErrorKind::InvalidArgument, "integrator substep must be positive");

  const std::size_t steps = stepCount(duration, cfg.substep);
  const double h = duration / static_cast<double>(steps);

  Simulation out;
  if (cfg.recordPath) {
    out.path.times.reserve(steps + 1);
    out.path.states.reserve(steps + 1);
  }
  out.path.push(0.0, from);
  State s = from;
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = startTime + h * static_cast<double>(i);
    State next = rk4Step(model, s, t, h, controlAt);
    if (!next.allFinite()) throw IntegrationBlowup(s, t);
    s = next;
    const double local = (i + 1 == steps) ? duration : h * static_cast<double>(i + 1);
    if (cfg.recordPath || i + 1 == steps) out.path.push(local, s);
  }
  out.terminal = s;
  return out;
}

}  // namespace

Propagation propagate(const DynamicsModel& model, const State& from, const ControlInput& u,
                      double duration, const IntegratorConfig& cfg, double startTime) {
  if (!model.controlInBounds(u)) throw Error(ErrorKind::InvalidArgument, "control outside model bounds");
  auto sim = integrate(model, from, duration, cfg, startTime, [&u](double) { return u; });
  return {sim.terminal, std::move(sim.path)};
}

Simulation simulateSequence(const DynamicsModel& model, const State& from, const ControlSequence& seq,
                            const IntegratorConfig& cfg) {
  Simulation out;
  out.path.push(0.0, from);
  out.terminal = from;
  double elapsed = 0.0;
  for (const auto& step : seq.steps) {
    auto leg = propagate(model, out.terminal, step.control, step.duration, cfg, elapsed);
    if (cfg.recordPath) {
      out.path.append(leg.path);
    } else {
      out.path.push(elapsed + step.duration, leg.terminal);
    }
    out.terminal = leg.terminal;
    elapsed += step.duration;
  }
  return out;
}

Simulation simulateControlFunction(const DynamicsModel& model, const State& from,
                                   const ControlFunction& phi, double horizon,
                                   const IntegratorConfig& cfg) {
  return integrate(model, from, horizon, cfg, 0.0, phi);
}

ControlSequence stepFunctionApprox(const ControlFunction& phi, double horizon, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "step length must be positive");
  if (horizon < dt) throw Error(ErrorKind::InvalidArgument, "horizon shorter than one step");
  const auto count = static_cast<std::size_t>(std::floor(horizon / dt + 1e-9));
  ControlSequence seq;
  seq.steps.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    seq.steps.push_back({phi(static_cast<double>(i) * dt), dt});
  }
  return seq;
}

double estimateLipschitz(const DynamicsModel& model, const std::vector<Interval>& stateBox,
                         std::size_t samples, std::uint64_t seed) {
  const std::size_t n = model.stateDim();
  const std::size_t m = model.controlDim();
  if (stateBox.size() != n) throw Error(ErrorKind::DimensionMismatch, "state box dimension");
  Rng rng(seed);
  const auto& ub = model.controlBounds();
  double worst = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    State s(n);
    ControlInput u(m);
    for (std::size_t i = 0; i < n; ++i) s[i] = uniformIn(rng, stateBox[i].lo, stateBox[i].hi);
    for (std::size_t i = 0; i < m; ++i) u[i] = uniformIn(rng, ub[i].lo, ub[i].hi);
    // Central differences, one column per input coordinate.
    for (std::size_t col = 0; col < n + m; ++col) {
      State sp = s, sm = s;
      ControlInput up = u, um = u;
      double h = 0.0;
      if (col < n) {
        h = 1e-6 * std::max(1.0, std::abs(s[col]));
        sp[col] += h;
        sm[col] -= h;
      } else {
        h = 1e-6 * std::max(1.0, std::abs(u[col - n]));
        up[col - n] += h;
        um[col - n] -= h;
      }
      const State fp = model.derivative(sp, up, 0.0);
      const State fm = model.derivative(sm, um, 0.0);
      double colSum = 0.0;
      for (std::size_t i = 0; i < n; ++i) colSum += std::abs(fp[i] - fm[i]) / (2.0 * h);
      worst = std::max(worst, colSum);
    }
  }
  return worst;
}

}  // namespace ctrlplan
