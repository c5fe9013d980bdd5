#include "ctrlplan/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "ctrlplan/random.hpp"

namespace ctrlplan {

namespace {

double growth(double lipschitz, double t) {
  return std::expm1(lipschitz * t);
}

double factorial(std::size_t k) {
  double f = 1.0;
  for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
  return f;
}

// rho^k / k!: chance that the first k picks all extend the correct chain.
double chainProbability(double rho, std::size_t k) {
  return std::pow(rho, static_cast<double>(k)) / factorial(k);
}

double l1Gap(const State& a, const State& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

// Linear interpolation of a sampled path at local time t.
State sampleAt(const StatePath& path, double t) {
  const auto it = std::lower_bound(path.times.begin(), path.times.end(), t);
  if (it == path.times.end()) return path.states.back();
  const auto i = static_cast<std::size_t>(it - path.times.begin());
  if (i == 0 || std::abs(path.times[i] - t) <= 1e-12) return path.states[i];
  if (std::abs(path.times[i - 1] - t) <= 1e-12) return path.states[i - 1];
  const double w = (t - path.times[i - 1]) / (path.times[i] - path.times[i - 1]);
  State s(path.states[i].size());
  for (std::size_t d = 0; d < s.size(); ++d) {
    s[d] = (1.0 - w) * path.states[i - 1][d] + w * path.states[i][d];
  }
  return s;
}

// The milestone failure system as a vector field; components at or above
// `active` are frozen.
class QSystem final : public DynamicsModel {
 public:
  QSystem(double rho, std::size_t dim, std::size_t active) : rho_(rho), dim_(dim), active_(active) {}

  std::string name() const override { return "q-system"; }
  std::size_t stateDim() const override { return dim_; }
  std::size_t controlDim() const override { return 0; }
  const std::vector<Interval>& controlBounds() const override { return bounds_; }
  double lipschitzConstant() const override { return rho_; }
  State derivative(const State& q, const ControlInput&, double t) const override {
    State d(dim_);
    for (std::size_t k = 0; k < active_; ++k) {
      const double prev = k == 0 ? 0.0 : q[k - 1];
      d[k] = -(rho_ / t) * (q[k] - prev);
    }
    return d;
  }

 private:
  double rho_;
  std::size_t dim_;
  std::size_t active_;
  std::vector<Interval> bounds_;
};

State advanceQ(const QSystem& sys, const State& q, double t0, double t1, double substep) {
  if (!(t1 > t0)) return q;
  IntegratorConfig cfg;
  cfg.substep = substep;
  cfg.recordPath = false;
  return propagate(sys, q, ControlInput(0), t1 - t0, cfg, t0).terminal;
}

}  // namespace

void BoundParams::validate(bool needDt) const {
  const double fields[] = {lipschitz, costLipschitz, controlDim, slope, horizon, epsilon, clearance};
  for (double v : fields) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "bound parameters must be positive");
  }
  if (needDt && (!(dt > 0.0) || !std::isfinite(dt))) {
    throw Error(ErrorKind::InvalidArgument, "step length must be positive");
  }
}

double pathDivergenceBound(double controlGap, double lipschitz, double t) {
  if (controlGap < 0.0 || t < 0.0) throw Error(ErrorKind::InvalidArgument, "gap and time must be non-negative");
  return controlGap * growth(lipschitz, t);
}

double discretizationBound(double m, double alpha, double dt, double lipschitz, double t) {
  return pathDivergenceBound(m * alpha * dt, lipschitz, t);
}

std::optional<double> maxAdmissibleDt(const BoundParams& p) {
  p.validate(false);
  const double numerator = p.clearance / growth(p.lipschitz, p.horizon) - p.epsilon;
  if (!(numerator > 0.0)) return std::nullopt;
  return numerator / (p.controlDim * p.slope);
}

double costGapBound(const BoundParams& p) {
  if (p.costLipschitz < 0.0 || p.epsilon < 0.0 || p.dt < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "bound parameters must be non-negative");
  }
  return p.costLipschitz * (p.epsilon + p.controlDim * p.slope * p.dt) * growth(p.lipschitz, p.horizon);
}

RecurrenceTable recurrenceLowerBound(double rho, std::size_t maxJ, std::size_t maxK) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw Error(ErrorKind::InvalidArgument, "rho must lie in [0, 1]");
  if (maxK < 1 || maxJ < maxK) throw Error(ErrorKind::InvalidArgument, "need J >= K >= 1");
  RecurrenceTable t;
  t.rho = rho;
  t.maxJ = maxJ;
  t.maxK = maxK;
  t.values.assign((maxJ + 1) * (maxK + 1), 0.0);
  for (std::size_t j = 0; j <= maxJ; ++j) t.at(j, 0) = 1.0;
  for (std::size_t j = 1; j <= maxJ; ++j) {
    for (std::size_t k = 1; k <= std::min(j, maxK); ++k) {
      if (j == k) {
        t.at(j, k) = chainProbability(rho, k);
      } else {
        const double prev = t.at(j - 1, k);
        t.at(j, k) = prev + (rho / static_cast<double>(j)) * (t.at(j - 1, k - 1) - prev);
      }
    }
  }
  return t;
}

double QBoundCoefficients::evaluate(std::size_t k, double t) const {
  if (k < 1 || k > n) throw Error(ErrorKind::InvalidArgument, "milestone index out of range");
  const double tk = milestoneSpacing * static_cast<double>(k);
  if (t < tk * (1.0 - 1e-12)) throw Error(ErrorKind::Domain, "rate bound evaluated before its milestone time");
  const double L = std::log(t);
  const auto& c = coeffs[k - 1];
  double poly = 0.0;
  for (std::size_t p = c.size(); p-- > 0;) poly = poly * L + c[p];
  return std::pow(t, -rho) * poly;
}

QBoundCoefficients qBoundCoefficients(std::size_t n, double rho, double milestoneSpacing) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "need at least one milestone");
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorKind::InvalidArgument, "rho must lie in (0, 1)");
  if (!(milestoneSpacing > 0.0)) throw Error(ErrorKind::InvalidArgument, "milestone spacing must be positive");
  QBoundCoefficients out;
  out.n = n;
  out.rho = rho;
  out.milestoneSpacing = milestoneSpacing;
  std::vector<double> prev;  // Q_0 = 0
  for (std::size_t k = 1; k <= n; ++k) {
    // t^rho Q_k = rho * integral of the previous polynomial in ln t, plus a
    // constant fixed by the value at t_k.
    std::vector<double> c(prev.size() + 1, 0.0);
    for (std::size_t p = 0; p < prev.size(); ++p) c[p + 1] = rho * prev[p] / static_cast<double>(p + 1);
    const double tk = milestoneSpacing * static_cast<double>(k);
    const double Lk = std::log(tk);
    double tail = 0.0;
    for (std::size_t p = c.size(); p-- > 1;) tail = (tail + c[p]) * Lk;
    c[0] = std::pow(tk, rho) * (1.0 - chainProbability(rho, k)) - tail;
    out.coeffs.push_back(c);
    prev = std::move(c);
  }
  return out;
}

double qRateBound(std::size_t n, double rho, double milestoneSpacing, double t) {
  if (t < milestoneSpacing * static_cast<double>(n)) {
    throw Error(ErrorKind::Domain, "t is earlier than the last milestone time");
  }
  return qBoundCoefficients(n, rho, milestoneSpacing).evaluate(n, t);
}

ProportionCI wilsonInterval(std::uint64_t successes, std::uint64_t trials, double z) {
  if (trials == 0) throw Error(ErrorKind::InvalidArgument, "no trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {p, std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

ProportionCI AbstractProcessResult::at(std::size_t j, std::size_t k) const {
  return wilsonInterval(successes[j * (maxK + 1) + k], trials);
}

AbstractProcessResult simulateAbstractProcess(double rho, std::size_t maxJ, std::size_t maxK,
                                              std::uint64_t trials, std::uint64_t seed) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw Error(ErrorKind::InvalidArgument, "rho must lie in [0, 1]");
  if (maxK < 1 || maxJ < 1 || trials == 0) throw Error(ErrorKind::InvalidArgument, "empty simulation");
  AbstractProcessResult r;
  r.rho = rho;
  r.maxJ = maxJ;
  r.maxK = maxK;
  r.trials = trials;
  r.successes.assign((maxJ + 1) * (maxK + 1), 0);
  std::vector<std::uint64_t> correct(maxK + 1);
  for (std::uint64_t trial = 0; trial < trials; ++trial) {
    Rng rng(mixSeed(seed, trial));
    std::fill(correct.begin(), correct.end(), 0);
    correct[0] = 1;  // the root
    for (std::size_t j = 0; j <= maxJ; ++j) r.successes[j * (maxK + 1)] += 1;
    for (std::size_t j = 1; j <= maxJ; ++j) {
      // j nodes exist before this draw: the root and j - 1 children.
      std::uint64_t pick = uniformIndex(rng, j);
      const double u = uniform01(rng);
      for (std::size_t d = 0; d < maxK; ++d) {
        if (pick < correct[d]) {
          if (u < rho) ++correct[d + 1];
          break;
        }
        pick -= correct[d];
      }
      for (std::size_t k = 1; k <= maxK; ++k) {
        if (correct[k] > 0) r.successes[j * (maxK + 1) + k] += 1;
      }
    }
  }
  return r;
}

DominanceReport checkDominance(const RecurrenceTable& analytic, const AbstractProcessResult& empirical) {
  if (analytic.maxJ != empirical.maxJ || analytic.maxK != empirical.maxK) {
    throw Error(ErrorKind::DimensionMismatch, "tables have different shapes");
  }
  DominanceReport rep;
  rep.worstMargin = 1e300;
  for (std::size_t k = 1; k <= analytic.maxK; ++k) {
    for (std::size_t j = k; j <= analytic.maxJ; ++j) {
      const double margin = empirical.at(j, k).upper - analytic.at(j, k);
      ++rep.cells;
      if (margin < 0.0) ++rep.violations;
      if (margin < rep.worstMargin) {
        rep.worstMargin = margin;
        rep.worstJ = j;
        rep.worstK = k;
      }
    }
  }
  return rep;
}

std::vector<double> discreteQLog(double rho, std::size_t maxJ) {
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorKind::InvalidArgument, "rho must lie in (0, 1)");
  if (maxJ < 1) throw Error(ErrorKind::InvalidArgument, "need J >= 1");
  std::vector<double> logQ(maxJ + 1, 0.0);
  logQ[1] = std::log1p(-rho);
  for (std::size_t j = 2; j <= maxJ; ++j) logQ[j] = logQ[j - 1] + std::log1p(-rho / static_cast<double>(j));
  return logQ;
}

double discreteRateFit(double rho, std::size_t maxJ) {
  if (maxJ < 1000) throw Error(ErrorKind::InvalidArgument, "rate fit needs J >= 1000");
  const auto logQ = discreteQLog(rho, maxJ);
  const std::size_t lo = maxJ / 10;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(maxJ - lo + 1);
  for (std::size_t j = lo; j <= maxJ; ++j) {
    const double x = std::log(static_cast<double>(j));
    sx += x;
    sy += logQ[j];
    sxx += x * x;
    sxy += x * logQ[j];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return -slope;
}

Lemma1Report checkPathDivergence(const DynamicsModel& model, const State& initial, const ControlSequence& a,
                                 const ControlSequence& b, const IntegratorConfig& integrator, double tolerance) {
  Lemma1Report rep;
  rep.tolerance = tolerance;
  rep.trials = 1;
  IntegratorConfig cfg = integrator;
  cfg.recordPath = true;
  const auto pa = simulateSequence(model, initial, a, cfg).path;
  const auto pb = simulateSequence(model, initial, b, cfg).path;
  const double gap = epsilonDistance(a, b);
  const double L = model.lipschitzConstant();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double t = pa.times[i];
    const double dist = l1Gap(pa.states[i], sampleAt(pb, t));
    const double bound = pathDivergenceBound(gap, L, t);
    ++rep.samples;
    rep.worstExcess = std::max(rep.worstExcess, dist - bound);
    if (t > 0.0) rep.minSlack = std::min(rep.minSlack, bound - dist);
    if (dist - bound > tolerance) ++rep.violations;
  }
  return rep;
}

Lemma1Report validateLemma1Empirically(const DynamicsModel& model, const State& initial, std::size_t trials,
                                       std::uint64_t seed, const IntegratorConfig& integrator, double tolerance) {
  Lemma1Report total;
  total.tolerance = tolerance;
  const auto& bounds = model.controlBounds();
  Rng rng(seed);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    // Draw order: step count, then per step its duration and both controls.
    const std::size_t steps = 1 + uniformIndex(rng, 5);
    ControlSequence a, b;
    for (std::size_t s = 0; s < steps; ++s) {
      const double dur = uniformOpenClosed(rng, 1.0);
      ControlInput ua(bounds.size()), ub(bounds.size());
      for (std::size_t i = 0; i < bounds.size(); ++i) ua[i] = uniformIn(rng, bounds[i].lo, bounds[i].hi);
      for (std::size_t i = 0; i < bounds.size(); ++i) ub[i] = uniformIn(rng, bounds[i].lo, bounds[i].hi);
      a.steps.push_back({ua, dur});
      b.steps.push_back({ub, dur});
    }
    const auto rep = checkPathDivergence(model, initial, a, b, integrator, tolerance);
    ++total.trials;
    total.samples += rep.samples;
    total.violations += rep.violations;
    total.worstExcess = std::max(total.worstExcess, rep.worstExcess);
    total.minSlack = std::min(total.minSlack, rep.minSlack);
  }
  return total;
}

Lemma2Report validateLemma2Empirically(const DynamicsModel& model, const State& initial, const ControlFunction& phi,
                                       double alpha, double dt, double horizon, const IntegratorConfig& integrator,
                                       double tolerance) {
  IntegratorConfig cfg = integrator;
  cfg.recordPath = true;
  const auto smooth = simulateControlFunction(model, initial, phi, horizon, cfg).path;
  const auto steps = stepFunctionApprox(phi, horizon, dt);
  const auto stepped = simulateSequence(model, initial, steps, cfg).path;
  Lemma2Report rep;
  rep.dt = dt;
  const double m = static_cast<double>(model.controlDim());
  const double L = model.lipschitzConstant();
  for (std::size_t i = 0; i < stepped.size(); ++i) {
    const double t = stepped.times[i];
    if (t > smooth.times.back() + 1e-12) break;
    const double err = l1Gap(stepped.states[i], sampleAt(smooth, t));
    const double bound = discretizationBound(m, alpha, dt, L, t);
    ++rep.samples;
    rep.maxError = std::max(rep.maxError, err);
    rep.worstExcess = std::max(rep.worstExcess, err - bound);
    if (err - bound > tolerance) ++rep.violations;
  }
  return rep;
}

std::vector<double> integrateQSystem(double rho, const std::vector<double>& q0, double t0, double t1,
                                     double substep) {
  if (!(t0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "the system is defined for t > 0");
  const QSystem sys(rho, q0.size(), q0.size());
  const State end = advanceQ(sys, State(std::span<const double>(q0)), t0, t1, substep);
  return {end.begin(), end.end()};
}

LyapunovReport lyapunovDescentCheck(double rho, std::size_t milestones, double milestoneSpacing, double horizon,
                                    std::size_t gridPoints, double threshold, double substep) {
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorKind::InvalidArgument, "rho must lie in (0, 1)");
  if (milestones < 1 || milestones > State::kCapacity) {
    throw Error(ErrorKind::InvalidArgument, "unsupported milestone count");
  }
  const double tK = milestoneSpacing * static_cast<double>(milestones);
  if (!(horizon > tK) || gridPoints < 2) throw Error(ErrorKind::InvalidArgument, "horizon must exceed t_K");

  LyapunovReport rep;
  rep.rho = rho;
  rep.milestones = milestones;
  rep.milestoneSpacing = milestoneSpacing;
  rep.horizon = horizon;
  rep.threshold = threshold;

  // Activation phase: bring component k in at t_k.
  State q(milestones, 0.0);
  double t = milestoneSpacing;
  for (std::size_t k = 1; k <= milestones; ++k) {
    const double tk = milestoneSpacing * static_cast<double>(k);
    q = advanceQ(QSystem(rho, milestones, k - 1), q, t, tk, substep);
    q[k - 1] = 1.0 - chainProbability(rho, k);
    t = tk;
  }

  const auto closed = qBoundCoefficients(milestones, rho, milestoneSpacing);
  const QSystem full(rho, milestones, milestones);
  const double logLo = std::log(tK), logHi = std::log(horizon);
  for (std::size_t i = 0; i < gridPoints; ++i) {
    const double ti = i + 1 == gridPoints
                          ? horizon
                          : std::exp(logLo + (logHi - logLo) * static_cast<double>(i) / static_cast<double>(gridPoints - 1));
    q = advanceQ(full, q, t, ti, substep);
    t = ti;
    double v = 0.0;
    for (std::size_t k = 0; k < milestones; ++k) {
      v += q[k] * q[k];
      rep.maxClosedFormGap = std::max(rep.maxClosedFormGap, std::abs(q[k] - closed.evaluate(k + 1, ti)));
    }
    rep.times.push_back(ti);
    rep.energy.push_back(v);
  }
  rep.strictlyDecreasing = true;
  for (std::size_t i = 1; i < rep.energy.size(); ++i) {
    if (!(rep.energy[i] < rep.energy[i - 1])) rep.strictlyDecreasing = false;
  }
  rep.finalQ.assign(q.begin(), q.end());
  rep.belowThreshold = std::all_of(rep.finalQ.begin(), rep.finalQ.end(), [&](double v) { return v < threshold; });
  return rep;
}

nlohmann::json toJson(const Lemma1Report& r) {
  return {{"trials", r.trials},         {"samples", r.samples},         {"violations", r.violations},
          {"tolerance", r.tolerance},   {"worst_excess", r.worstExcess}, {"min_slack", r.minSlack},
          {"pass", r.pass()}};
}

nlohmann::json toJson(const Lemma2Report& r) {
  return {{"dt", r.dt},           {"samples", r.samples},          {"violations", r.violations},
          {"max_error", r.maxError}, {"worst_excess", r.worstExcess}, {"pass", r.pass()}};
}

nlohmann::json toJson(const DominanceReport& r) {
  return {{"cells", r.cells},     {"violations", r.violations}, {"worst_margin", r.worstMargin},
          {"worst_j", r.worstJ}, {"worst_k", r.worstK},        {"pass", r.pass()}};
}

nlohmann::json toJson(const LyapunovReport& r) {
  return {{"rho", r.rho},
          {"milestones", r.milestones},
          {"milestone_spacing", r.milestoneSpacing},
          {"horizon", r.horizon},
          {"final_q", r.finalQ},
          {"final_energy", r.energy.empty() ? 0.0 : r.energy.back()},
          {"strictly_decreasing", r.strictlyDecreasing},
          {"threshold", r.threshold},
          {"below_threshold", r.belowThreshold},
          {"max_closed_form_gap", r.maxClosedFormGap},
          {"pass", r.pass()}};
}

nlohmann::json toJson(const RecurrenceTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t j = 0; j <= t.maxJ; ++j) {
    std::vector<double> row(t.maxK + 1);
    for (std::size_t k = 0; k <= t.maxK; ++k) row[k] = t.at(j, k);
    rows.push_back(row);
  }
  return {{"rho", t.rho}, {"max_j", t.maxJ}, {"max_k", t.maxK}, {"values", rows}};
}

}  // namespace ctrlplan
