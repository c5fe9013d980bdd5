#pragma once

// Numerical versions of the trajectory-error bounds and the convergence
// theory for uniform control-space sampling.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctrlplan/core.hpp"
#include "ctrlplan/dynamics.hpp"

namespace ctrlplan {

struct BoundParams {
  double lipschitz = 1.0;      // L_p
  double costLipschitz = 1.0;  // L_D
  double controlDim = 1.0;     // m
  double slope = 1.0;          // alpha: slope-plus-remainder of the optimal control
  double horizon = 1.0;        // T_g [s]
  double dt = 0.1;             // [s]
  double epsilon = 0.1;        // control-space closeness
  double clearance = 1.0;      // delta

  // Throws InvalidArgument unless every field is positive and finite.
  // `needDt` is false when the step is the unknown being solved for.
  void validate(bool needDt = true) const;
};

// E_U (e^{L_p t} - 1)
double pathDivergenceBound(double controlGap, double lipschitz, double t);

// m alpha dt (e^{L_p t} - 1)
double discretizationBound(double m, double alpha, double dt, double lipschitz, double t);

// Largest dt with (m alpha dt + eps)(e^{L_p T_g} - 1) <= delta; empty when
// eps alone already exceeds the clearance.
std::optional<double> maxAdmissibleDt(const BoundParams& p);

// L_D (eps + m alpha dt)(e^{L_p T_g} - 1)
double costGapBound(const BoundParams& p);

// P[j][k], 0 <= k <= K, 0 <= j <= J. Zero for j < k (k >= 1).
struct RecurrenceTable {
  double rho = 0.0;
  std::size_t maxJ = 0;
  std::size_t maxK = 0;
  std::vector<double> values;  // row-major, (J+1) x (K+1)

  double at(std::size_t j, std::size_t k) const { return values[j * (maxK + 1) + k]; }
  double& at(std::size_t j, std::size_t k) { return values[j * (maxK + 1) + k]; }
};

// Success-probability recurrence iterated with equality:
//   P[k][k] = rho^k / k!,  P[j][0] = 1,
//   P[j][k] = P[j-1][k] + (rho/j)(P[j-1][k-1] - P[j-1][k])  for j > k.
RecurrenceTable recurrenceLowerBound(double rho, std::size_t maxJ, std::size_t maxK);

// Coefficients of Q_k(t) = t^{-rho} sum_p c[k][p] (ln t)^p for each
// milestone k = 1..n, from the equality system Qdot_k = -(rho/t)(Q_k - Q_{k-1})
// with Q_k(t_k) = 1 - rho^k/k! and t_k = milestoneSpacing * k.
struct QBoundCoefficients {
  std::size_t n = 0;
  double rho = 0.0;
  double milestoneSpacing = 1.0;
  std::vector<std::vector<double>> coeffs;  // coeffs[k-1][p]

  double evaluate(std::size_t k, double t) const;
};

QBoundCoefficients qBoundCoefficients(std::size_t n, double rho, double milestoneSpacing);

// Upper bound on the failure probability of milestone n at time t.
// Throws Domain when t < n * milestoneSpacing.
double qRateBound(std::size_t n, double rho, double milestoneSpacing, double t);

// 99% Wilson score interval.
struct ProportionCI {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

inline constexpr double kZ99 = 2.5758293035489004;

ProportionCI wilsonInterval(std::uint64_t successes, std::uint64_t trials, double z = kZ99);

struct AbstractProcessResult {
  double rho = 0.0;
  std::size_t maxJ = 0;
  std::size_t maxK = 0;
  std::uint64_t trials = 0;
  std::vector<std::uint64_t> successes;  // (J+1) x (K+1), like RecurrenceTable

  ProportionCI at(std::size_t j, std::size_t k) const;
};

// Monte-Carlo of the idealised process: iteration j picks one of the j
// existing nodes uniformly; a pick of a correct depth-d node adds a correct
// depth-(d+1) node with probability rho. Success for (j, k) means a correct
// depth-k node exists after j iterations. Trial i uses seed mixSeed(seed, i).
AbstractProcessResult simulateAbstractProcess(double rho, std::size_t maxJ, std::size_t maxK,
                                              std::uint64_t trials, std::uint64_t seed);

struct DominanceReport {
  std::size_t cells = 0;
  std::size_t violations = 0;
  double worstMargin = 0.0;  // min over cells of (CI upper - analytic)
  std::size_t worstJ = 0;
  std::size_t worstK = 0;
  bool pass() const noexcept { return violations == 0; }
};

// Checks analytic <= empirical upper confidence limit on every j >= k >= 1 cell.
DominanceReport checkDominance(const RecurrenceTable& analytic, const AbstractProcessResult& empirical);

// Iterates Q_1 = 1 - rho, Q_j = Q_{j-1}(1 - rho/j) in log space.
std::vector<double> discreteQLog(double rho, std::size_t maxJ);

// Least-squares slope of log Q_j against log j over the last decade
// [J/10, J], negated so that it estimates the rate exponent.
double discreteRateFit(double rho, std::size_t maxJ);

struct Lemma1Report {
  std::size_t trials = 0;
  std::size_t samples = 0;
  std::size_t violations = 0;
  double tolerance = 1e-6;
  double worstExcess = -1e300;  // max of (distance - bound)
  double minSlack = 1e300;      // min of (bound - distance) over samples with t > 0
  bool pass() const noexcept { return violations == 0; }
};

// Random control-sequence pairs on a shared step grid; checks the L1 state
// gap against pathDivergenceBound(epsilonDistance, declared L_p, t) at every
// sample.
Lemma1Report validateLemma1Empirically(const DynamicsModel& model, const State& initial, std::size_t trials,
                                       std::uint64_t seed, const IntegratorConfig& integrator = {},
                                       double tolerance = 1e-6);

// Measured gap for one fixed pair of sequences (same report shape).
Lemma1Report checkPathDivergence(const DynamicsModel& model, const State& initial, const ControlSequence& a,
                                 const ControlSequence& b, const IntegratorConfig& integrator = {},
                                 double tolerance = 1e-6);

struct Lemma2Report {
  double dt = 0.0;
  std::size_t samples = 0;
  std::size_t violations = 0;
  double maxError = 0.0;
  double worstExcess = -1e300;
  bool pass() const noexcept { return violations == 0; }
};

// Compares the trajectory under a smooth control with the one under its
// left-endpoint step approximation; alpha bounds |phi'|.
Lemma2Report validateLemma2Empirically(const DynamicsModel& model, const State& initial, const ControlFunction& phi,
                                       double alpha, double dt, double horizon,
                                       const IntegratorConfig& integrator = {}, double tolerance = 1e-6);

struct LyapunovReport {
  double rho = 0.0;
  std::size_t milestones = 0;
  double milestoneSpacing = 1.0;
  double horizon = 0.0;
  std::vector<double> times;  // grid, t >= t_K
  std::vector<double> energy;
  std::vector<double> finalQ;
  bool strictlyDecreasing = false;
  double threshold = 0.05;
  bool belowThreshold = false;
  double maxClosedFormGap = 0.0;  // numerical vs qRateBound on the grid
  bool pass() const noexcept { return strictlyDecreasing && belowThreshold; }
};

// Integrates Qdot_k = -(rho/t)(Q_k - Q_{k-1}), Q_0 = 0, activating Q_k at
// t_k with 1 - rho^k/k!, up to `horizon` (in the same units as the spacing);
// V = sum Q_k^2 is sampled on `gridPoints` log-spaced times in [t_K, horizon].
LyapunovReport lyapunovDescentCheck(double rho, std::size_t milestones, double milestoneSpacing, double horizon,
                                    std::size_t gridPoints = 400, double threshold = 0.05,
                                    double substep = 0.01);

// Same system from an arbitrary start (used for the equilibrium check).
std::vector<double> integrateQSystem(double rho, const std::vector<double>& q0, double t0, double t1,
                                     double substep = 0.01);

nlohmann::json toJson(const Lemma1Report& r);
nlohmann::json toJson(const Lemma2Report& r);
nlohmann::json toJson(const DominanceReport& r);
nlohmann::json toJson(const LyapunovReport& r);
nlohmann::json toJson(const RecurrenceTable& t);

}  // namespace ctrlplan
