#pragma once

// Multi-seed ensembles over planner arms, aggregation at valid-iteration
// checkpoints, plot-ready CSV output and the consolidated theory report.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctrlplan/planner.hpp"

namespace ctrlplan {

struct Arm {
  std::string name;
  Strategy strategy = Strategy::Uniform;
  bool pruning = false;
  DtPolicy dt = DtPolicy::constant(1.0);
};

struct ExperimentSpec {
  Problem problem;
  PlannerConfig base;  // budgets, radius, resolution, cadence; seed is overridden
  std::vector<Arm> arms;
  std::vector<std::uint64_t> seeds;
  unsigned parallelism = 1;

  // Throws InvalidConfig.
  void validate() const;
};

// Reads a bench spec. `problem` may be an inline object or a path relative
// to `baseDir`.
ExperimentSpec experimentSpecFromJson(const nlohmann::json& j, const std::filesystem::path& baseDir = {});

struct RunOutcome {
  std::string arm;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<IterationRecord> records;
  PlanStats stats;
  double finalBestCost = 0.0;
  std::optional<double> solutionCost;
  bool solutionAdmissible = false;
};

struct CheckpointStat {
  std::uint64_t iteration = 0;
  double meanBestCost = 0.0;  // over runs solved by this checkpoint; NaN if none
  double minBestCost = 0.0;
  double maxBestCost = 0.0;
  double successFraction = 0.0;
  double meanNodeCount = 0.0;
  double meanWallTime = 0.0;
  std::size_t solvedRuns = 0;
  std::size_t runs = 0;
};

struct ArmSummary {
  std::string name;
  std::vector<CheckpointStat> checkpoints;
};

struct EnsembleSummary {
  std::vector<ArmSummary> arms;
};

struct ExperimentResult {
  EnsembleSummary summary;
  std::vector<RunOutcome> runs;  // arm-major, then seed order
};

// Checkpoints are every `recordEvery` valid iterations up to the budget.
std::vector<std::uint64_t> checkpointGrid(const PlannerConfig& cfg);

// State of a run at a checkpoint: the last record at or before it.
const IterationRecord* recordAt(const std::vector<IterationRecord>& records, std::uint64_t iteration);

EnsembleSummary summarize(const ExperimentSpec& spec, const std::vector<RunOutcome>& runs);

// Runs every (arm, seed) pair; a failing run is recorded, not rethrown.
// Writes runs.csv, summary.csv and runs/<arm>_seed<seed>.csv when `outDir`
// is set.
ExperimentResult runExperiment(const ExperimentSpec& spec, const std::optional<std::filesystem::path>& outDir = {});

void writeSummaryCsv(std::ostream& out, const EnsembleSummary& s);
void writeRunsCsv(std::ostream& out, const std::vector<RunOutcome>& runs);

struct PlotRow {
  std::uint64_t checkpoint = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double successFraction = 0.0;
};

// One CSV per arm, "<dir>/<arm>.csv", columns
// checkpoint,mean,min,max,success_fraction. Returns the paths written.
std::vector<std::filesystem::path> emitPlotData(const EnsembleSummary& summary, const std::filesystem::path& dir);
void writePlotCsv(std::ostream& out, const ArmSummary& arm);
std::vector<PlotRow> readPlotCsv(std::istream& in);

struct TheoryParams {
  // Lemma checks run on x_dot = a x + u with u in `control`.
  double linearDrift = 1.0;
  Interval control{-1.0, 1.0};
  std::optional<double> declaredLipschitz;  // default: the exact max(|a|, 1)
  std::size_t lemma1Trials = 1000;
  std::vector<double> lemma2Steps{0.2, 0.1, 0.05};
  double lemma2Horizon = 2.0;

  std::vector<double> rhos{0.05, 0.2, 0.5};
  std::size_t maxJ = 200;
  std::size_t maxK = 3;
  std::uint64_t monteCarloTrials = 10000;

  std::vector<double> rateRhos{0.3, 0.9};
  std::size_t rateJ = 1000000;

  double lyapunovRho = 0.5;
  std::size_t lyapunovMilestones = 4;
  double milestoneSpacing = 1.0;
  double lyapunovHorizon = 1e4;

  std::uint64_t seed = 1;
};

TheoryParams theoryParamsFromJson(const nlohmann::json& j);

// Runs the analysis checks and returns {"pass": bool, "checks": {...}}.
nlohmann::json theoryReport(const TheoryParams& params);

}  // namespace ctrlplan
