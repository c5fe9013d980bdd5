// Command-line front end: plan, bench, theory, dump-tree.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "ctrlplan/bench.hpp"
#include "ctrlplan/config.hpp"
#include "ctrlplan/planner.hpp"

namespace fs = std::filesystem;
using namespace ctrlplan;
using nlohmann::json;

namespace {

struct RunOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> budget;
  std::optional<std::string> strategy;
  std::optional<bool> pruning;
};

void addRunOptions(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("-c,--config", o.config, "problem + planner JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("-s,--seed", o.seed, "RNG seed override");
  cmd->add_option("-b,--budget", o.budget, "valid-iteration budget override");
  cmd->add_option("--strategy", o.strategy, "uniform or rrt")->check(CLI::IsMember({"uniform", "rrt"}));
  cmd->add_option("--pruning", o.pruning, "enable neighborhood pruning");
}

std::pair<Problem, PlannerConfig> loadRun(const RunOptions& o) {
  const json j = loadJsonFile(o.config);
  Problem problem = problemFromJson(j);
  json planner = j.value("planner", json::object());
  if (o.seed) planner["seed"] = *o.seed;
  if (o.budget) planner["iteration_budget"] = *o.budget;
  if (o.strategy) planner["strategy"] = *o.strategy;
  if (o.pruning) planner["pruning"] = *o.pruning;
  return {std::move(problem), plannerConfigFromJson(planner)};
}

std::ofstream openOut(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + p.string());
  return out;
}

json statsJson(const PlanResult& r) {
  const PlanStats& s = r.stats;
  json j = {{"valid_iterations", s.validIterations},
            {"total_iterations", s.totalIterations},
            {"collisions", s.collisions},
            {"blowups", s.blowups},
            {"sampling_failures", s.samplingFailures},
            {"admission_rejects", s.admissionRejects},
            {"prune_rejects", s.pruneRejects},
            {"inserted", s.inserted},
            {"pruned_nodes", s.prunedNodes},
            {"live_nodes", r.tree.liveCount()},
            {"wall_time_s", s.wallTime}};
  j["first_solution_iteration"] = s.firstSolutionIteration ? json(*s.firstSolutionIteration) : json(nullptr);
  if (r.solution) {
    j["solution"] = {{"cost", r.solution->cost},
                     {"steps", r.solution->controls.size()},
                     {"duration", r.solution->controls.totalDuration()},
                     {"reached_goal", r.solution->reachedGoal}};
  } else {
    j["solution"] = nullptr;
  }
  return j;
}

int runPlan(const RunOptions& o, const std::string& outDir) {
  auto [problem, cfg] = loadRun(o);
  fs::create_directories(outDir);
  auto records = openOut(fs::path(outDir) / "records.csv");
  writeRecordHeader(records);
  auto result = plan(problem, cfg, [&records](const IterationRecord& r) { writeRecord(records, r); });
  if (result.solution) {
    auto controls = openOut(fs::path(outDir) / "trajectory_controls.csv");
    auto path = openOut(fs::path(outDir) / "trajectory_path.csv");
    writeTrajectory(controls, path, *result.solution);
  }
  std::cout << statsJson(result).dump(2) << '\n';
  return 0;
}

int runDumpTree(const RunOptions& o, const std::string& outFile) {
  auto [problem, cfg] = loadRun(o);
  const auto result = plan(problem, cfg);
  if (outFile.empty() || outFile == "-") {
    result.tree.dump(std::cout);
  } else {
    auto out = openOut(outFile);
    result.tree.dump(out);
  }
  return 0;
}

int runBench(const std::string& specPath, const std::string& outDir, std::optional<std::uint64_t> seeds,
             std::optional<std::uint64_t> budget, std::optional<unsigned> parallel) {
  json j = loadJsonFile(specPath);
  if (seeds) {
    j.erase("seeds");
    j["seed_count"] = *seeds;
  }
  if (budget) j["planner"]["iteration_budget"] = *budget;
  if (parallel) j["parallelism"] = *parallel;
  const auto spec = experimentSpecFromJson(j, fs::path(specPath).parent_path());
  const auto result = runExperiment(spec, fs::path(outDir));
  emitPlotData(result.summary, fs::path(outDir) / "plot");
  std::size_t failed = 0;
  for (const auto& r : result.runs) failed += r.ok ? 0 : 1;
  json report = json::array();
  for (const auto& arm : result.summary.arms) {
    const auto& last = arm.checkpoints.back();
    report.push_back({{"arm", arm.name},
                      {"checkpoint", last.iteration},
                      {"success_fraction", last.successFraction},
                      {"mean_best_cost", std::isnan(last.meanBestCost) ? json(nullptr) : json(last.meanBestCost)}});
  }
  std::cout << json{{"runs", result.runs.size()}, {"failed_runs", failed}, {"arms", report}}.dump(2) << '\n';
  return failed ? 1 : 0;
}

int runTheory(const std::string& paramsPath, const std::string& outFile, std::optional<double> declaredL) {
  TheoryParams params = paramsPath.empty() ? TheoryParams{} : theoryParamsFromJson(loadJsonFile(paramsPath));
  if (declaredL) params.declaredLipschitz = *declaredL;
  const json report = theoryReport(params);
  if (outFile.empty() || outFile == "-") {
    std::cout << report.dump(2) << '\n';
  } else {
    auto out = openOut(outFile);
    out << report.dump(2) << '\n';
    std::cout << "theory report: " << (report["pass"].get<bool>() ? "pass" : "FAIL") << " -> " << outFile << '\n';
  }
  return report["pass"].get<bool>() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Control-space sampling planner and analysis tools"};
  app.require_subcommand(1);

  RunOptions planOpts;
  std::string planOut = "plan_out";
  auto* planCmd = app.add_subcommand("plan", "single planner run");
  addRunOptions(planCmd, planOpts);
  planCmd->add_option("-o,--out", planOut, "output directory");

  RunOptions dumpOpts;
  std::string dumpOut;
  auto* dumpCmd = app.add_subcommand("dump-tree", "run the planner and write the final tree");
  addRunOptions(dumpCmd, dumpOpts);
  dumpCmd->add_option("-o,--out", dumpOut, "output file (default stdout)");

  std::string benchSpec, benchOut = "bench_out";
  std::optional<std::uint64_t> benchSeeds, benchBudget;
  std::optional<unsigned> benchParallel;
  auto* benchCmd = app.add_subcommand("bench", "multi-seed ensemble");
  benchCmd->add_option("-c,--config", benchSpec, "experiment spec JSON")->required()->check(CLI::ExistingFile);
  benchCmd->add_option("-o,--out", benchOut, "output directory");
  benchCmd->add_option("--seeds", benchSeeds, "use seeds 1..N");
  benchCmd->add_option("-b,--budget", benchBudget, "valid-iteration budget override");
  benchCmd->add_option("-j,--parallel", benchParallel, "concurrent runs");

  std::string theoryParams, theoryOut;
  std::optional<double> theoryL;
  auto* theoryCmd = app.add_subcommand("theory", "analysis report");
  theoryCmd->add_option("-c,--config", theoryParams, "parameter JSON")->check(CLI::ExistingFile);
  theoryCmd->add_option("-o,--out", theoryOut, "report file (default stdout)");
  theoryCmd->add_option("--declared-lipschitz", theoryL, "override the linear model's declared constant");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*planCmd) return runPlan(planOpts, planOut);
    if (*dumpCmd) return runDumpTree(dumpOpts, dumpOut);
    if (*benchCmd) return runBench(benchSpec, benchOut, benchSeeds, benchBudget, benchParallel);
    if (*theoryCmd) return runTheory(theoryParams, theoryOut, theoryL);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
