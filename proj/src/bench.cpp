#include "ctrlplan/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "ctrlplan/analysis.hpp"
#include "ctrlplan/config.hpp"

namespace ctrlplan {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream openOut(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + p.string());
  return out;
}

RunOutcome runOne(const ExperimentSpec& spec, const Arm& arm, std::uint64_t seed) {
  RunOutcome r;
  r.arm = arm.name;
  r.seed = seed;
  try {
    PlannerConfig cfg = spec.base;
    cfg.strategy = arm.strategy;
    cfg.pruning = arm.pruning;
    cfg.dt = arm.dt;
    cfg.seed = seed;
    auto res = plan(spec.problem, cfg);
    r.records = std::move(res.records);
    r.stats = res.stats;
    r.finalBestCost = res.tree.bestCost();
    if (res.solution) {
      r.solutionCost = res.solution->cost;
      r.solutionAdmissible = res.solution->reachedGoal &&
                             isCollisionFree(res.solution->path, spec.problem.workspace, cfg.collisionResolution);
    }
    r.ok = true;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

}  // namespace

void ExperimentSpec::validate() const {
  problem.validate();
  if (arms.empty()) throw Error(ErrorKind::InvalidConfig, "experiment needs at least one arm");
  if (seeds.empty()) throw Error(ErrorKind::InvalidConfig, "experiment needs at least one seed");
  if (base.recordEvery < 1) throw Error(ErrorKind::InvalidConfig, "record cadence must be at least 1");
  if (base.iterationBudget == 0) throw Error(ErrorKind::InvalidConfig, "experiments need an iteration budget");
  if (parallelism < 1) throw Error(ErrorKind::InvalidConfig, "parallelism must be at least 1");
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (arms[i].name.empty()) throw Error(ErrorKind::InvalidConfig, "arm without a name");
    for (std::size_t k = 0; k < i; ++k) {
      if (arms[k].name == arms[i].name) throw Error(ErrorKind::InvalidConfig, "duplicate arm " + arms[i].name);
    }
  }
  base.validate();
}

ExperimentSpec experimentSpecFromJson(const json& j, const fs::path& baseDir) {
  try {
    ExperimentSpec spec;
    const json& p = j.at("problem");
    const json problem = p.is_string() ? loadJsonFile((baseDir / p.get<std::string>()).string()) : p;
    spec.problem = problemFromJson(problem);

    PlannerConfig defaults;
    defaults.recordWallTime = j.value("timing", true);
    spec.base = plannerConfigFromJson(j.value("planner", json::object()), defaults);

    for (const auto& a : j.at("arms")) {
      Arm arm;
      arm.name = a.at("name").get<std::string>();
      PlannerConfig armCfg = plannerConfigFromJson(a, spec.base);
      arm.strategy = armCfg.strategy;
      arm.pruning = armCfg.pruning;
      arm.dt = armCfg.dt;
      spec.arms.push_back(arm);
    }
    if (j.contains("seeds")) {
      spec.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    } else {
      const auto count = j.value("seed_count", std::uint64_t{21});
      const auto first = j.value("first_seed", std::uint64_t{1});
      for (std::uint64_t s = 0; s < count; ++s) spec.seeds.push_back(first + s);
    }
    spec.parallelism = j.value("parallelism", 1u);
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, e.what());
  }
}

std::vector<std::uint64_t> checkpointGrid(const PlannerConfig& cfg) {
  std::vector<std::uint64_t> grid;
  for (std::uint64_t c = cfg.recordEvery; c <= cfg.iterationBudget; c += cfg.recordEvery) grid.push_back(c);
  if (grid.empty() || grid.back() != cfg.iterationBudget) grid.push_back(cfg.iterationBudget);
  return grid;
}

const IterationRecord* recordAt(const std::vector<IterationRecord>& records, std::uint64_t iteration) {
  const auto it = std::upper_bound(records.begin(), records.end(), iteration,
                                   [](std::uint64_t v, const IterationRecord& r) { return v < r.iteration; });
  return it == records.begin() ? nullptr : &*(it - 1);
}

EnsembleSummary summarize(const ExperimentSpec& spec, const std::vector<RunOutcome>& runs) {
  EnsembleSummary s;
  const auto grid = checkpointGrid(spec.base);
  for (const Arm& arm : spec.arms) {
    ArmSummary a;
    a.name = arm.name;
    for (std::uint64_t c : grid) {
      CheckpointStat st;
      st.iteration = c;
      st.minBestCost = std::numeric_limits<double>::infinity();
      st.maxBestCost = -std::numeric_limits<double>::infinity();
      double costSum = 0.0, nodeSum = 0.0, wallSum = 0.0;
      for (const RunOutcome& r : runs) {
        if (r.arm != arm.name || !r.ok) continue;
        ++st.runs;
        const IterationRecord* rec = recordAt(r.records, c);
        if (!rec) continue;
        nodeSum += static_cast<double>(rec->nodeCount);
        wallSum += rec->wallTime;
        if (std::isfinite(rec->bestCost)) {
          ++st.solvedRuns;
          costSum += rec->bestCost;
          st.minBestCost = std::min(st.minBestCost, rec->bestCost);
          st.maxBestCost = std::max(st.maxBestCost, rec->bestCost);
        }
      }
      const double nan = std::numeric_limits<double>::quiet_NaN();
      if (st.solvedRuns == 0) st.minBestCost = st.maxBestCost = nan;
      st.meanBestCost = st.solvedRuns ? costSum / static_cast<double>(st.solvedRuns) : nan;
      st.successFraction = st.runs ? static_cast<double>(st.solvedRuns) / static_cast<double>(st.runs) : 0.0;
      st.meanNodeCount = st.runs ? nodeSum / static_cast<double>(st.runs) : 0.0;
      st.meanWallTime = st.runs ? wallSum / static_cast<double>(st.runs) : 0.0;
      a.checkpoints.push_back(st);
    }
    s.arms.push_back(std::move(a));
  }
  return s;
}

ExperimentResult runExperiment(const ExperimentSpec& spec, const std::optional<fs::path>& outDir) {
  spec.validate();
  struct Job {
    const Arm* arm;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const Arm& arm : spec.arms) {
    for (std::uint64_t seed : spec.seeds) jobs.push_back({&arm, seed});
  }

  ExperimentResult result;
  result.runs.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      result.runs[i] = runOne(spec, *jobs[i].arm, jobs[i].seed);
    }
  };
  const unsigned threads = std::min<unsigned>(spec.parallelism, static_cast<unsigned>(jobs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  result.summary = summarize(spec, result.runs);

  if (outDir) {
    fs::create_directories(*outDir / "runs");
    for (const RunOutcome& r : result.runs) {
      auto out = openOut(*outDir / "runs" / (r.arm + "_seed" + std::to_string(r.seed) + ".csv"));
      writeRecordHeader(out);
      for (const auto& rec : r.records) writeRecord(out, rec);
    }
    auto runsOut = openOut(*outDir / "runs.csv");
    writeRunsCsv(runsOut, result.runs);
    auto summaryOut = openOut(*outDir / "summary.csv");
    writeSummaryCsv(summaryOut, result.summary);
  }
  return result;
}

void writeSummaryCsv(std::ostream& out, const EnsembleSummary& s) {
  out << "arm,checkpoint,mean_best_cost,min_best_cost,max_best_cost,success_fraction,mean_node_count,"
         "mean_wall_time_s,solved_runs,runs\n";
  for (const auto& a : s.arms) {
    for (const auto& c : a.checkpoints) {
      out << a.name << ',' << c.iteration << ',' << fmt(c.meanBestCost) << ',' << fmt(c.minBestCost) << ','
          << fmt(c.maxBestCost) << ',' << fmt(c.successFraction) << ',' << fmt(c.meanNodeCount) << ','
          << fmt(c.meanWallTime) << ',' << c.solvedRuns << ',' << c.runs << '\n';
    }
  }
}

void writeRunsCsv(std::ostream& out, const std::vector<RunOutcome>& runs) {
  out << "arm,seed,status,first_solution_iteration,final_best_cost,solution_admissible,valid_iterations,"
         "total_iterations,collisions,blowups,sampling_failures,inserted,pruned_nodes,best_path_removals,"
         "wall_time_s,error\n";
  for (const auto& r : runs) {
    const auto& s = r.stats;
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << r.arm << ',' << r.seed << ',' << (r.ok ? "ok" : "error") << ','
        << (s.firstSolutionIteration ? std::to_string(*s.firstSolutionIteration) : std::string("-")) << ','
        << fmt(r.finalBestCost) << ',' << (r.solutionAdmissible ? 1 : 0) << ',' << s.validIterations << ','
        << s.totalIterations << ',' << s.collisions << ',' << s.blowups << ',' << s.samplingFailures << ','
        << s.inserted << ',' << s.prunedNodes << ',' << s.bestPathRemovals << ','
        << fmt(r.records.empty() ? 0.0 : r.records.back().wallTime) << ',' << err << '\n';
  }
}

void writePlotCsv(std::ostream& out, const ArmSummary& arm) {
  out << "checkpoint,mean,min,max,success_fraction\n";
  for (const auto& c : arm.checkpoints) {
    out << c.iteration << ',' << fmt(c.meanBestCost) << ',' << fmt(c.minBestCost) << ',' << fmt(c.maxBestCost)
        << ',' << fmt(c.successFraction) << '\n';
  }
}

std::vector<fs::path> emitPlotData(const EnsembleSummary& summary, const fs::path& dir) {
  if (summary.arms.empty()) throw Error(ErrorKind::InvalidArgument, "empty summary");
  fs::create_directories(dir);
  std::vector<fs::path> written;
  for (const auto& arm : summary.arms) {
    const fs::path p = dir / (arm.name + ".csv");
    auto out = openOut(p);
    writePlotCsv(out, arm);
    written.push_back(p);
  }
  return written;
}

std::vector<PlotRow> readPlotCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "checkpoint,mean,min,max,success_fraction") {
    throw Error(ErrorKind::Io, "unexpected plot header");
  }
  std::vector<PlotRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string f[5];
    for (auto& x : f) {
      if (!std::getline(ss, x, ',')) throw Error(ErrorKind::Io, "short plot row: " + line);
    }
    std::string extra;
    if (std::getline(ss, extra, ',')) throw Error(ErrorKind::Io, "extra plot column: " + line);
    rows.push_back({std::stoull(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), std::stod(f[4])});
  }
  return rows;
}

TheoryParams theoryParamsFromJson(const json& j) {
  try {
    TheoryParams p;
    p.linearDrift = j.value("linear_drift", p.linearDrift);
    if (j.contains("control")) p.control = {j["control"][0].get<double>(), j["control"][1].get<double>()};
    if (j.contains("declared_lipschitz")) p.declaredLipschitz = j["declared_lipschitz"].get<double>();
    p.lemma1Trials = j.value("lemma1_trials", p.lemma1Trials);
    p.lemma2Steps = j.value("lemma2_steps", p.lemma2Steps);
    p.lemma2Horizon = j.value("lemma2_horizon", p.lemma2Horizon);
    p.rhos = j.value("rhos", p.rhos);
    p.maxJ = j.value("max_j", p.maxJ);
    p.maxK = j.value("max_k", p.maxK);
    p.monteCarloTrials = j.value("monte_carlo_trials", p.monteCarloTrials);
    p.rateRhos = j.value("rate_rhos", p.rateRhos);
    p.rateJ = j.value("rate_j", p.rateJ);
    p.lyapunovRho = j.value("lyapunov_rho", p.lyapunovRho);
    p.lyapunovMilestones = j.value("lyapunov_milestones", p.lyapunovMilestones);
    p.milestoneSpacing = j.value("milestone_spacing", p.milestoneSpacing);
    p.lyapunovHorizon = j.value("lyapunov_horizon", p.lyapunovHorizon);
    p.seed = j.value("seed", p.seed);
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, e.what());
  }
}

json theoryReport(const TheoryParams& p) {
  json checks = json::object();
  bool pass = true;
  auto record = [&](const std::string& name, json value, bool ok) {
    value["pass"] = ok;
    checks[name] = std::move(value);
    pass = pass && ok;
  };

  const LinearModel model = p.declaredLipschitz ? LinearModel(p.linearDrift, p.control, *p.declaredLipschitz)
                                                : LinearModel(p.linearDrift, p.control);
  const State x0{0.0};

  {
    const auto rep = validateLemma1Empirically(model, x0, p.lemma1Trials, mixSeed(p.seed, 1));
    ControlSequence lo, hi;
    lo.steps.push_back({ControlInput{p.control.lo}, p.lemma2Horizon});
    hi.steps.push_back({ControlInput{p.control.hi}, p.lemma2Horizon});
    const auto tight = checkPathDivergence(model, x0, lo, hi);
    json v = toJson(rep);
    v["constant_pair"] = toJson(tight);
    record("path_divergence", v, rep.pass() && tight.pass());
  }

  {
    const double w = 2.0;
    const double amp = 0.9 * std::min(std::abs(p.control.lo), std::abs(p.control.hi));
    const ControlFunction sine = [=](double t) { return ControlInput{amp * std::sin(w * t)}; };
    const double T = p.lemma2Horizon;
    const double c = 0.9 * std::min(std::abs(p.control.lo), std::abs(p.control.hi)) / (T * T);
    const ControlFunction poly = [=](double t) { return ControlInput{c * t * t}; };
    struct Case {
      const char* name;
      const ControlFunction* phi;
      double alpha;
    };
    const Case cases[] = {{"sine", &sine, amp * w}, {"quadratic", &poly, 2.0 * c * T}};
    json arr = json::array();
    bool ok = true;
    for (const auto& cs : cases) {
      json entry = {{"control", cs.name}, {"alpha", cs.alpha}};
      json steps = json::array();
      std::vector<double> errors;
      for (double dt : p.lemma2Steps) {
        const auto rep = validateLemma2Empirically(model, x0, *cs.phi, cs.alpha, dt, T);
        ok = ok && rep.pass();
        errors.push_back(rep.maxError);
        steps.push_back(toJson(rep));
      }
      json ratios = json::array();
      for (std::size_t i = 1; i < errors.size(); ++i) {
        const double ratio = errors[i - 1] / errors[i];
        ratios.push_back(ratio);
        ok = ok && ratio >= 1.6 && ratio <= 2.4;
      }
      entry["steps"] = steps;
      entry["error_ratios"] = ratios;
      arr.push_back(entry);
    }
    record("discretization", {{"cases", arr}}, ok);
  }

  {
    json arr = json::array();
    bool ok = true;
    for (std::size_t i = 0; i < p.rhos.size(); ++i) {
      const auto table = recurrenceLowerBound(p.rhos[i], p.maxJ, p.maxK);
      const auto mc = simulateAbstractProcess(p.rhos[i], p.maxJ, p.maxK, p.monteCarloTrials, mixSeed(p.seed, 100 + i));
      const auto dom = checkDominance(table, mc);
      json e = toJson(dom);
      e["rho"] = p.rhos[i];
      arr.push_back(e);
      ok = ok && dom.pass();
    }
    record("recurrence_dominance", {{"trials", p.monteCarloTrials}, {"cases", arr}}, ok);
  }

  {
    json arr = json::array();
    bool ok = true;
    for (double rho : p.rateRhos) {
      const double fit = discreteRateFit(rho, p.rateJ);
      const bool good = std::abs(fit - rho) <= 0.01;
      ok = ok && good;
      arr.push_back({{"rho", rho}, {"fitted", fit}, {"pass", good}});
    }
    record("rate_fit", {{"max_j", p.rateJ}, {"cases", arr}}, ok);
  }

  {
    json arr = json::array();
    bool ok = true;
    const double rho = p.lyapunovRho;
    for (std::size_t k = 1; k <= p.lyapunovMilestones; ++k) {
      const double tk = p.milestoneSpacing * static_cast<double>(k);
      double expected = 1.0;
      double fact = 1.0;
      for (std::size_t i = 1; i <= k; ++i) fact *= static_cast<double>(i);
      expected -= std::pow(rho, static_cast<double>(k)) / fact;
      const double got = qRateBound(k, rho, p.milestoneSpacing, tk);
      const bool good = std::abs(got - expected) <= 1e-9;
      ok = ok && good;
      arr.push_back({{"k", k}, {"value", got}, {"expected", expected}, {"pass", good}});
    }
    record("rate_bound_initial_values", {{"rho", rho}, {"cases", arr}}, ok);
  }

  {
    const auto rep = lyapunovDescentCheck(p.lyapunovRho, p.lyapunovMilestones, p.milestoneSpacing,
                                          p.lyapunovHorizon);
    json v = toJson(rep);
    // The threshold is reported, the descent is what is checked here.
    v.erase("pass");
    record("lyapunov_descent", v, rep.strictlyDecreasing);
  }

  return {{"pass", pass}, {"checks", checks}};
}

}  // namespace ctrlplan
