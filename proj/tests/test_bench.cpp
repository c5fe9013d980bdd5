#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "helpers.hpp"
#include "ctrlplan/bench.hpp"
#include "ctrlplan/config.hpp"

using namespace ctrlplan;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = CTRLPLAN_SOURCE_DIR;

json linearSpecJson() {
  json j = loadJsonFile((kSource / "configs" / "linear.json").string());
  json spec;
  spec["problem"] = j;
  spec["planner"] = j["planner"];
  spec["planner"]["iteration_budget"] = 600;
  spec["planner"]["record_every"] = 50;
  spec["arms"] = json::array({{{"name", "uniform"}, {"strategy", "uniform"}, {"pruning", false}},
                              {{"name", "pruned"}, {"strategy", "uniform"}, {"pruning", true}},
                              {{"name", "rrt"}, {"strategy", "rrt"}, {"pruning", true}}});
  spec["seed_count"] = 8;
  spec["timing"] = false;
  return spec;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Every regular file under `dir`, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return out;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("ctrlplan_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("shipped configs load") {
  for (const char* f : {"cartpole.json", "cartpole_symmetric_force.json", "linear.json"}) {
    const json j = loadJsonFile((kSource / "configs" / f).string());
    const Problem p = problemFromJson(j);
    CHECK_NOTHROW(plannerConfigFromJson(j["planner"]));
    CHECK(p.workspace.isFree(p.initial));
  }
  for (const char* f : {"bench_cartpole.json", "bench_cartpole_dt.json", "bench_cartpole_symmetric_force.json",
                        "bench_cartpole_full.json"}) {
    const auto spec = experimentSpecFromJson(loadJsonFile((kSource / "configs" / f).string()), kSource / "configs");
    CHECK(spec.seeds.size() == 21);
  }
  const auto cp = problemFromJson(loadJsonFile((kSource / "configs" / "cartpole.json").string()));
  CHECK(cp.model->lipschitzConstant() == 155.0);
  CHECK(cp.model->controlBounds()[0].lo == 0.0);
  CHECK(cp.model->controlBounds()[0].hi == 300.0);
}

TEST_CASE("config errors surface as InvalidConfig") {
  json j = loadJsonFile((kSource / "configs" / "linear.json").string());
  auto expectInvalid = [](const json& bad) {
    try {
      problemFromJson(bad);
      FAIL("accepted " << bad.dump());
    } catch (const Error& e) {
      CHECK((e.kind() == ErrorKind::InvalidConfig));
    }
  };
  json bad = j;
  bad["model"]["type"] = "unicycle";
  expectInvalid(bad);
  bad = j;
  bad["workspace"].erase("goal");
  expectInvalid(bad);
  bad = j;
  bad["workspace"]["state_bounds"] = json::array({json::array({1, 0})});
  expectInvalid(bad);
  CHECK_THROWS_AS(plannerConfigFromJson(json{{"strategy", "astar"}}), Error);
  CHECK_THROWS_AS(plannerConfigFromJson(json{{"dt", {{"policy", "normal"}}}}), Error);
  CHECK_THROWS_AS(plannerConfigFromJson(json{{"iteration_budget", "many"}}), Error);
}

TEST_CASE("planner config JSON round trip") {
  PlannerConfig c;
  c.strategy = Strategy::Rrt;
  c.pruning = true;
  c.dt = DtPolicy::uniformSample(2.5);
  c.iterationBudget = 1234;
  c.seed = 99;
  c.radius = {3.0, 0.25};
  const auto back = plannerConfigFromJson(toJson(c));
  CHECK(toJson(back) == toJson(c));
}

TEST_CASE("one arm, one seed: summary equals the run") {
  json j = linearSpecJson();
  j["arms"] = json::array({j["arms"][0]});
  j["seed_count"] = 1;
  const auto spec = experimentSpecFromJson(j);
  const auto res = runExperiment(spec);
  REQUIRE(res.runs.size() == 1);
  const auto& run = res.runs[0];
  const auto& arm = res.summary.arms.at(0);
  REQUIRE(arm.checkpoints.size() == run.records.size());
  for (std::size_t i = 0; i < run.records.size(); ++i) {
    CHECK(arm.checkpoints[i].iteration == run.records[i].iteration);
    if (std::isfinite(run.records[i].bestCost)) {
      CHECK(arm.checkpoints[i].meanBestCost == run.records[i].bestCost);
      CHECK(arm.checkpoints[i].minBestCost == run.records[i].bestCost);
      CHECK(arm.checkpoints[i].maxBestCost == run.records[i].bestCost);
    } else {
      CHECK(std::isnan(arm.checkpoints[i].meanBestCost));
    }
    CHECK(arm.checkpoints[i].meanNodeCount == run.records[i].nodeCount);
  }
}

TEST_CASE("ensemble outputs are byte-identical across repeats and thread counts") {
  json j = linearSpecJson();
  const auto a = scratch("bench_a"), b = scratch("bench_b");
  runExperiment(experimentSpecFromJson(j), a);
  j["parallelism"] = 4;
  runExperiment(experimentSpecFromJson(j), b);
  const auto sa = snapshot(a), sb = snapshot(b);
  CHECK(sa.size() == 2 + 24);
  CHECK(sa == sb);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("summary invariants across checkpoints") {
  const auto res = runExperiment(experimentSpecFromJson(linearSpecJson()));
  for (const auto& arm : res.summary.arms) {
    for (std::size_t i = 1; i < arm.checkpoints.size(); ++i) {
      const auto& prev = arm.checkpoints[i - 1];
      const auto& cur = arm.checkpoints[i];
      CHECK(cur.successFraction >= prev.successFraction);
      // The mean is over solved runs, so it can only be compared while the
      // solved set is unchanged.
      if (cur.solvedRuns == prev.solvedRuns && cur.solvedRuns > 0) CHECK(cur.meanBestCost <= prev.meanBestCost);
      if (cur.solvedRuns > 0) CHECK(cur.minBestCost <= prev.minBestCost);
    }
  }
  for (const auto& r : res.runs) {
    CHECK(r.ok);
    if (r.solutionCost) CHECK(r.solutionAdmissible);
  }
}

TEST_CASE("integration blowups are counted and the runs still finish") {
  json j = linearSpecJson();
  j["problem"]["model"]["a"] = 1000.0;  // blows up on long edges
  j["planner"]["dt"] = {{"policy", "constant"}, {"value", 2.0}};
  j["planner"]["total_iteration_cap"] = 50;
  j["seed_count"] = 2;
  const auto res = runExperiment(experimentSpecFromJson(j));
  CHECK(res.runs.size() == 6);
  for (const auto& r : res.runs) CHECK(r.ok);
  for (const auto& r : res.runs) CHECK(r.stats.blowups > 0);
}

TEST_CASE("plot CSV") {
  const auto res = runExperiment(experimentSpecFromJson(linearSpecJson()));
  SUBCASE("round trip reproduces the summary exactly") {
    for (const auto& arm : res.summary.arms) {
      std::ostringstream out;
      writePlotCsv(out, arm);
      std::istringstream in(out.str());
      const auto rows = readPlotCsv(in);
      REQUIRE(rows.size() == arm.checkpoints.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& c = arm.checkpoints[i];
        CHECK(rows[i].checkpoint == c.iteration);
        auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
        CHECK(same(rows[i].mean, c.meanBestCost));
        CHECK(same(rows[i].min, c.minBestCost));
        CHECK(same(rows[i].max, c.maxBestCost));
        CHECK(rows[i].successFraction == c.successFraction);
      }
    }
  }
  SUBCASE("fixed five columns, one file per arm") {
    const auto dir = scratch("plot");
    const auto files = emitPlotData(res.summary, dir);
    CHECK(files.size() == 3);
    for (const auto& f : files) {
      std::ifstream in(f);
      std::string line;
      while (std::getline(in, line)) CHECK(std::count(line.begin(), line.end(), ',') == 4);
    }
    fs::remove_all(dir);
    std::istringstream extra("checkpoint,mean,min,max,success_fraction\n1,2,3,4,5,6\n");
    CHECK_THROWS(readPlotCsv(extra));
  }
  SUBCASE("single checkpoint gives a single row") {
    ArmSummary one{"x", {CheckpointStat{}}};
    std::ostringstream out;
    writePlotCsv(out, one);
    std::istringstream in(out.str());
    CHECK(readPlotCsv(in).size() == 1);
  }
}

TEST_CASE("theory report") {
  SUBCASE("defaults pass") {
    const json r = theoryReport(TheoryParams{});
    CHECK(r["pass"].get<bool>());
    for (const auto& [name, check] : r["checks"].items()) CHECK_MESSAGE(check["pass"].get<bool>(), name);
  }
  SUBCASE("under-declared Lipschitz constant fails the divergence check") {
    TheoryParams p;
    p.declaredLipschitz = 0.5;
    p.lemma1Trials = 200;
    const json r = theoryReport(p);
    CHECK_FALSE(r["pass"].get<bool>());
    CHECK_FALSE(r["checks"]["path_divergence"]["pass"].get<bool>());
  }
  SUBCASE("parameters load from JSON") {
    const auto p = theoryParamsFromJson(json{{"rhos", {0.1}}, {"max_j", 50}, {"declared_lipschitz", 2.0}});
    CHECK(p.rhos == std::vector<double>{0.1});
    CHECK(p.maxJ == 50);
    CHECK(*p.declaredLipschitz == 2.0);
  }
}
