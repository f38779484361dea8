#include "mavtrack/benchmark.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace mavtrack {

using nlohmann::json;

std::vector<CellResult> run_benchmark(const BenchSuite& suite, int jobs) {
  if (suite.cells.empty()) throw std::invalid_argument("run_benchmark: empty suite");
  if (suite.runs < 1) throw std::invalid_argument("run_benchmark: runs must be >= 1");

  struct Task {
    int cell;
    int run;
  };
  std::vector<Task> tasks;
  for (int c = 0; c < static_cast<int>(suite.cells.size()); ++c)
    for (int r = 0; r < suite.runs; ++r) tasks.push_back({c, r});

  std::vector<std::vector<EpisodeLog>> logs(suite.cells.size(),
                                            std::vector<EpisodeLog>(static_cast<std::size_t>(suite.runs)));
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task t = tasks[i];
      logs[t.cell][t.run] = run_episode(suite.cells[t.cell].config, suite.seed0 + t.run);
    }
  };
  const int n_threads = std::max(1, jobs);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<CellResult> out;
  for (std::size_t c = 0; c < suite.cells.size(); ++c) {
    CellResult res;
    res.name = suite.cells[c].name;
    std::vector<std::vector<ScoreSampled>> runs;
    for (const auto& log : logs[c]) {
      runs.push_back(log.padded_scores());
      if (log.reason == TerminationReason::aborted) ++res.aborted;
      if (log.reason == TerminationReason::collision) ++res.collisions;
    }
    res.table = aggregate(runs);
    res.flagged = res.aborted > 0;
    out.push_back(std::move(res));
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string scores_csv(const std::vector<CellResult>& results) {
  std::ostringstream os;
  os << "scenario,P_theta,P_phi,P_rho,P_c,runs,steps,collisions,aborted\n";
  for (const auto& r : results) {
    os << r.name << "," << fmt(r.table.p_theta) << "," << fmt(r.table.p_phi) << ","
       << fmt(r.table.p_rho) << "," << fmt(r.table.p_c) << "," << r.table.runs << "," << r.table.steps
       << "," << r.collisions << "," << r.aborted << "\n";
  }
  return os.str();
}

std::string scores_markdown(const std::vector<CellResult>& results) {
  std::size_t w = 8;
  for (const auto& r : results) w = std::max(w, r.name.size());
  std::ostringstream os;
  const auto pad = [&](const std::string& s, std::size_t n) {
    std::string out = s;
    out.resize(std::max(n, s.size()), ' ');
    return out;
  };
  os << "| " << pad("Scenario", w) << " | P_theta  | P_phi    | P_rho    | P_c      |\n";
  os << "|-" << std::string(w, '-') << "-|----------|----------|----------|----------|\n";
  for (const auto& r : results) {
    os << "| " << pad(r.name, w) << " | " << fmt(r.table.p_theta) << " | " << fmt(r.table.p_phi)
       << " | " << fmt(r.table.p_rho) << " | " << fmt(r.table.p_c) << " |";
    if (r.flagged) os << "  (aborted runs: " << r.aborted << ")";
    os << "\n";
  }
  return os.str();
}

BenchSuite suite_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError({"suite: expected an object"});
  for (const auto& [key, _] : j.items())
    if (key != "runs" && key != "seed0" && key != "cells")
      throw ConfigError({"suite." + key + ": unknown key"});
  BenchSuite suite;
  if (j.contains("runs")) suite.runs = j.at("runs").get<int>();
  if (j.contains("seed0")) suite.seed0 = j.at("seed0").get<std::uint64_t>();
  if (!j.contains("cells") || !j.at("cells").is_array() || j.at("cells").empty())
    throw ConfigError({"suite.cells: must be a non-empty array"});
  for (const auto& cell : j.at("cells")) {
    if (!cell.is_object() || !cell.contains("name") || !cell.contains("config"))
      throw ConfigError({"suite.cells: each cell needs 'name' and 'config'"});
    BenchCell out;
    out.name = cell.at("name").get<std::string>();
    out.config = config_from_json(cell.at("config"));
    suite.cells.push_back(std::move(out));
  }
  if (suite.runs < 1) throw ConfigError({"suite.runs: must be >= 1"});
  return suite;
}

BenchSuite load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open suite file: " + path});
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("parse error: ") + e.what()});
  }
  return suite_from_json(j);
}

}  // namespace mavtrack
