#pragma once

#include <string>
#include <vector>

#include "mavtrack/harness.hpp"

namespace mavtrack {

struct BenchCell {
  std::string name;
  EpisodeConfig config;
};

struct BenchSuite {
  std::vector<BenchCell> cells;
  int runs = 20;
  std::uint64_t seed0 = 1;
};

struct CellResult {
  std::string name;
  ScoreTabled table;
  int aborted = 0;
  int collisions = 0;
  bool flagged = false;  // any aborted episode
};

/// Runs every (cell, seed0..seed0+runs-1) episode and aggregates per cell.
/// Results are independent of `jobs`; episodes only parallelize across.
std::vector<CellResult> run_benchmark(const BenchSuite& suite, int jobs = 1);

std::string scores_csv(const std::vector<CellResult>& results);
std::string scores_markdown(const std::vector<CellResult>& results);

BenchSuite suite_from_json(const nlohmann::json& j);
BenchSuite load_suite(const std::string& path);

}  // namespace mavtrack
