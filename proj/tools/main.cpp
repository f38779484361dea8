#include <CLI11.hpp>

#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>

#include "mavtrack/benchmark.hpp"
#include "mavtrack/server.hpp"

namespace fs = std::filesystem;
using namespace mavtrack;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

// Paths that do not resolve directly are also tried under
// $MAVTRACK_CONFIG_DIR.
std::string resolve_config_path(const std::string& path) {
  if (path.empty() || fs::exists(path)) return path;
  if (const char* dir = std::getenv("MAVTRACK_CONFIG_DIR")) {
    const fs::path candidate = fs::path(dir) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

EpisodeConfig load_or_default(const std::string& path) {
  if (path.empty()) return config_from_json(nlohmann::json::object());
  return load_config(resolve_config_path(path));
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

int cmd_run(const std::string& config_path, std::uint64_t seed, const std::string& out_path,
            const std::string& csv_path) {
  EpisodeConfig cfg;
  try {
    cfg = load_or_default(config_path);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitValidation;
  }
  EpisodeLog log;
  try {
    log = run_episode(cfg, seed);
  } catch (const std::exception& e) {
    std::cerr << "episode failed: " << e.what() << "\n";
    return kExitRuntime;
  }
  if (!out_path.empty()) write_file(out_path, log.to_ndjson());
  if (!csv_path.empty()) write_file(csv_path, log.to_csv());

  const auto table = aggregate(std::vector<std::vector<ScoreSampled>>{log.padded_scores()});
  std::cout << "episode: seed=" << log.seed << " steps=" << log.records.size() << "/" << log.nominal_steps
            << " reason=" << to_string(log.reason) << "\n"
            << "scores:  P_theta=" << table.p_theta << " P_phi=" << table.p_phi
            << " P_rho=" << table.p_rho << " P_c=" << table.p_c << "\n";
  return log.reason == TerminationReason::aborted ? kExitRuntime : kExitOk;
}

int cmd_bench(const std::string& suite_path, int runs_override, const std::string& out_dir,
              const std::string& format, int jobs, std::uint64_t seed_override, bool has_seed) {
  BenchSuite suite;
  try {
    suite = load_suite(resolve_config_path(suite_path));
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitValidation;
  }
  if (runs_override > 0) suite.runs = runs_override;
  if (has_seed) suite.seed0 = seed_override;

  std::vector<CellResult> results;
  try {
    results = run_benchmark(suite, jobs);
  } catch (const std::exception& e) {
    std::cerr << "benchmark failed: " << e.what() << "\n";
    return kExitRuntime;
  }
  const std::string table = format == "md" ? scores_markdown(results) : scores_csv(results);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const std::string name = format == "md" ? "scores.md" : "scores.csv";
    write_file((fs::path(out_dir) / name).string(), table);
  }
  std::cout << table;
  return kExitOk;
}

int cmd_serve(const std::string& config_path, const std::string& listen, bool stdio,
              const std::string& log_dir) {
  EpisodeConfig cfg;
  try {
    cfg = load_or_default(config_path);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitValidation;
  }

  EpisodeCallback on_episode;
  if (!log_dir.empty()) {
    fs::create_directories(log_dir);
    auto counter = std::make_shared<std::atomic<int>>(0);
    on_episode = [log_dir, counter](const EpisodeLog& log) {
      const int n = ++*counter;
      const auto path = fs::path(log_dir) / ("episode-" + std::to_string(n) + ".ndjson");
      std::ofstream out(path, std::ios::binary);
      out << log.to_ndjson();
    };
  }

  if (stdio) {
    serve_stdio(cfg, std::cin, std::cout, on_episode);
    return kExitOk;
  }

  std::string host = "127.0.0.1";
  int port = 0;
  if (const auto colon = listen.rfind(':'); colon != std::string::npos) {
    host = listen.substr(0, colon);
    port = std::atoi(listen.c_str() + colon + 1);
  } else if (!listen.empty()) {
    port = std::atoi(listen.c_str());
  }
  try {
    BridgeServer server(cfg, host, port);
    server.set_episode_callback(on_episode);
    const int bound = server.start();
    std::cout << "listening on " << host << ":" << bound << "\n" << std::flush;
    std::mutex m;
    std::condition_variable cv;
    std::unique_lock lock(m);
    cv.wait(lock, [] { return false; });  // run until killed
  } catch (const std::exception& e) {
    std::cerr << "serve failed: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_validate(const std::string& config_path) {
  try {
    const EpisodeConfig cfg = load_or_default(config_path);
    std::cout << "ok: config hash " << config_hash(cfg) << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MAV visual target tracking: simulation, baselines, benchmark and bridge"};
  app.require_subcommand(1);

  std::string config_path, out_path, csv_path;
  std::uint64_t seed = 1;
  auto* run = app.add_subcommand("run", "run one episode with the configured controller");
  run->add_option("--config", config_path, "episode config (JSON)");
  run->add_option("--seed", seed, "episode seed");
  run->add_option("--out", out_path, "write the episode log (NDJSON)");
  run->add_option("--csv", csv_path, "write the episode log (CSV)");

  std::string suite_path, out_dir, format = "csv";
  int runs = 0, jobs = 1;
  std::uint64_t bench_seed = 0;
  auto* bench = app.add_subcommand("bench", "run a benchmark suite and emit score tables");
  bench->add_option("--suite", suite_path, "suite file (JSON)")->required();
  bench->add_option("--runs", runs, "override runs per cell");
  bench->add_option("--out-dir", out_dir, "directory for the score table");
  bench->add_option("--format", format, "csv|md")->check(CLI::IsMember({"csv", "md"}));
  bench->add_option("--jobs", jobs, "worker threads");
  auto* seed_opt = bench->add_option("--seed", bench_seed, "override the suite base seed");

  std::string listen = "127.0.0.1:0", log_dir;
  bool stdio = false;
  auto* serve = app.add_subcommand("serve", "serve the policy bridge");
  serve->add_option("--config", config_path, "episode config (JSON)");
  serve->add_option("--listen", listen, "host:port (port 0 = ephemeral)");
  serve->add_flag("--stdio", stdio, "single session on stdin/stdout");
  serve->add_option("--log-dir", log_dir, "write finished episode logs here");

  auto* validate = app.add_subcommand("validate", "validate a config file");
  validate->add_option("--config", config_path, "episode config (JSON)");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(config_path, seed, out_path, csv_path);
  if (bench->parsed()) return cmd_bench(suite_path, runs, out_dir, format, jobs, bench_seed, seed_opt->count() > 0);
  if (serve->parsed()) return cmd_serve(config_path, listen, stdio, log_dir);
  if (validate->parsed()) return cmd_validate(config_path);
  return kExitValidation;
}
