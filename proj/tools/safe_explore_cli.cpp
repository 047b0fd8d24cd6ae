// safe-explore: command-line front end over the C interface.

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "safe_explore/safe_explore.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

int report(se_status status, const std::string& context) {
  std::cerr << "safe-explore: " << context << ": " << se_status_string(status) << ": "
            << se_last_error() << '\n';
  return status == SE_ERR_CONFIG ? kExitConfig : kExitRuntime;
}

std::optional<std::uint64_t> parse_u64(const std::string& text) {
  if (text.empty() || text[0] == '-') return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 0);
  if (errno != 0 || *end != '\0') return std::nullopt;
  return static_cast<std::uint64_t>(v);
}

// Command-line --seed wins over SAFE_EXPLORE_SEED, which wins over the config.
int apply_seed(se_config* cfg, const std::optional<std::string>& flag) {
  std::optional<std::string> text = flag;
  std::string source = "--seed";
  if (!text) {
    if (const char* env = std::getenv("SAFE_EXPLORE_SEED")) {
      text = env;
      source = "SAFE_EXPLORE_SEED";
    }
  }
  if (!text) return kExitOk;
  const auto seed = parse_u64(*text);
  if (!seed) {
    std::cerr << "safe-explore: " << source << " is not an unsigned integer: '" << *text << "'\n";
    return kExitConfig;
  }
  se_config_set_seed(cfg, *seed);
  return kExitOk;
}

struct ConfigHandle {
  se_config* ptr = nullptr;
  ~ConfigHandle() { se_config_free(ptr); }
};
struct EnvHandle {
  se_env* ptr = nullptr;
  ~EnvHandle() { se_env_free(ptr); }
};
struct ResultHandle {
  se_result* ptr = nullptr;
  ~ResultHandle() { se_result_free(ptr); }
};

void print_env_summary(const se_env* env, std::ostream& os) {
  se_env_info info{};
  se_env_info_get(env, &info);
  os << "grid " << info.rows << "x" << info.cols << ", horizon " << info.horizon
     << ", threshold " << info.threshold << "\n"
     << "initial safe state " << info.start_state << " (row " << info.start_state / info.cols
     << ", col " << info.start_state % info.cols << "), " << info.initial_safe_count
     << " state(s) in the initial safe set\n"
     << "safety range [" << info.min_safety << ", " << info.max_safety << "]\n";
}

int cmd_generate_env(const std::string& config_path, const std::optional<std::string>& seed,
                     const std::optional<std::string>& out_path, int run_index) {
  ConfigHandle cfg;
  if (auto s = se_config_load(config_path.c_str(), &cfg.ptr); s != SE_OK)
    return report(s, "loading " + config_path);
  if (int rc = apply_seed(cfg.ptr, seed); rc != kExitOk) return rc;

  EnvHandle env;
  if (auto s = se_env_from_config(cfg.ptr, run_index, &env.ptr); s != SE_OK)
    return report(s, "building the environment");
  const std::string out = out_path ? *out_path : "env.csv";
  if (auto s = se_env_write_csv(env.ptr, out.c_str()); s != SE_OK) return report(s, "writing " + out);
  std::cout << "wrote " << out << " (seed " << se_config_seed(cfg.ptr) << ", run " << run_index
            << ")\n";
  print_env_summary(env.ptr, std::cout);
  return kExitOk;
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& seed,
            const std::optional<std::string>& policies, std::optional<int> runs,
            std::optional<int> workers, const std::optional<std::string>& output_dir) {
  ConfigHandle cfg;
  if (auto s = se_config_load(config_path.c_str(), &cfg.ptr); s != SE_OK)
    return report(s, "loading " + config_path);
  if (int rc = apply_seed(cfg.ptr, seed); rc != kExitOk) return rc;
  if (policies) {
    if (auto s = se_config_select_policies(cfg.ptr, policies->c_str()); s != SE_OK)
      return report(s == SE_ERR_INVALID_ARGUMENT ? SE_ERR_CONFIG : s, "--policies");
  }
  if (runs) {
    if (auto s = se_config_set_runs(cfg.ptr, *runs); s != SE_OK) return report(s, "--runs");
  }
  if (workers) {
    if (auto s = se_config_set_workers(cfg.ptr, *workers); s != SE_OK) return report(s, "--workers");
  }
  if (output_dir) se_config_set_output_dir(cfg.ptr, output_dir->c_str());

  ResultHandle result;
  if (auto s = se_experiment_run(cfg.ptr, &result.ptr); s != SE_OK)
    return report(s, "running the experiment");
  const char* path = se_result_summary_path(result.ptr);
  std::ifstream in(path, std::ios::binary);
  std::cout << in.rdbuf();
  std::cerr << "summary written to " << path << '\n';
  return kExitOk;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int cmd_ingest_terrain(const std::string& frames_arg, int steps, double h, const std::string& out) {
  const auto frames = split_list(frames_arg);
  if (frames.size() < 2) {
    std::cerr << "safe-explore: --frames needs at least two comma-separated files\n";
    return kExitConfig;
  }
  std::vector<const char*> ptrs;
  for (const auto& f : frames) ptrs.push_back(f.c_str());
  EnvHandle env;
  if (auto s = se_env_load_terrain(ptrs.data(), ptrs.size(), steps, h, &env.ptr); s != SE_OK)
    return report(s, "ingesting terrain");
  if (auto s = se_env_write_csv(env.ptr, out.c_str()); s != SE_OK) return report(s, "writing " + out);
  const std::string meta = out + ".meta.json";
  if (auto s = se_env_write_meta(env.ptr, meta.c_str()); s != SE_OK)
    return report(s, "writing " + meta);

  se_normalization norm{};
  se_env_normalization(env.ptr, &norm);
  std::cout << "wrote " << out << " and " << meta << "\n"
            << "normalization [" << norm.input_min << ", " << norm.input_max << "] -> ["
            << norm.output_min << ", " << norm.output_max << "]\n";
  print_env_summary(env.ptr, std::cout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe exploration of grid worlds with time-varying safety"};
  app.require_subcommand(1);
  app.set_version_flag("--version", se_version());

  auto* gen = app.add_subcommand("generate-env", "Generate a random environment and write it as CSV");
  std::string gen_config;
  std::optional<std::string> gen_seed, gen_out;
  int gen_run = 0;
  gen->add_option("--config", gen_config, "Experiment config (JSON)")->required();
  gen->add_option("--seed", gen_seed, "Base seed (overrides config and SAFE_EXPLORE_SEED)");
  gen->add_option("--out", gen_out, "Output CSV (default env.csv)");
  gen->add_option("--run", gen_run, "Run index whose environment to generate")
      ->check(CLI::NonNegativeNumber);

  auto* run = app.add_subcommand("run", "Run the configured policies and write metrics");
  std::string run_config;
  std::optional<std::string> run_seed, run_policies, run_out;
  std::optional<int> run_runs, run_workers;
  run->add_option("--config", run_config, "Experiment config (JSON)")->required();
  run->add_option("--policies", run_policies, "Comma-separated subset of the configured policies");
  run->add_option("--runs", run_runs, "Number of Monte-Carlo runs");
  run->add_option("--workers", run_workers, "Worker threads");
  run->add_option("--seed", run_seed, "Base seed (overrides config and SAFE_EXPLORE_SEED)");
  run->add_option("--output-dir", run_out, "Output directory (overrides config)");

  auto* ingest = app.add_subcommand("ingest-terrain", "Build an environment from grayscale frames");
  // --h is the threshold here, so help is only reachable as --help.
  ingest->set_help_flag("--help", "Print this help message and exit");
  std::string frames, ingest_out;
  int steps = 0;
  double h = 0.0;
  ingest->add_option("--frames", frames, "Comma-separated PGM or CSV frames, ordered by time")
      ->required();
  ingest->add_option("--steps", steps, "Number of time slices")->required();
  ingest->add_option("--h", h, "Safety threshold")->required();
  ingest->add_option("--out", ingest_out, "Output environment CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  if (*gen) return cmd_generate_env(gen_config, gen_seed, gen_out, gen_run);
  if (*run) return cmd_run(run_config, run_seed, run_policies, run_runs, run_workers, run_out);
  if (*ingest) return cmd_ingest_terrain(frames, steps, h, ingest_out);
  return kExitConfig;
}
