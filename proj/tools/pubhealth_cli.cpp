// Command-line driver for the curation and evaluation pipeline.
//
//   pubhealth_cli <curate|rank|predict|explain|cohere|report|all>
//       --config <path> [--seed <int>] [--backend <url|stub>] [--out <dir>]
//
// Exit status: 0 on success, 1 when a stage fails, 2 on a configuration
// error. Failures also leave error.json in the output directory.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pubhealth/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitStageFailure = 1;
constexpr int kExitConfigError = 2;

struct Options {
  std::string config;
  std::optional<long long> seed;
  std::string backend;
  std::string out = "pubhealth_out";
};

int run(const std::string& command, const Options& opts) {
  using namespace pubhealth;
  PipelineConfig cfg;
  try {
    cfg = load_config(opts.config);
    if (const char* env = std::getenv(kBackendUrlEnv); env && *env) cfg.backend = env;
    if (!opts.backend.empty()) cfg.backend = opts.backend;
    if (opts.seed) {
      if (*opts.seed < 0) throw Error(ErrorCode::ConfigError, "--seed must be >= 0");
      cfg.seed = static_cast<std::uint64_t>(*opts.seed);
    }
    cfg.validate();
  } catch (const Error& e) {
    std::cerr << "pubhealth: " << e.what() << "\n";
    try {
      write_error_record(opts.out, "config", e);
    } catch (const Error&) {
    }
    return kExitConfigError;
  }

  std::vector<Stage> stages;
  if (command == "all") {
    stages.assign(kAllStages.begin(), kAllStages.end());
  } else {
    stages.push_back(*parse_stage(command));
  }

  try {
    Pipeline pipeline(cfg, opts.out);
    pipeline.run(stages);
  } catch (const StageError& e) {
    std::cerr << "pubhealth: " << e.what() << "\n";
    write_error_record(opts.out, to_string(e.stage()), e);
    return e.code() == ErrorCode::ConfigError ? kExitConfigError : kExitStageFailure;
  } catch (const Error& e) {
    std::cerr << "pubhealth: " << e.what() << "\n";
    write_error_record(opts.out, command, e);
    return e.code() == ErrorCode::ConfigError ? kExitConfigError : kExitStageFailure;
  }
  std::cout << "pubhealth: " << command << " finished; artifacts in " << opts.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Public-health claim curation, veracity and explanation evaluation"};
  app.require_subcommand(1, 1);

  Options opts;
  std::string command;
  std::vector<std::string> names = {"curate", "rank", "predict", "explain", "cohere", "report", "all"};
  for (const auto& name : names) {
    auto* sub = app.add_subcommand(name, name == "all" ? "Run every stage in order" : "Run the " + name + " stage");
    sub->add_option("--config", opts.config, "Pipeline configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", opts.seed, "Override the split seed");
    sub->add_option("--backend", opts.backend,
                    std::string("'stub' or the inference service URL; overrides ") + pubhealth::kBackendUrlEnv);
    sub->add_option("--out", opts.out, "Output directory for artifacts")->capture_default_str();
    sub->callback([&command, name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }
  return run(command, opts);
}
