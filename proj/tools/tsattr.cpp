// Command-line driver for the attribution evaluation pipeline.
//
//   tsattr run --out results --jobs 4
//   tsattr run --only gen,train --seed 7
//   tsattr attribute --config experiment.json --force

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>

#include "tsattr/errors.hpp"
#include "tsattr/experiment.hpp"
#include "tsattr/io.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
  std::optional<int> jobs;
  std::string only;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "Experiment configuration (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--out", o.out, std::string("Output directory (default: $") + tsattr::kOutEnvVar + " or tsattr-out)");
  cmd->add_flag("--force", o.force, "Recompute even when artifacts are up to date");
  cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("-q,--quiet", o.quiet, "Only print the summary");
}

tsattr::ExperimentConfig resolve(const CommonOptions& o) {
  auto config = o.config_path.empty() ? tsattr::ExperimentConfig::defaults()
                                      : tsattr::ExperimentConfig::from_json(tsattr::io::read_file(o.config_path));
  if (o.seed) config.set_master_seed(*o.seed);
  if (!o.out.empty()) {
    config.out_dir = o.out;
  } else if (const char* env = std::getenv(tsattr::kOutEnvVar); env && *env) {
    config.out_dir = env;
  }
  if (o.jobs) config.jobs = *o.jobs;
  config.force = config.force || o.force;
  return config;
}

int execute(const CommonOptions& o, std::vector<tsattr::Stage> stages) {
  const auto config = resolve(o);
  const bool training = std::find(stages.begin(), stages.end(), tsattr::Stage::Train) != stages.end();
  tsattr::LogFn log;
  tsattr::EpochCallback on_epoch;
  if (!o.quiet) {
    log = [](std::string_view msg) { std::cout << msg << '\n' << std::flush; };
    if (training) {
      on_epoch = [](const tsattr::EpochStats& e) {
        if (e.epoch == 1) std::printf("  %5s %10s %10s %9s %10s %9s\n", "epoch", "lr", "train_loss", "train_acc",
                                      "val_loss", "val_acc");
        std::printf("  %5d %10.3e %10.5f %9.4f %10.5f %9.4f\n", e.epoch, e.learning_rate, e.train_loss,
                    e.train_accuracy, e.val_loss, e.val_accuracy);
        std::fflush(stdout);
      };
    }
  }
  const auto summary = tsattr::run_experiment(config, stages, log, on_epoch);
  for (const auto& s : summary.stages) {
    std::cout << to_string(s.stage) << ": " << s.units << " unit(s), " << s.skipped << " up to date, " << s.written
              << " artifact(s) written\n";
  }
  std::cout << "total artifacts written: " << summary.artifacts_written() << " (" << config.out_dir.string()
            << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic time-series attribution evaluation"};
  app.require_subcommand(1);

  CommonOptions opts;
  struct Single {
    const char* name;
    tsattr::Stage stage;
    const char* help;
  };
  const Single singles[] = {
      {"gen", tsattr::Stage::Gen, "Generate the synthetic datasets"},
      {"train", tsattr::Stage::Train, "Train one classifier per dataset and model"},
      {"attribute", tsattr::Stage::Attribute, "Compute attributions on the test splits"},
      {"perturb", tsattr::Stage::Perturb, "Run MoRF/LeRF perturbation curves"},
      {"score", tsattr::Stage::Score, "Compute AUC-PR' and DS per instance"},
      {"report", tsattr::Stage::Report, "Write the summary tables"},
  };
  std::optional<tsattr::Stage> chosen;
  for (const auto& s : singles) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, opts);
    cmd->callback([&chosen, stage = s.stage] { chosen = stage; });
  }
  auto* run = app.add_subcommand("run", "Run the pipeline end to end");
  add_common(run, opts);
  run->add_option("--only", opts.only, "Stage or comma-separated stages to run (default: all)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (chosen) return execute(opts, {*chosen});
    return execute(opts, tsattr::parse_stage_list(opts.only.empty() ? "all" : opts.only));
  } catch (const tsattr::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
