#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsattr/analysis.hpp"
#include "tsattr/attribution.hpp"
#include "tsattr/datagen.hpp"
#include "tsattr/network.hpp"
#include "tsattr/perturbation.hpp"
#include "tsattr/trainer.hpp"

namespace tsattr {

enum class Stage { Gen, Train, Attribute, Perturb, Score, Report };

inline constexpr Stage kAllStages[] = {Stage::Gen,     Stage::Train, Stage::Attribute,
                                       Stage::Perturb, Stage::Score, Stage::Report};

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view name);
// "gen", "train,attribute", "all".
std::vector<Stage> parse_stage_list(std::string_view text);

// Environment variable naming the default output root.
inline constexpr const char* kOutEnvVar = "TSATTR_OUT";

struct ExperimentConfig {
  std::vector<DatasetConfig> datasets;
  TrainConfig train;
  std::vector<Architecture> models{Architecture{}};
  AttributionOptions attribution;
  std::vector<Method> methods{Method::GR, Method::IG, Method::FO};
  std::vector<Strategy> strategies{Strategy::Zero, Strategy::Gaussian};
  GaussianMode gaussian_mode = GaussianMode::Frozen;
  CorrelationMode correlation = CorrelationMode::CellAveraged;
  std::filesystem::path out_dir = "tsattr-out";
  std::uint64_t master_seed = 0;
  int jobs = 1;
  bool force = false;

  // The eight-dataset grid with every other setting at its default.
  static ExperimentConfig defaults(std::uint64_t master_seed = 0);

  // Keys absent from the JSON keep their defaults. "datasets" is a list of
  // {contrast, feature[, base_seed, n_train, n_val, n_test]} objects;
  // "split_sizes" overrides {train, val, test} for every dataset. The grid is
  // derived after the master seed is known, so "master_seed" also reseeds it
  // unless a base_seed is given. to_json() writes explicit seeds and sizes.
  static ExperimentConfig from_json(std::string_view text);
  std::string to_json() const;

  // Re-derives dataset seeds from master_seed when they were not pinned.
  void set_master_seed(std::uint64_t seed);

  void validate() const;

 private:
  bool pinned_dataset_seeds_ = false;
  int split_train_ = -1, split_val_ = -1, split_test_ = -1;
  std::vector<std::pair<Contrast, FeatureKind>> grid_;
  void rebuild_datasets();
};

// Seeds. Every (stage, dataset, model) unit gets
//   mix_seed(mix_seed(master, stage_tag), dataset_index * 64 + model_index)
// with stage tags 1 (train) and 3 (perturb). Training splits this into a
// weight-init stream (tag 0) and a shuffle stream (tag 1); perturbation mixes
// in the instance id so Gaussian replacements are shared by every method and
// by both orderings of an instance.
std::uint64_t unit_seed(std::uint64_t master, Stage stage, std::size_t dataset_index, std::size_t model_index);
std::uint64_t gaussian_seed(std::uint64_t master, std::size_t dataset_index, std::size_t model_index,
                            int instance_id);

struct StageSummary {
  Stage stage = Stage::Gen;
  int units = 0;     // work units considered
  int skipped = 0;   // up to date according to the manifest
  int written = 0;   // artifact files whose bytes changed
};

struct RunSummary {
  std::vector<StageSummary> stages;
  int artifacts_written() const;
};

using LogFn = std::function<void(std::string_view)>;

// Output layout under out_dir:
//   datasets/<dataset>/{config.json,train.csv,val.csv,test.csv}
//   models/<model>/<dataset>/{checkpoint.json,train_report.json}
//   attributions/<model>/<dataset>/<method>.csv
//   perturbations/<model>/<dataset>/<method>_<strategy>.csv
//   scores/eval_records.csv
//   report/{model_performance,auc_pr_table,ds_table,class_means,correlations}.csv
//   manifests/<stage>.json
// A unit is skipped when its manifest entry matches the current parameters
// and input hashes and its outputs are intact, unless force is set. Stage
// failures are rethrown as StageError naming the stage.
RunSummary run_experiment(const ExperimentConfig& config, std::span<const Stage> stages, const LogFn& log = {},
                          const EpochCallback& on_epoch = {});

// Paths used by the runner.
namespace layout {
std::filesystem::path dataset_dir(const ExperimentConfig& c, const DatasetConfig& d);
std::filesystem::path model_dir(const ExperimentConfig& c, const Architecture& a, const DatasetConfig& d);
std::filesystem::path attribution_file(const ExperimentConfig& c, const Architecture& a, const DatasetConfig& d,
                                       Method m);
std::filesystem::path perturbation_file(const ExperimentConfig& c, const Architecture& a, const DatasetConfig& d,
                                        Method m, Strategy s);
std::filesystem::path records_file(const ExperimentConfig& c);
std::filesystem::path report_dir(const ExperimentConfig& c);
std::filesystem::path manifest_file(const ExperimentConfig& c, Stage s);
}  // namespace layout

}  // namespace tsattr
