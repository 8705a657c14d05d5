#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <set>

#include "tsattr/errors.hpp"
#include "tsattr/experiment.hpp"
#include "tsattr/io.hpp"

using namespace tsattr;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config(const fs::path& out) {
  auto c = ExperimentConfig::from_json(R"({
    "datasets": [{"contrast": "amplitude", "feature": "sine"}, {"contrast": "length", "feature": "pulse"}],
    "split_sizes": {"train": 24, "val": 8, "test": 6},
    "train": {"max_epochs": 2, "patience": 1, "batch_size": 8},
    "attribution": {"ig_steps": 4}
  })");
  c.out_dir = out;
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("tsattr_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Stages, ParseList) {
  EXPECT_EQ(parse_stage_list("gen"), (std::vector<Stage>{Stage::Gen}));
  EXPECT_EQ(parse_stage_list("score,gen,gen"), (std::vector<Stage>{Stage::Gen, Stage::Score}));
  EXPECT_EQ(parse_stage_list("all").size(), 6u);
  EXPECT_THROW(parse_stage_list("bogus"), InvalidInput);
  for (Stage s : kAllStages) EXPECT_EQ(parse_stage(to_string(s)), s);
}

TEST(ExperimentConfig, DefaultsReproduceGrid) {
  const auto c = ExperimentConfig::defaults(3);
  ASSERT_EQ(c.datasets.size(), 8u);
  std::set<std::string> ids;
  for (const auto& d : c.datasets) ids.insert(d.id());
  EXPECT_EQ(ids.size(), 8u);
  EXPECT_EQ(c.methods.size(), 3u);
  EXPECT_EQ(c.strategies.size(), 2u);
  EXPECT_EQ(c.models.size(), 1u);
  EXPECT_EQ(c.datasets[0].base_seed, 3u);
  EXPECT_EQ(c.datasets[1].base_seed, 103u);
  EXPECT_NO_THROW(c.validate());
}

TEST(ExperimentConfig, SeedOverrideReseedsDatasets) {
  auto c = ExperimentConfig::defaults(0);
  c.set_master_seed(50);
  EXPECT_EQ(c.master_seed, 50u);
  EXPECT_EQ(c.datasets[2].base_seed, 250u);
  const auto j = ExperimentConfig::from_json(R"({"master_seed": 9, "split_sizes": {"train": 10, "val": 4, "test": 4}})");
  EXPECT_EQ(j.datasets[0].base_seed, 9u);
  EXPECT_EQ(j.datasets[0].n_train, 10);
}

TEST(ExperimentConfig, JsonRoundTripKeepsSettings) {
  auto c = tiny_config("x");
  c.gaussian_mode = GaussianMode::Resample;
  const auto back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.datasets, c.datasets);
  EXPECT_EQ(back.attribution.ig_steps, 4);
  EXPECT_EQ(back.train.max_epochs, 2);
  EXPECT_EQ(back.gaussian_mode, GaussianMode::Resample);
  EXPECT_EQ(back.out_dir, c.out_dir);
}

TEST(Seeds, DistinctPerUnitAndInstance) {
  std::set<std::uint64_t> seeds;
  for (std::size_t d = 0; d < 8; ++d) {
    seeds.insert(unit_seed(0, Stage::Train, d, 0));
    seeds.insert(unit_seed(0, Stage::Perturb, d, 0));
    for (int i = 0; i < 10; ++i) seeds.insert(gaussian_seed(0, d, 0, i));
  }
  EXPECT_EQ(seeds.size(), 8u * 12u);
}

TEST(Runner, OnlyGenProducesDatasetsAndNoCheckpoints) {
  auto c = ExperimentConfig::defaults(0);
  c.out_dir = fresh_dir("gen_only");
  const Stage only[] = {Stage::Gen};
  const auto summary = run_experiment(c, only);
  EXPECT_EQ(summary.artifacts_written(), 8 * 4);
  int dirs = 0;
  for (const auto& e : fs::directory_iterator(c.out_dir / "datasets")) dirs += e.is_directory();
  EXPECT_EQ(dirs, 8);
  EXPECT_FALSE(fs::exists(c.out_dir / "models"));
  fs::remove_all(c.out_dir);
}

TEST(Runner, FullRunIsResumableAndDeterministic) {
  auto c = tiny_config(fresh_dir("full_a"));
  const auto first = run_experiment(c, kAllStages);
  EXPECT_GT(first.artifacts_written(), 0);

  const auto records = records_from_csv(io::read_file(layout::records_file(c)));
  EXPECT_EQ(records.size(), 2u * 3u * 2u * 6u);

  // Unchanged rerun writes nothing.
  const auto second = run_experiment(c, kAllStages);
  EXPECT_EQ(second.artifacts_written(), 0);
  for (const auto& s : second.stages) EXPECT_EQ(s.skipped, s.units);

  // Same seed, different directory and job count: identical records.
  auto other = c;
  other.out_dir = fresh_dir("full_b");
  other.jobs = 2;
  run_experiment(other, kAllStages);
  EXPECT_EQ(io::read_file(layout::records_file(c)), io::read_file(layout::records_file(other)));
  fs::remove_all(other.out_dir);

  // A changed upstream artifact invalidates downstream units.
  const auto attr = layout::attribution_file(c, c.models[0], c.datasets[0], Method::GR);
  auto text = io::read_file(attr);
  text += "\n";
  io::write_file(attr, text);
  const Stage downstream[] = {Stage::Attribute, Stage::Perturb, Stage::Score};
  const auto third = run_experiment(c, downstream);
  EXPECT_EQ(third.stages[0].skipped, third.stages[0].units - 1);  // the damaged file is rebuilt
  EXPECT_EQ(third.stages[1].skipped, third.stages[1].units);      // restored bytes match the manifest
  EXPECT_EQ(third.artifacts_written(), 1);

  // --force recomputes every unit but rewrites no identical bytes.
  c.force = true;
  const auto forced = run_experiment(c, kAllStages);
  for (const auto& s : forced.stages) EXPECT_EQ(s.skipped, 0);
  EXPECT_EQ(forced.artifacts_written(), 0);
  fs::remove_all(c.out_dir);
}

TEST(Runner, SeedChangeInvalidatesEverything) {
  auto c = tiny_config(fresh_dir("seed_change"));
  const Stage gen[] = {Stage::Gen};
  run_experiment(c, gen);
  c.set_master_seed(1);
  const auto s = run_experiment(c, gen);
  EXPECT_EQ(s.stages[0].skipped, 0);
  EXPECT_EQ(s.artifacts_written(), 2 * 4);
  fs::remove_all(c.out_dir);
}

TEST(Runner, MissingInputsNameTheFailingStage) {
  auto c = tiny_config(fresh_dir("missing"));
  const Stage only[] = {Stage::Attribute};
  try {
    run_experiment(c, only);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "attribute");
  }
  fs::remove_all(c.out_dir);
}

#ifdef TSATTR_CLI_PATH
TEST(Cli, GenRespectsOutputEnvironmentVariable) {
  const auto dir = fresh_dir("cli_env");
  const auto cfg = fs::temp_directory_path() / "tsattr_test_cli.json";
  io::write_file(cfg, R"({"datasets": [{"contrast": "length", "feature": "trend"}],
                          "split_sizes": {"train": 4, "val": 2, "test": 2}})");
  const std::string cmd = std::string(kOutEnvVar) + "=" + dir.string() + " " + TSATTR_CLI_PATH +
                          " run --only gen -q --config " + cfg.string() + " > /dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "datasets" / "length-trend" / "test.csv"));
  EXPECT_TRUE(fs::exists(dir / "manifests" / "gen.json"));
  const std::string bad = std::string(TSATTR_CLI_PATH) + " run --only nope --out " + dir.string() + " 2> /dev/null";
  EXPECT_NE(std::system(bad.c_str()), 0);
  fs::remove_all(dir);
  fs::remove(cfg);
}
#endif
