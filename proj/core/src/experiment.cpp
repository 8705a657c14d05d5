#include "tsattr/experiment.hpp"

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>

#include "tsattr/errors.hpp"
#include "tsattr/groundtruth.hpp"
#include "tsattr/io.hpp"
#include "tsattr/parallel.hpp"
#include "tsattr/rng.hpp"

namespace tsattr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kStageNames[] = {"gen", "train", "attribute", "perturb", "score", "report"};

json arch_to_json(const Architecture& a) {
  return {{"name", a.name},
          {"series_length", a.series_length},
          {"stem_channels", a.stem_channels},
          {"stem_kernel", a.stem_kernel},
          {"block_channels", a.block_channels},
          {"block_kernel", a.block_kernel},
          {"num_classes", a.num_classes}};
}

Architecture arch_from_json(const json& j) {
  Architecture a;
  a.name = j.value("name", a.name);
  a.series_length = j.value("series_length", a.series_length);
  a.stem_channels = j.value("stem_channels", a.stem_channels);
  a.stem_kernel = j.value("stem_kernel", a.stem_kernel);
  a.block_channels = j.value("block_channels", a.block_channels);
  a.block_kernel = j.value("block_kernel", a.block_kernel);
  a.num_classes = j.value("num_classes", a.num_classes);
  return a;
}

json attribution_to_json(const AttributionOptions& o) {
  return {{"ig_steps", o.ig_steps},
          {"gradient_sign", to_string(o.gradient_sign)},
          {"ig_sign", to_string(o.ig_sign)},
          {"occlusion_sign", to_string(o.occlusion_sign)},
          {"space", o.space == GradientSpace::Probability ? "probability" : "logit"}};
}

AttributionOptions attribution_from_json(const json& j) {
  AttributionOptions o;
  o.ig_steps = j.value("ig_steps", o.ig_steps);
  if (j.contains("gradient_sign")) o.gradient_sign = parse_sign_mode(j.at("gradient_sign").get<std::string>());
  if (j.contains("ig_sign")) o.ig_sign = parse_sign_mode(j.at("ig_sign").get<std::string>());
  if (j.contains("occlusion_sign")) o.occlusion_sign = parse_sign_mode(j.at("occlusion_sign").get<std::string>());
  if (j.contains("space")) {
    const auto s = j.at("space").get<std::string>();
    if (s == "probability") {
      o.space = GradientSpace::Probability;
    } else if (s == "logit") {
      o.space = GradientSpace::Logit;
    } else {
      throw InvalidInput("unknown gradient space '" + s + "'");
    }
  }
  return o;
}

fs::path relative_to(const fs::path& p, const fs::path& root) { return p.lexically_relative(root); }

std::string hash_if_exists(const fs::path& p) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) return {};
  return io::sha256_file(p);
}

// One unit of work inside a stage: its identity, parameters, the files it
// reads and a builder that returns (path, contents) for every output.
struct Unit {
  std::string id;
  std::string params;
  std::vector<fs::path> inputs;
  std::function<std::vector<std::pair<fs::path, std::string>>()> build;
};

class StageRunner {
 public:
  StageRunner(const ExperimentConfig& config, Stage stage, const LogFn& log)
      : config_(config), stage_(stage), log_(log), manifest_path_(layout::manifest_file(config, stage)) {
    summary_.stage = stage;
    if (fs::exists(manifest_path_)) {
      original_ = io::read_file(manifest_path_);
      manifest_ = json::parse(original_);
    } else {
      manifest_ = {{"stage", std::string(to_string(stage))}, {"units", json::object()}};
    }
  }

  void run(const Unit& unit) {
    ++summary_.units;
    const auto& root = config_.out_dir;
    json inputs = json::object();
    for (const auto& p : unit.inputs) {
      const auto h = hash_if_exists(p);
      if (h.empty()) {
        throw InvalidInput("missing input " + p.string() + " for " + unit.id + "; run the earlier stages first");
      }
      inputs[relative_to(p, root).generic_string()] = h;
    }
    const auto params_hash = io::sha256_hex(unit.params);

    auto& units = manifest_["units"];
    if (!config_.force && units.contains(unit.id) && up_to_date(units[unit.id], params_hash, inputs)) {
      ++summary_.skipped;
      say(unit.id + ": up to date");
      return;
    }

    json outputs = json::object();
    int written = 0;
    for (const auto& [path, contents] : unit.build()) {
      const auto h = io::sha256_hex(contents);
      if (hash_if_exists(path) != h) {
        io::write_file(path, contents);
        ++written;
      }
      outputs[relative_to(path, root).generic_string()] = h;
    }
    summary_.written += written;
    units[unit.id] = {{"params", params_hash}, {"inputs", inputs}, {"outputs", outputs}};
    say(unit.id + ": " + std::to_string(written) + " artifact(s) written");
  }

  StageSummary finish() {
    const auto text = manifest_.dump(2) + "\n";
    if (text != original_) io::write_file(manifest_path_, text);
    return summary_;
  }

 private:
  bool up_to_date(const json& entry, const std::string& params_hash, const json& inputs) const {
    if (entry.value("params", std::string{}) != params_hash) return false;
    if (entry.value("inputs", json::object()) != inputs) return false;
    const auto outputs = entry.value("outputs", json::object());
    for (const auto& [rel, h] : outputs.items()) {
      if (hash_if_exists(config_.out_dir / rel) != h.get<std::string>()) return false;
    }
    return true;
  }

  void say(const std::string& msg) const {
    if (log_) log_(std::string(to_string(stage_)) + " " + msg);
  }

  const ExperimentConfig& config_;
  Stage stage_;
  const LogFn& log_;
  fs::path manifest_path_;
  std::string original_;
  json manifest_;
  StageSummary summary_;
};

std::string unit_name(const Architecture& a, const DatasetConfig& d) { return a.name + "/" + d.id(); }

std::vector<TimeSeriesInstance> read_test_split(const ExperimentConfig& c, const DatasetConfig& d) {
  return split_from_csv(io::read_file(layout::dataset_dir(c, d) / "test.csv"), d.series_length);
}

void run_gen(const ExperimentConfig& c, StageRunner& runner) {
  for (const auto& d : c.datasets) {
    const auto dir = layout::dataset_dir(c, d);
    runner.run({d.id(), config_to_json(d), {}, [&d, dir] {
                  const auto ds = generate_dataset(d);
                  const int n = d.series_length;
                  return std::vector<std::pair<fs::path, std::string>>{
                      {dir / "config.json", config_to_json(d)},
                      {dir / "train.csv", split_to_csv(ds.train, n)},
                      {dir / "val.csv", split_to_csv(ds.val, n)},
                      {dir / "test.csv", split_to_csv(ds.test, n)}};
                }});
  }
}

void run_train(const ExperimentConfig& c, StageRunner& runner, const LogFn& log, const EpochCallback& on_epoch) {
  for (std::size_t di = 0; di < c.datasets.size(); ++di) {
    const auto& d = c.datasets[di];
    const auto ddir = layout::dataset_dir(c, d);
    for (std::size_t mi = 0; mi < c.models.size(); ++mi) {
      const auto& arch = c.models[mi];
      const auto seed = unit_seed(c.master_seed, Stage::Train, di, mi);
      TrainConfig cfg = c.train;
      cfg.seed = mix_seed(seed, 1);
      cfg.jobs = c.jobs;
      const json params = {{"architecture", arch_to_json(arch)},
                           {"train", json::parse(cfg.to_json())},
                           {"init_seed", mix_seed(seed, 0)}};
      const auto mdir = layout::model_dir(c, arch, d);
      runner.run({unit_name(arch, d), params.dump(),
                  {ddir / "config.json", ddir / "train.csv", ddir / "val.csv", ddir / "test.csv"},
                  [&, cfg, seed, mdir] {
                    const auto dataset = read_dataset(ddir);
                    if (log) log("train " + unit_name(arch, d) + ": training");
                    auto [net, report] = train(Network::initialize(arch, mix_seed(seed, 0)), dataset, cfg, on_epoch);
                    return std::vector<std::pair<fs::path, std::string>>{
                        {mdir / "checkpoint.json", net.to_json()}, {mdir / "train_report.json", report.to_json()}};
                  }});
    }
  }
}

void run_attribute(const ExperimentConfig& c, StageRunner& runner) {
  for (const auto& d : c.datasets) {
    const auto test_csv = layout::dataset_dir(c, d) / "test.csv";
    for (const auto& arch : c.models) {
      const auto ckpt = layout::model_dir(c, arch, d) / "checkpoint.json";
      for (Method m : c.methods) {
        json params = attribution_to_json(c.attribution);
        params["method"] = to_string(m);
        const auto out = layout::attribution_file(c, arch, d, m);
        runner.run({unit_name(arch, d) + "/" + std::string(to_string(m)), params.dump(),
                    {test_csv, ckpt},
                    [&, m, out, ckpt] {
                      const auto net = Network::load(ckpt);
                      const auto test = read_test_split(c, d);
                      std::vector<AttributionResult> results(test.size());
                      parallel_for(test.size(), c.jobs, [&](std::size_t i) {
                        results[i] = attribute(net, test[i].values, m, c.attribution);
                        results[i].instance_id = test[i].id;
                      });
                      return std::vector<std::pair<fs::path, std::string>>{
                          {out, attributions_to_csv(results, d.series_length)}};
                    }});
      }
    }
  }
}

void run_perturb(const ExperimentConfig& c, StageRunner& runner) {
  for (std::size_t di = 0; di < c.datasets.size(); ++di) {
    const auto& d = c.datasets[di];
    const auto test_csv = layout::dataset_dir(c, d) / "test.csv";
    for (std::size_t mi = 0; mi < c.models.size(); ++mi) {
      const auto& arch = c.models[mi];
      const auto ckpt = layout::model_dir(c, arch, d) / "checkpoint.json";
      for (Method m : c.methods) {
        const auto attr = layout::attribution_file(c, arch, d, m);
        for (Strategy s : c.strategies) {
          const json params = {{"strategy", to_string(s)},
                               {"gaussian_mode", to_string(c.gaussian_mode)},
                               {"seed", unit_seed(c.master_seed, Stage::Perturb, di, mi)}};
          const auto out = layout::perturbation_file(c, arch, d, m, s);
          runner.run(
              {unit_name(arch, d) + "/" + std::string(to_string(m)) + "_" + std::string(to_string(s)), params.dump(),
               {test_csv, ckpt, attr},
               [&, di, mi, m, s, out, ckpt, attr] {
                 const auto net = Network::load(ckpt);
                 const auto test = read_test_split(c, d);
                 const auto scores = attributions_from_csv(io::read_file(attr), m);
                 if (scores.size() != test.size()) throw InvalidInput("attribution file does not match test split");
                 std::vector<DegradationResult> results(test.size());
                 parallel_for(test.size(), c.jobs, [&](std::size_t i) {
                   if (scores[i].instance_id != test[i].id) throw InvalidInput("attribution ids out of order");
                   results[i] = evaluate_degradation(net, test[i].values, scores[i].scores, s, test[i].length,
                                                     gaussian_seed(c.master_seed, di, mi, test[i].id),
                                                     scores[i].explained_class, c.gaussian_mode);
                 });
                 std::vector<CurveRow> rows;
                 for (std::size_t i = 0; i < test.size(); ++i) {
                   for (const auto* run : {&results[i].morf, &results[i].lerf}) {
                     for (std::size_t k = 0; k < run->pc.size(); ++k) {
                       rows.push_back({test[i].id, run->order, static_cast<int>(k) + 1, run->pc[k]});
                     }
                   }
                 }
                 return std::vector<std::pair<fs::path, std::string>>{{out, curves_to_csv(rows)}};
               }});
        }
      }
    }
  }
}

std::vector<EvalRecord> score_records(const ExperimentConfig& c) {
  std::vector<EvalRecord> records;
  for (const auto& d : c.datasets) {
    const auto test = read_test_split(c, d);
    for (const auto& arch : c.models) {
      for (Method m : c.methods) {
        const auto attrs = attributions_from_csv(io::read_file(layout::attribution_file(c, arch, d, m)), m);
        if (attrs.size() != test.size()) throw InvalidInput("attribution file does not match test split");
        std::vector<double> auc(test.size());
        for (std::size_t i = 0; i < test.size(); ++i) auc[i] = normalized_auc_pr(attrs[i].scores, test[i].mask);
        for (Strategy s : c.strategies) {
          const auto rows = curves_from_csv(io::read_file(layout::perturbation_file(c, arch, d, m, s)));
          std::map<int, std::pair<PerturbationRun, PerturbationRun>> runs;  // id -> (lerf, morf)
          for (const auto& r : rows) {
            auto& pair = runs[r.instance_id];
            (r.order == Order::LeRF ? pair.first : pair.second).pc.push_back(r.pc);
          }
          for (std::size_t i = 0; i < test.size(); ++i) {
            const auto it = runs.find(test[i].id);
            if (it == runs.end()) throw InvalidInput("no perturbation curves for instance " + std::to_string(test[i].id));
            EvalRecord rec;
            rec.dataset = d.id();
            rec.contrast = to_string(d.contrast);
            rec.feature = to_string(d.feature);
            rec.model = arch.name;
            rec.method = to_string(m);
            rec.strategy = to_string(s);
            rec.id = test[i].id;
            rec.true_class = test[i].label;
            rec.pred_class = attrs[i].explained_class;
            rec.auc_pr_norm = auc[i];
            rec.ds = degradation_score(it->second.first, it->second.second).ds;
            records.push_back(std::move(rec));
          }
        }
      }
    }
  }
  return records;
}

std::vector<fs::path> score_inputs(const ExperimentConfig& c) {
  std::vector<fs::path> inputs;
  for (const auto& d : c.datasets) {
    inputs.push_back(layout::dataset_dir(c, d) / "test.csv");
    for (const auto& arch : c.models) {
      for (Method m : c.methods) {
        inputs.push_back(layout::attribution_file(c, arch, d, m));
        for (Strategy s : c.strategies) inputs.push_back(layout::perturbation_file(c, arch, d, m, s));
      }
    }
  }
  return inputs;
}

void run_score(const ExperimentConfig& c, StageRunner& runner) {
  json params = json::array();
  for (Method m : c.methods) params.push_back(to_string(m));
  for (Strategy s : c.strategies) params.push_back(to_string(s));
  runner.run({"eval_records", params.dump(), score_inputs(c), [&c] {
                const auto records = score_records(c);
                return std::vector<std::pair<fs::path, std::string>>{
                    {layout::records_file(c), records_to_csv(records)}};
              }});
}

std::string model_performance_csv(const ExperimentConfig& c) {
  std::string out = "model,dataset,contrast,feature,test_accuracy,test_weighted_f1,best_epoch,epochs_run\n";
  for (const auto& arch : c.models) {
    for (const auto& d : c.datasets) {
      const auto r = TrainReport::from_json(io::read_file(layout::model_dir(c, arch, d) / "train_report.json"));
      out += arch.name + ',' + d.id() + ',' + std::string(to_string(d.contrast)) + ',' +
             std::string(to_string(d.feature)) + ',' + io::format_double(r.test_accuracy) + ',' +
             io::format_double(r.test_weighted_f1) + ',' + std::to_string(r.best_epoch) + ',' +
             std::to_string(r.epochs.size()) + '\n';
    }
  }
  return out;
}

void run_report(const ExperimentConfig& c, StageRunner& runner) {
  std::vector<fs::path> inputs{layout::records_file(c)};
  for (const auto& arch : c.models) {
    for (const auto& d : c.datasets) inputs.push_back(layout::model_dir(c, arch, d) / "train_report.json");
  }
  const json params = {{"correlation", c.correlation == CorrelationMode::CellAveraged ? "cell" : "pooled"}};
  runner.run({"report", params.dump(), inputs, [&c] {
                const auto records = records_from_csv(io::read_file(layout::records_file(c)));
                const auto dir = layout::report_dir(c);
                return std::vector<std::pair<fs::path, std::string>>{
                    {dir / "model_performance.csv", model_performance_csv(c)},
                    {dir / "auc_pr_table.csv", auc_table_csv(records)},
                    {dir / "ds_table.csv", ds_table_csv(records)},
                    {dir / "class_means.csv", class_means_csv(records)},
                    {dir / "correlations.csv", correlation_csv(records, c.correlation)}};
              }});
}

}  // namespace

std::string_view to_string(Stage stage) { return kStageNames[static_cast<int>(stage)]; }

Stage parse_stage(std::string_view name) {
  for (Stage s : kAllStages) {
    if (to_string(s) == name) return s;
  }
  throw InvalidInput("unknown stage '" + std::string(name) + "'");
}

std::vector<Stage> parse_stage_list(std::string_view text) {
  if (text == "all") return {std::begin(kAllStages), std::end(kAllStages)};
  std::vector<Stage> stages;
  for (auto part : io::split_csv_line(text)) {
    const Stage s = parse_stage(part);
    if (std::find(stages.begin(), stages.end(), s) == stages.end()) stages.push_back(s);
  }
  if (stages.empty()) throw InvalidInput("empty stage list");
  std::sort(stages.begin(), stages.end());
  return stages;
}

ExperimentConfig ExperimentConfig::defaults(std::uint64_t master_seed) {
  ExperimentConfig c;
  c.master_seed = master_seed;
  for (const auto& d : standard_grid(0)) c.grid_.emplace_back(d.contrast, d.feature);
  c.rebuild_datasets();
  return c;
}

void ExperimentConfig::rebuild_datasets() {
  if (pinned_dataset_seeds_) return;
  // Reseeding keeps split sizes already set on the current grid.
  const bool reseed = datasets.size() == grid_.size();
  std::vector<DatasetConfig> rebuilt;
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    auto d = DatasetConfig::standard(grid_[i].first, grid_[i].second, master_seed + 100 * i);
    if (reseed && datasets[i].contrast == d.contrast && datasets[i].feature == d.feature) {
      d.n_train = datasets[i].n_train;
      d.n_val = datasets[i].n_val;
      d.n_test = datasets[i].n_test;
    } else {
      if (split_train_ >= 0) d.n_train = split_train_;
      if (split_val_ >= 0) d.n_val = split_val_;
      if (split_test_ >= 0) d.n_test = split_test_;
    }
    rebuilt.push_back(d);
  }
  datasets = std::move(rebuilt);
}

void ExperimentConfig::set_master_seed(std::uint64_t seed) {
  master_seed = seed;
  rebuild_datasets();
}

ExperimentConfig ExperimentConfig::from_json(std::string_view text) {
  const auto j = json::parse(text);
  ExperimentConfig c = defaults(j.value("master_seed", std::uint64_t{0}));
  if (j.contains("split_sizes")) {
    const auto& s = j.at("split_sizes");
    c.split_train_ = s.value("train", 1000);
    c.split_val_ = s.value("val", 300);
    c.split_test_ = s.value("test", 300);
  }
  if (j.contains("datasets")) {
    c.grid_.clear();
    c.datasets.clear();
    bool any_seed = false;
    for (const auto& d : j.at("datasets")) {
      c.grid_.emplace_back(parse_contrast(d.at("contrast").get<std::string>()),
                           parse_feature_kind(d.at("feature").get<std::string>()));
      any_seed = any_seed || d.contains("base_seed");
    }
    c.rebuild_datasets();
    const auto& arr = j.at("datasets");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      auto& d = c.datasets[i];
      d.base_seed = arr[i].value("base_seed", d.base_seed);
      d.n_train = arr[i].value("n_train", d.n_train);
      d.n_val = arr[i].value("n_val", d.n_val);
      d.n_test = arr[i].value("n_test", d.n_test);
    }
    c.pinned_dataset_seeds_ = any_seed;
  } else {
    c.datasets.clear();
    c.rebuild_datasets();
  }
  if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train").dump());
  if (j.contains("models")) {
    c.models.clear();
    for (const auto& m : j.at("models")) c.models.push_back(arch_from_json(m));
  }
  if (j.contains("attribution")) c.attribution = attribution_from_json(j.at("attribution"));
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
  }
  if (j.contains("strategies")) {
    c.strategies.clear();
    for (const auto& s : j.at("strategies")) c.strategies.push_back(parse_strategy(s.get<std::string>()));
  }
  if (j.contains("gaussian_mode")) c.gaussian_mode = parse_gaussian_mode(j.at("gaussian_mode").get<std::string>());
  if (j.contains("correlation")) {
    const auto s = j.at("correlation").get<std::string>();
    if (s == "cell") {
      c.correlation = CorrelationMode::CellAveraged;
    } else if (s == "pooled") {
      c.correlation = CorrelationMode::Pooled;
    } else {
      throw InvalidInput("correlation must be 'cell' or 'pooled'");
    }
  }
  if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
  c.jobs = j.value("jobs", c.jobs);
  c.force = j.value("force", c.force);
  return c;
}

std::string ExperimentConfig::to_json() const {
  json ds = json::array();
  for (const auto& d : datasets) {
    ds.push_back({{"contrast", to_string(d.contrast)},
                  {"feature", to_string(d.feature)},
                  {"base_seed", d.base_seed},
                  {"n_train", d.n_train},
                  {"n_val", d.n_val},
                  {"n_test", d.n_test}});
  }
  json models_j = json::array();
  for (const auto& m : models) models_j.push_back(arch_to_json(m));
  json methods_j = json::array();
  for (Method m : methods) methods_j.push_back(to_string(m));
  json strategies_j = json::array();
  for (Strategy s : strategies) strategies_j.push_back(to_string(s));
  const json j = {{"master_seed", master_seed},
                  {"datasets", ds},
                  {"train", json::parse(train.to_json())},
                  {"models", models_j},
                  {"attribution", attribution_to_json(attribution)},
                  {"methods", methods_j},
                  {"strategies", strategies_j},
                  {"gaussian_mode", to_string(gaussian_mode)},
                  {"correlation", correlation == CorrelationMode::CellAveraged ? "cell" : "pooled"},
                  {"out", out_dir.string()},
                  {"jobs", jobs}};
  return j.dump(2);
}

void ExperimentConfig::validate() const {
  if (datasets.empty()) throw InvalidInput("experiment has no datasets");
  if (models.empty()) throw InvalidInput("experiment has no models");
  if (methods.empty() || strategies.empty()) throw InvalidInput("experiment needs methods and strategies");
  if (jobs < 1) throw InvalidInput("jobs must be at least 1");
  if (attribution.ig_steps < 1) throw InvalidInput("ig_steps must be at least 1");
  std::vector<std::string> ids;
  for (const auto& d : datasets) {
    d.validate();
    ids.push_back(d.id());
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw InvalidInput("duplicate dataset ids");
  std::vector<std::string> names;
  for (const auto& m : models) {
    m.validate();
    names.push_back(m.name);
    for (const auto& d : datasets) {
      if (m.series_length != d.series_length) throw InvalidInput("model and dataset series lengths differ");
    }
  }
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) throw InvalidInput("duplicate model names");
  train.validate();
}

std::uint64_t unit_seed(std::uint64_t master, Stage stage, std::size_t dataset_index, std::size_t model_index) {
  return mix_seed(mix_seed(master, static_cast<std::uint64_t>(stage)), dataset_index * 64 + model_index);
}

std::uint64_t gaussian_seed(std::uint64_t master, std::size_t dataset_index, std::size_t model_index,
                            int instance_id) {
  return mix_seed(unit_seed(master, Stage::Perturb, dataset_index, model_index),
                  static_cast<std::uint64_t>(instance_id));
}

int RunSummary::artifacts_written() const {
  int n = 0;
  for (const auto& s : stages) n += s.written;
  return n;
}

RunSummary run_experiment(const ExperimentConfig& config, std::span<const Stage> stages, const LogFn& log,
                          const EpochCallback& on_epoch) {
  config.validate();
  std::vector<Stage> ordered(stages.begin(), stages.end());
  std::sort(ordered.begin(), ordered.end());
  ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());

  RunSummary summary;
  for (Stage stage : ordered) {
    StageRunner runner(config, stage, log);
    try {
      switch (stage) {
        case Stage::Gen:
          run_gen(config, runner);
          break;
        case Stage::Train:
          run_train(config, runner, log, on_epoch);
          break;
        case Stage::Attribute:
          run_attribute(config, runner);
          break;
        case Stage::Perturb:
          run_perturb(config, runner);
          break;
        case Stage::Score:
          run_score(config, runner);
          break;
        case Stage::Report:
          run_report(config, runner);
          break;
      }
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      // Keep what completed so a rerun resumes from the failing unit.
      runner.finish();
      throw StageError(std::string(to_string(stage)), e.what());
    }
    summary.stages.push_back(runner.finish());
  }
  return summary;
}

namespace layout {

fs::path dataset_dir(const ExperimentConfig& c, const DatasetConfig& d) { return c.out_dir / "datasets" / d.id(); }

fs::path model_dir(const ExperimentConfig& c, const Architecture& a, const DatasetConfig& d) {
  return c.out_dir / "models" / a.name / d.id();
}

fs::path attribution_file(const ExperimentConfig& c, const Architecture& a, const DatasetConfig& d, Method m) {
  return c.out_dir / "attributions" / a.name / d.id() / (std::string(to_string(m)) + ".csv");
}

fs::path perturbation_file(const ExperimentConfig& c, const Architecture& a, const DatasetConfig& d, Method m,
                           Strategy s) {
  return c.out_dir / "perturbations" / a.name / d.id() /
         (std::string(to_string(m)) + "_" + std::string(to_string(s)) + ".csv");
}

fs::path records_file(const ExperimentConfig& c) { return c.out_dir / "scores" / "eval_records.csv"; }

fs::path report_dir(const ExperimentConfig& c) { return c.out_dir / "report"; }

fs::path manifest_file(const ExperimentConfig& c, Stage s) {
  return c.out_dir / "manifests" / (std::string(to_string(s)) + ".json");
}

}  // namespace layout

}  // namespace tsattr
