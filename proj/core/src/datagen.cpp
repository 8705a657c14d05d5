#include "tsattr/datagen.hpp"

#include <cmath>
#include <numbers>
#include <nlohmann/json.hpp>

#include "tsattr/errors.hpp"
#include "tsattr/io.hpp"

namespace tsattr {

namespace {

constexpr std::string_view kFeatureNames[] = {"level", "pulse", "sine", "trend"};
constexpr std::string_view kContrastNames[] = {"amplitude", "length"};

std::string split_header(int series_length) {
  std::string header = "id,label,t_start,L,raw_mean,raw_std";
  for (int i = 0; i < series_length; ++i) header += ",x_" + std::to_string(i);
  return header;
}

nlohmann::json spec_to_json(const FeatureSpec& spec) {
  return {{"kind", to_string(spec.kind)},
          {"amplitude", spec.amplitude},
          {"length", spec.length},
          {"period", spec.period}};
}

FeatureSpec spec_from_json(const nlohmann::json& j) {
  FeatureSpec spec;
  spec.kind = parse_feature_kind(j.at("kind").get<std::string>());
  spec.amplitude = j.at("amplitude").get<double>();
  spec.length = j.at("length").get<int>();
  spec.period = j.value("period", kSinePeriod);
  return spec;
}

}  // namespace

std::string_view to_string(FeatureKind kind) { return kFeatureNames[static_cast<int>(kind)]; }
std::string_view to_string(Contrast contrast) { return kContrastNames[static_cast<int>(contrast)]; }

FeatureKind parse_feature_kind(std::string_view name) {
  for (int i = 0; i < 4; ++i) {
    if (kFeatureNames[i] == name) return static_cast<FeatureKind>(i);
  }
  throw InvalidSpec("unknown feature kind '" + std::string(name) + "'");
}

Contrast parse_contrast(std::string_view name) {
  for (int i = 0; i < 2; ++i) {
    if (kContrastNames[i] == name) return static_cast<Contrast>(i);
  }
  throw InvalidSpec("unknown contrast '" + std::string(name) + "'");
}

void FeatureSpec::validate(int series_length) const {
  if (length < 1) throw InvalidSpec("feature length must be positive");
  if (length > series_length) throw InvalidSpec("feature length exceeds series length");
  if (kind == FeatureKind::Trend && length < 2) throw InvalidSpec("trend feature needs length >= 2");
  if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
    throw InvalidSpec("feature amplitude must be positive and finite");
  }
  if (kind == FeatureKind::Sine && period != kSinePeriod) throw InvalidSpec("sine period must be 10");
}

DatasetConfig DatasetConfig::standard(Contrast contrast, FeatureKind feature,
                                      std::uint64_t base_seed) {
  DatasetConfig config;
  config.contrast = contrast;
  config.feature = feature;
  config.base_seed = base_seed;
  config.class0.kind = config.class1.kind = feature;
  if (contrast == Contrast::Amplitude) {
    config.class0.amplitude = 1.0;
    config.class1.amplitude = 2.0;
    config.class0.length = config.class1.length = 60;
  } else {
    config.class0.amplitude = config.class1.amplitude = 2.0;
    config.class0.length = 30;
    config.class1.length = 60;
  }
  return config;
}

std::string DatasetConfig::id() const {
  return std::string(to_string(contrast)) + "-" + std::string(to_string(feature));
}

const FeatureSpec& DatasetConfig::class_spec(int label) const {
  if (label == 0) return class0;
  if (label == 1) return class1;
  throw InvalidInput("label must be 0 or 1");
}

void DatasetConfig::validate() const {
  if (series_length < 2) throw InvalidSpec("series length must be at least 2");
  if (n_train < 0 || n_val < 0 || n_test < 0) throw InvalidSpec("split sizes must be non-negative");
  if (!(noise_sd >= 0.0)) throw InvalidSpec("noise sd must be non-negative");
  class0.validate(series_length);
  class1.validate(series_length);
  if (class0.kind != feature || class1.kind != feature) {
    throw InvalidSpec("class feature kinds must match the dataset feature");
  }
}

std::vector<DatasetConfig> standard_grid(std::uint64_t master_seed) {
  std::vector<DatasetConfig> grid;
  std::uint64_t index = 0;
  for (auto contrast : {Contrast::Amplitude, Contrast::Length}) {
    for (auto kind : {FeatureKind::Level, FeatureKind::Pulse, FeatureKind::Sine, FeatureKind::Trend}) {
      // Split seeds are base+0..2, so stride datasets apart.
      grid.push_back(DatasetConfig::standard(contrast, kind, master_seed + 100 * index));
      ++index;
    }
  }
  return grid;
}

std::vector<double> TimeSeriesInstance::destandardized() const {
  std::vector<double> raw(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) raw[i] = values[i] * raw_std + raw_mean;
  return raw;
}

std::vector<std::uint8_t> window_mask(int series_length, int t_start, int length) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(series_length), 0);
  for (int i = t_start; i < t_start + length; ++i) mask[static_cast<std::size_t>(i)] = 1;
  return mask;
}

std::vector<double> generate_feature(const FeatureSpec& spec) {
  if (spec.length < 1) throw InvalidSpec("feature length must be positive");
  if (spec.kind == FeatureKind::Trend && spec.length < 2) {
    throw InvalidSpec("trend feature needs length >= 2");
  }
  const int len = spec.length;
  const double amp = spec.amplitude;
  std::vector<double> f(static_cast<std::size_t>(len));
  for (int t = 0; t < len; ++t) {
    const double tt = static_cast<double>(t);
    switch (spec.kind) {
      case FeatureKind::Level:
        f[t] = amp;
        break;
      case FeatureKind::Pulse: {
        const double centre = static_cast<double>(len) / 2.0;
        const double s = spec.sigma();
        f[t] = amp * std::exp(-(tt - centre) * (tt - centre) / (2.0 * s * s));
        break;
      }
      case FeatureKind::Sine:
        f[t] = amp * std::sin(2.0 * std::numbers::pi * tt / spec.period);
        break;
      case FeatureKind::Trend:
        f[t] = amp * tt / static_cast<double>(len - 1);
        break;
    }
  }
  return f;
}

TimeSeriesInstance generate_instance(const DatasetConfig& config, int label, Rng& rng, int id) {
  const FeatureSpec& spec = config.class_spec(label);
  spec.validate(config.series_length);
  const int n = config.series_length;

  TimeSeriesInstance inst;
  inst.id = id;
  inst.label = label;
  inst.length = spec.length;
  inst.values.resize(static_cast<std::size_t>(n));
  for (auto& v : inst.values) v = config.noise_sd * rng.normal();
  inst.t_start = static_cast<int>(rng.uniform_int(0, n - spec.length));

  const auto feature = generate_feature(spec);
  for (int t = 0; t < spec.length; ++t) inst.values[inst.t_start + t] += feature[t];
  inst.mask = window_mask(n, inst.t_start, inst.length);

  double mean = 0.0;
  for (double v : inst.values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : inst.values) var += (v - mean) * (v - mean);
  var /= n;
  double sd = std::sqrt(var);
  if (sd == 0.0) sd = 1.0;
  inst.raw_mean = mean;
  inst.raw_std = sd;
  for (auto& v : inst.values) v = (v - mean) / sd;
  return inst;
}

std::vector<TimeSeriesInstance> generate_split(const DatasetConfig& config, int count,
                                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TimeSeriesInstance> split;
  split.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) split.push_back(generate_instance(config, i % 2, rng, i));
  return split;
}

Dataset generate_dataset(const DatasetConfig& config) {
  config.validate();
  Dataset ds;
  ds.config = config;
  ds.train = generate_split(config, config.n_train, config.train_seed());
  ds.val = generate_split(config, config.n_val, config.val_seed());
  ds.test = generate_split(config, config.n_test, config.test_seed());
  return ds;
}

std::string config_to_json(const DatasetConfig& config) {
  nlohmann::json j = {{"id", config.id()},
                      {"contrast", to_string(config.contrast)},
                      {"feature", to_string(config.feature)},
                      {"series_length", config.series_length},
                      {"n_train", config.n_train},
                      {"n_val", config.n_val},
                      {"n_test", config.n_test},
                      {"base_seed", config.base_seed},
                      {"noise_sd", config.noise_sd},
                      {"class0", spec_to_json(config.class0)},
                      {"class1", spec_to_json(config.class1)}};
  return j.dump(2) + "\n";
}

DatasetConfig config_from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  DatasetConfig config;
  config.contrast = parse_contrast(j.at("contrast").get<std::string>());
  config.feature = parse_feature_kind(j.at("feature").get<std::string>());
  config.series_length = j.value("series_length", kDefaultSeriesLength);
  config.n_train = j.value("n_train", 1000);
  config.n_val = j.value("n_val", 300);
  config.n_test = j.value("n_test", 300);
  config.base_seed = j.value("base_seed", std::uint64_t{0});
  config.noise_sd = j.value("noise_sd", 1.0);
  if (j.contains("class0") && j.contains("class1")) {
    config.class0 = spec_from_json(j.at("class0"));
    config.class1 = spec_from_json(j.at("class1"));
  } else {
    const auto std_cfg = DatasetConfig::standard(config.contrast, config.feature, config.base_seed);
    config.class0 = std_cfg.class0;
    config.class1 = std_cfg.class1;
  }
  config.validate();
  return config;
}

std::string split_to_csv(const std::vector<TimeSeriesInstance>& split, int series_length) {
  std::string out = split_header(series_length);
  out += '\n';
  for (const auto& inst : split) {
    out += std::to_string(inst.id);
    out += ',' + std::to_string(inst.label);
    out += ',' + std::to_string(inst.t_start);
    out += ',' + std::to_string(inst.length);
    out += ',' + io::format_double(inst.raw_mean);
    out += ',' + io::format_double(inst.raw_std);
    for (double v : inst.values) {
      out += ',';
      out += io::format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<TimeSeriesInstance> split_from_csv(std::string_view text, int series_length) {
  const auto table = io::parse_csv(text);
  if (table.header.size() != static_cast<std::size_t>(6 + series_length)) {
    throw InvalidInput("dataset CSV has " + std::to_string(table.header.size()) +
                       " columns, expected " + std::to_string(6 + series_length));
  }
  std::vector<TimeSeriesInstance> split;
  split.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    TimeSeriesInstance inst;
    inst.id = static_cast<int>(io::parse_int(row[0]));
    inst.label = static_cast<int>(io::parse_int(row[1]));
    inst.t_start = static_cast<int>(io::parse_int(row[2]));
    inst.length = static_cast<int>(io::parse_int(row[3]));
    inst.raw_mean = io::parse_double(row[4]);
    inst.raw_std = io::parse_double(row[5]);
    inst.values.resize(static_cast<std::size_t>(series_length));
    for (int i = 0; i < series_length; ++i) inst.values[i] = io::parse_double(row[6 + i]);
    if (inst.t_start < 0 || inst.length < 1 || inst.t_start + inst.length > series_length) {
      throw InvalidInput("instance " + std::to_string(inst.id) + " has an invalid window");
    }
    inst.mask = window_mask(series_length, inst.t_start, inst.length);
    split.push_back(std::move(inst));
  }
  return split;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  const int n = dataset.config.series_length;
  io::write_file(dir / "config.json", config_to_json(dataset.config));
  io::write_file(dir / "train.csv", split_to_csv(dataset.train, n));
  io::write_file(dir / "val.csv", split_to_csv(dataset.val, n));
  io::write_file(dir / "test.csv", split_to_csv(dataset.test, n));
}

Dataset read_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.config = config_from_json(io::read_file(dir / "config.json"));
  const int n = ds.config.series_length;
  ds.train = split_from_csv(io::read_file(dir / "train.csv"), n);
  ds.val = split_from_csv(io::read_file(dir / "val.csv"), n);
  ds.test = split_from_csv(io::read_file(dir / "test.csv"), n);
  return ds;
}

}  // namespace tsattr
