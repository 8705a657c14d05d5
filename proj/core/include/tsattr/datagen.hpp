#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsattr/rng.hpp"

namespace tsattr {

enum class FeatureKind { Level, Pulse, Sine, Trend };
enum class Contrast { Amplitude, Length };

std::string_view to_string(FeatureKind kind);
std::string_view to_string(Contrast contrast);
FeatureKind parse_feature_kind(std::string_view name);
Contrast parse_contrast(std::string_view name);

inline constexpr int kDefaultSeriesLength = 150;
inline constexpr double kSinePeriod = 10.0;

// Shape of the class-discriminating pattern placed inside the feature window.
struct FeatureSpec {
  FeatureKind kind = FeatureKind::Level;
  double amplitude = 1.0;
  int length = 60;
  double period = kSinePeriod;  // sine only

  double sigma() const { return static_cast<double>(length) / 6.0; }  // pulse only

  // Throws InvalidSpec unless 1 <= length <= series_length, amplitude > 0,
  // and period == 10 for sines.
  void validate(int series_length) const;

  bool operator==(const FeatureSpec&) const = default;
};

struct DatasetConfig {
  Contrast contrast = Contrast::Amplitude;
  FeatureKind feature = FeatureKind::Level;
  int series_length = kDefaultSeriesLength;
  int n_train = 1000;
  int n_val = 300;
  int n_test = 300;
  std::uint64_t base_seed = 0;
  FeatureSpec class0;
  FeatureSpec class1;
  // Background noise standard deviation. Fixed at 1 for every generated
  // dataset; tests set it to 0 to inspect the additive composition.
  double noise_sd = 1.0;

  // Contrast table: Amplitude gives A=1 vs A=2 at L=60; Length gives L=30 vs
  // L=60 at A=2.
  static DatasetConfig standard(Contrast contrast, FeatureKind feature, std::uint64_t base_seed);

  // "amplitude-sine", "length-level", ...
  std::string id() const;
  const FeatureSpec& class_spec(int label) const;
  void validate() const;

  std::uint64_t train_seed() const { return base_seed + 0; }
  std::uint64_t val_seed() const { return base_seed + 1; }
  std::uint64_t test_seed() const { return base_seed + 2; }

  bool operator==(const DatasetConfig&) const = default;
};

// The eight default datasets (contrast-major, then Level/Pulse/Sine/Trend).
std::vector<DatasetConfig> standard_grid(std::uint64_t master_seed);

struct TimeSeriesInstance {
  int id = 0;
  int label = 0;
  std::vector<double> values;  // standardized
  std::vector<std::uint8_t> mask;
  int t_start = 0;
  int length = 0;
  double raw_mean = 0.0;
  double raw_std = 1.0;

  // values * raw_std + raw_mean
  std::vector<double> destandardized() const;
};

// Mask with ones on [t_start, t_start + length - 1].
std::vector<std::uint8_t> window_mask(int series_length, int t_start, int length);

struct Dataset {
  DatasetConfig config;
  std::vector<TimeSeriesInstance> train;
  std::vector<TimeSeriesInstance> val;
  std::vector<TimeSeriesInstance> test;
};

// Feature values f(t) for t = 0..L-1.
std::vector<double> generate_feature(const FeatureSpec& spec);

// Noise, uniformly placed feature window, then per-instance z-scoring.
TimeSeriesInstance generate_instance(const DatasetConfig& config, int label, Rng& rng, int id = 0);

// Split of `count` instances with alternating labels 0,1,0,1,...
std::vector<TimeSeriesInstance> generate_split(const DatasetConfig& config, int count,
                                               std::uint64_t seed);

Dataset generate_dataset(const DatasetConfig& config);

// Split CSV: id,label,t_start,L,raw_mean,raw_std,x_0..x_{N-1}.
std::string split_to_csv(const std::vector<TimeSeriesInstance>& split, int series_length);
std::vector<TimeSeriesInstance> split_from_csv(std::string_view text, int series_length);

// On-disk layout: <dir>/config.json and <dir>/{train,val,test}.csv.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

std::string config_to_json(const DatasetConfig& config);
DatasetConfig config_from_json(std::string_view text);

}  // namespace tsattr
