#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsattr/datagen.hpp"
#include "tsattr/network.hpp"

namespace tsattr {

struct TrainConfig {
  int max_epochs = 100;
  int patience = 10;
  double lr0 = 1e-3;
  double lr_min = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  int batch_size = 64;
  std::uint64_t seed = 0;
  // Worker threads for batch gradients. Does not affect results.
  int jobs = 1;

  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json(std::string_view text);
};

// Learning rate for a 0-based epoch: cosine from lr0 down towards lr_min,
// with the period anchored to max_epochs.
double cosine_learning_rate(const TrainConfig& cfg, int epoch_index);

// Decoupled weight decay Adam.
class AdamW {
 public:
  AdamW(std::size_t size, const TrainConfig& cfg);
  void step(std::span<double> params, std::span<const double> grad, double lr);
  long long steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_, weight_decay_;
  std::vector<double> m_, v_;
  long long t_ = 0;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
  double test_accuracy = 0.0;
  double test_weighted_f1 = 0.0;

  std::string to_json() const;
  static TrainReport from_json(std::string_view text);
};

struct ClassificationMetrics {
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
};

// Weighted F1 = sum_c (support_c / total) * F1_c; F1_c is 0 when precision
// and recall are both undefined or zero.
ClassificationMetrics classification_metrics(std::span<const int> truth, std::span<const int> predicted,
                                             int num_classes = 2);
ClassificationMetrics evaluate(const Classifier& model, std::span<const TimeSeriesInstance> split);

using EpochCallback = std::function<void(const EpochStats&)>;

// Trains with shuffled minibatches, validates after every epoch, stops after
// `patience` epochs without a lower validation loss and returns the
// best-validation weights together with test-set metrics.
std::pair<Network, TrainReport> train(Network net, const Dataset& dataset, const TrainConfig& cfg,
                                      const EpochCallback& on_epoch = {});

}  // namespace tsattr
