#include "tsattr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numbers>
#include <numeric>

#include "tsattr/errors.hpp"
#include "tsattr/nn_math.hpp"
#include "tsattr/parallel.hpp"
#include "tsattr/rng.hpp"

namespace tsattr {

namespace {

// Gradient work is split into fixed-size chunks reduced in chunk order, so the
// summation order (and therefore the trained weights) is independent of the
// number of worker threads.
constexpr std::size_t kGradientChunk = 8;

LossAndGradient batch_gradient(const Network& net, std::span<const Example> batch, int jobs) {
  const std::size_t chunks = (batch.size() + kGradientChunk - 1) / kGradientChunk;
  std::vector<LossAndGradient> parts(chunks);
  parallel_for(chunks, jobs, [&](std::size_t c) {
    const std::size_t begin = c * kGradientChunk;
    const std::size_t len = std::min(kGradientChunk, batch.size() - begin);
    parts[c] = net.parameter_gradient(batch.subspan(begin, len));
  });
  LossAndGradient total;
  total.grad.assign(net.parameters().size(), 0.0);
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t len = std::min(kGradientChunk, batch.size() - c * kGradientChunk);
    const double w = static_cast<double>(len) / static_cast<double>(batch.size());
    total.loss += w * parts[c].loss;
    total.correct += parts[c].correct;
    for (std::size_t i = 0; i < total.grad.size(); ++i) total.grad[i] += w * parts[c].grad[i];
  }
  return total;
}

struct SplitEval {
  double loss = 0.0;
  double accuracy = 0.0;
};

SplitEval evaluate_loss(const Network& net, std::span<const TimeSeriesInstance> split, int jobs) {
  std::vector<double> losses(split.size());
  std::vector<int> correct(split.size());
  parallel_for(split.size(), jobs, [&](std::size_t i) {
    const auto p = net.predict(split[i].values);
    losses[i] = nn::log_sum_exp(p.logits) - p.logits[static_cast<std::size_t>(split[i].label)];
    correct[i] = p.predicted_class == split[i].label ? 1 : 0;
  });
  SplitEval out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    out.loss += losses[i];
    out.accuracy += correct[i];
  }
  out.loss /= static_cast<double>(split.size());
  out.accuracy /= static_cast<double>(split.size());
  return out;
}

nlohmann::json epoch_to_json(const EpochStats& e) {
  return {{"epoch", e.epoch},
          {"learning_rate", e.learning_rate},
          {"train_loss", e.train_loss},
          {"train_accuracy", e.train_accuracy},
          {"val_loss", e.val_loss},
          {"val_accuracy", e.val_accuracy}};
}

}  // namespace

void TrainConfig::validate() const {
  if (max_epochs < 1) throw InvalidInput("max_epochs must be at least 1");
  if (patience < 1 || patience >= max_epochs) throw InvalidInput("patience must be in [1, max_epochs)");
  if (lr_min < 0.0 || lr0 < lr_min) throw InvalidInput("need 0 <= lr_min <= lr0");
  if (batch_size < 1) throw InvalidInput("batch_size must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw InvalidInput("betas must be in [0, 1)");
  if (!(eps > 0.0) || weight_decay < 0.0) throw InvalidInput("eps must be positive, weight_decay non-negative");
}

std::string TrainConfig::to_json() const {
  nlohmann::json j = {{"max_epochs", max_epochs}, {"patience", patience},   {"lr0", lr0},
                      {"lr_min", lr_min},         {"beta1", beta1},         {"beta2", beta2},
                      {"eps", eps},               {"weight_decay", weight_decay},
                      {"batch_size", batch_size}, {"seed", seed}};
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  TrainConfig c;
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.lr0 = j.value("lr0", c.lr0);
  c.lr_min = j.value("lr_min", c.lr_min);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

double cosine_learning_rate(const TrainConfig& cfg, int epoch_index) {
  const double progress = static_cast<double>(epoch_index) / static_cast<double>(cfg.max_epochs);
  return cfg.lr_min + 0.5 * (cfg.lr0 - cfg.lr_min) * (1.0 + std::cos(std::numbers::pi * progress));
}

AdamW::AdamW(std::size_t size, const TrainConfig& cfg)
    : beta1_(cfg.beta1), beta2_(cfg.beta2), eps_(cfg.eps), weight_decay_(cfg.weight_decay), m_(size, 0.0), v_(size, 0.0) {}

void AdamW::step(std::span<double> params, std::span<const double> grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw InvalidInput("AdamW: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] *= 1.0 - lr * weight_decay_;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
  }
}

std::string TrainReport::to_json() const {
  nlohmann::json epochs_json = nlohmann::json::array();
  for (const auto& e : epochs) epochs_json.push_back(epoch_to_json(e));
  nlohmann::json j = {{"epochs", epochs_json},
                      {"best_epoch", best_epoch},
                      {"best_val_loss", best_val_loss},
                      {"stopped_early", stopped_early},
                      {"test_accuracy", test_accuracy},
                      {"test_weighted_f1", test_weighted_f1}};
  return j.dump(2) + "\n";
}

TrainReport TrainReport::from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  TrainReport r;
  for (const auto& e : j.at("epochs")) {
    r.epochs.push_back({e.at("epoch").get<int>(), e.at("learning_rate").get<double>(), e.at("train_loss").get<double>(),
                        e.at("train_accuracy").get<double>(), e.at("val_loss").get<double>(),
                        e.at("val_accuracy").get<double>()});
  }
  r.best_epoch = j.at("best_epoch").get<int>();
  r.best_val_loss = j.at("best_val_loss").get<double>();
  r.stopped_early = j.at("stopped_early").get<bool>();
  r.test_accuracy = j.at("test_accuracy").get<double>();
  r.test_weighted_f1 = j.at("test_weighted_f1").get<double>();
  return r;
}

ClassificationMetrics classification_metrics(std::span<const int> truth, std::span<const int> predicted,
                                             int num_classes) {
  if (truth.size() != predicted.size()) throw InvalidInput("truth and predictions differ in length");
  if (truth.empty()) throw InvalidInput("cannot score an empty split");
  const auto k = static_cast<std::size_t>(num_classes);
  std::vector<double> tp(k, 0.0), pred_count(k, 0.0), support(k, 0.0);
  double correct = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = static_cast<std::size_t>(truth[i]);
    const auto p = static_cast<std::size_t>(predicted[i]);
    if (t >= k || p >= k) throw InvalidInput("class index out of range");
    support[t] += 1.0;
    pred_count[p] += 1.0;
    if (t == p) {
      tp[t] += 1.0;
      correct += 1.0;
    }
  }
  const double total = static_cast<double>(truth.size());
  ClassificationMetrics m;
  m.accuracy = correct / total;
  for (std::size_t c = 0; c < k; ++c) {
    const double precision = pred_count[c] > 0.0 ? tp[c] / pred_count[c] : 0.0;
    const double recall = support[c] > 0.0 ? tp[c] / support[c] : 0.0;
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    m.weighted_f1 += support[c] / total * f1;
  }
  return m;
}

ClassificationMetrics evaluate(const Classifier& model, std::span<const TimeSeriesInstance> split) {
  std::vector<int> truth, predicted;
  truth.reserve(split.size());
  predicted.reserve(split.size());
  for (const auto& inst : split) {
    truth.push_back(inst.label);
    predicted.push_back(model.predict(inst.values).predicted_class);
  }
  return classification_metrics(truth, predicted);
}

std::pair<Network, TrainReport> train(Network net, const Dataset& dataset, const TrainConfig& cfg,
                                      const EpochCallback& on_epoch) {
  cfg.validate();
  if (dataset.train.empty() || dataset.val.empty() || dataset.test.empty()) {
    throw InvalidInput("train: every split must be nonempty");
  }
  Rng shuffle_rng(cfg.seed);
  AdamW optimizer(net.parameters().size(), cfg);
  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainReport report;
  std::vector<double> best_params(net.parameters().begin(), net.parameters().end());
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = cosine_learning_rate(cfg, epoch);
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }
    double loss_sum = 0.0;
    int correct = 0;
    std::vector<Example> batch;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t k = start; k < end; ++k) {
        const auto& inst = dataset.train[order[k]];
        batch.push_back({inst.values, inst.label});
      }
      const auto lg = batch_gradient(net, batch, cfg.jobs);
      if (!std::isfinite(lg.loss)) {
        throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch + 1) + ", batch starting at " +
                              std::to_string(start));
      }
      loss_sum += lg.loss * static_cast<double>(batch.size());
      correct += lg.correct;
      optimizer.step(net.mutable_parameters(), lg.grad, lr);
    }

    const auto val = evaluate_loss(net, dataset.val, cfg.jobs);
    if (!std::isfinite(val.loss)) {
      throw DivergenceError("non-finite validation loss at epoch " + std::to_string(epoch + 1));
    }
    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.learning_rate = lr;
    stats.train_loss = loss_sum / static_cast<double>(order.size());
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    stats.val_loss = val.loss;
    stats.val_accuracy = val.accuracy;
    report.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);

    if (val.loss < best_val) {
      best_val = val.loss;
      report.best_epoch = stats.epoch;
      std::copy(net.parameters().begin(), net.parameters().end(), best_params.begin());
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      report.stopped_early = true;
      break;
    }
  }

  std::copy(best_params.begin(), best_params.end(), net.mutable_parameters().begin());
  net.set_seed(cfg.seed);
  report.best_val_loss = best_val;
  const auto test = evaluate(net, dataset.test);
  report.test_accuracy = test.accuracy;
  report.test_weighted_f1 = test.weighted_f1;
  return {std::move(net), report};
}

}  // namespace tsattr
