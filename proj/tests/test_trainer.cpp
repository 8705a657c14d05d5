#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_util.hpp"
#include "tsattr/errors.hpp"
#include "tsattr/trainer.hpp"

using namespace tsattr;

namespace {

Dataset tiny_dataset(std::uint64_t seed, int n_train = 48, int n_val = 16, int n_test = 16) {
  auto cfg = DatasetConfig::standard(Contrast::Length, FeatureKind::Level, seed);
  cfg.n_train = n_train;
  cfg.n_val = n_val;
  cfg.n_test = n_test;
  return generate_dataset(cfg);
}

TrainConfig quick_config(int epochs, int patience) {
  TrainConfig cfg;
  cfg.max_epochs = epochs;
  cfg.patience = patience;
  cfg.batch_size = 16;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST(ClassificationMetrics, AllCorrect) {
  const std::vector<int> y{0, 1, 1, 0};
  const auto m = classification_metrics(y, y);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.weighted_f1, 1.0);
}

TEST(ClassificationMetrics, AllPredictedClassZero) {
  const std::vector<int> truth{0, 1, 0, 1, 0, 1};
  const std::vector<int> pred(6, 0);
  const auto m = classification_metrics(truth, pred);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
  // 0.5 * F1(precision 0.5, recall 1) + 0.5 * 0
  const double oracle = 0.5 * (2.0 * 0.5 * 1.0 / (0.5 + 1.0));
  EXPECT_NEAR(m.weighted_f1, oracle, 1e-15);
  EXPECT_NEAR(m.weighted_f1, 1.0 / 3.0, 1e-15);
}

TEST(ClassificationMetrics, SymmetricBalancedConfusionGivesAccuracyEqualF1) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(1, 40));  // per class
    const int errors = static_cast<int>(rng.uniform_int(0, n));
    std::vector<int> truth, pred;
    for (int c = 0; c < 2; ++c) {
      for (int i = 0; i < n; ++i) {
        truth.push_back(c);
        pred.push_back(i < errors ? 1 - c : c);
      }
    }
    const auto m = classification_metrics(truth, pred);
    EXPECT_NEAR(m.accuracy, m.weighted_f1, 1e-12) << n << " " << errors;
  }
}

TEST(ClassificationMetrics, RejectsBadInput) {
  const std::vector<int> a{0, 1}, b{0};
  EXPECT_THROW(classification_metrics(a, b), InvalidInput);
  const std::vector<int> empty;
  EXPECT_THROW(classification_metrics(empty, empty), InvalidInput);
}

TEST(TrainConfig, DefaultsAndValidation) {
  TrainConfig cfg;
  EXPECT_EQ(cfg.max_epochs, 100);
  EXPECT_EQ(cfg.patience, 10);
  EXPECT_NO_THROW(cfg.validate());
  cfg.patience = 100;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.lr_min = -1.0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
}

TEST(TrainConfig, JsonRoundTrip) {
  auto cfg = quick_config(7, 3);
  cfg.lr0 = 2.5e-3;
  const auto back = TrainConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.max_epochs, 7);
  EXPECT_EQ(back.patience, 3);
  EXPECT_EQ(back.lr0, 2.5e-3);
  EXPECT_EQ(back.seed, cfg.seed);
}

TEST(CosineSchedule, EndpointsAndMonotone) {
  TrainConfig cfg;
  EXPECT_DOUBLE_EQ(cosine_learning_rate(cfg, 0), cfg.lr0);
  double prev = cfg.lr0;
  for (int e = 1; e < cfg.max_epochs; ++e) {
    const double lr = cosine_learning_rate(cfg, e);
    EXPECT_LE(lr, prev);
    EXPECT_GE(lr, cfg.lr_min);
    prev = lr;
  }
  const double mid = cfg.lr_min + 0.5 * (cfg.lr0 - cfg.lr_min) * (1.0 + std::cos(std::numbers::pi * 0.5));
  EXPECT_NEAR(cosine_learning_rate(cfg, cfg.max_epochs / 2), mid, 1e-15);
}

TEST(AdamW, FirstStepMatchesHandComputation) {
  TrainConfig cfg;
  cfg.weight_decay = 0.1;
  AdamW opt(2, cfg);
  std::vector<double> theta{1.0, -2.0};
  const std::vector<double> grad{0.5, -0.25};
  const double lr = 0.01;
  opt.step(theta, grad, lr);
  for (int i = 0; i < 2; ++i) {
    const double orig = i == 0 ? 1.0 : -2.0;
    const double g = grad[static_cast<std::size_t>(i)];
    const double m_hat = (1 - cfg.beta1) * g / (1 - cfg.beta1);
    const double v_hat = (1 - cfg.beta2) * g * g / (1 - cfg.beta2);
    const double expected = orig * (1 - lr * cfg.weight_decay) - lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    EXPECT_NEAR(theta[static_cast<std::size_t>(i)], expected, 1e-15);
  }
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Trainer, OverfitsTenSamples) {
  const auto ds = tiny_dataset(3, 10, 2, 2);
  auto net = Network::initialize(Architecture{}, 4);
  std::vector<Example> batch;
  for (const auto& inst : ds.train) batch.push_back({inst.values, inst.label});
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  AdamW opt(net.parameters().size(), cfg);
  double loss = 1.0;
  int steps = 0;
  for (; steps < 200 && loss >= 0.01; ++steps) {
    const auto lg = net.parameter_gradient(batch);
    loss = lg.loss;
    opt.step(net.mutable_parameters(), lg.grad, 3e-3);
  }
  EXPECT_LT(net.loss(batch), 0.01) << "after " << steps << " steps";
}

TEST(Trainer, EarlyStoppingRestoresBestEpoch) {
  const auto ds = tiny_dataset(6);
  const auto cfg = quick_config(40, 3);
  auto [net, report] = train(Network::initialize(Architecture{}, 1), ds, cfg);
  ASSERT_FALSE(report.epochs.empty());
  const int total = static_cast<int>(report.epochs.size());
  if (report.stopped_early) {
    EXPECT_EQ(report.best_epoch, total - cfg.patience);
  } else {
    EXPECT_EQ(total, cfg.max_epochs);
  }
  double best = report.epochs.front().val_loss;
  int best_epoch = 1;
  for (const auto& e : report.epochs) {
    if (e.val_loss < best) {
      best = e.val_loss;
      best_epoch = e.epoch;
    }
  }
  EXPECT_EQ(report.best_epoch, best_epoch);
  EXPECT_EQ(report.best_val_loss, best);
  // The returned weights are the best-epoch checkpoint.
  std::vector<Example> val;
  for (const auto& inst : ds.val) val.push_back({inst.values, inst.label});
  EXPECT_NEAR(net.loss(val), report.best_val_loss, 1e-12);
  const auto test = evaluate(net, ds.test);
  EXPECT_EQ(test.accuracy, report.test_accuracy);
}

TEST(Trainer, DeterministicAndIndependentOfJobs) {
  const auto ds = tiny_dataset(8);
  auto cfg = quick_config(3, 2);
  const auto a = train(Network::initialize(Architecture{}, 2), ds, cfg);
  cfg.jobs = 3;
  const auto b = train(Network::initialize(Architecture{}, 2), ds, cfg);
  EXPECT_EQ(a.second.to_json(), b.second.to_json());
  EXPECT_EQ(a.first.to_json(), b.first.to_json());
}

TEST(Trainer, ReportJsonRoundTrip) {
  const auto ds = tiny_dataset(9);
  const auto [net, report] = train(Network::initialize(Architecture{}, 3), ds, quick_config(2, 1));
  const auto back = TrainReport::from_json(report.to_json());
  EXPECT_EQ(back.to_json(), report.to_json());
  EXPECT_EQ(back.epochs.size(), report.epochs.size());
}

TEST(Trainer, EpochCallbackSeesEveryEpoch) {
  const auto ds = tiny_dataset(10);
  int calls = 0;
  const auto [net, report] =
      train(Network::initialize(Architecture{}, 3), ds, quick_config(2, 1), [&](const EpochStats& e) {
        ++calls;
        EXPECT_EQ(e.epoch, calls);
      });
  EXPECT_EQ(calls, static_cast<int>(report.epochs.size()));
}

TEST(Trainer, DivergenceIsReported) {
  const auto ds = tiny_dataset(11);
  auto cfg = quick_config(2, 1);
  cfg.lr0 = 1e300;
  cfg.lr_min = 1e299;
  EXPECT_THROW(train(Network::initialize(Architecture{}, 3), ds, cfg), std::runtime_error);
}
