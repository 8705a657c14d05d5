#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "test_util.hpp"
#include "tsattr/autodiff.hpp"
#include "tsattr/errors.hpp"
#include "tsattr/network.hpp"

using namespace tsattr;
using tsattr::testing::normwise_rel_error;
using tsattr::testing::random_net;
using tsattr::testing::random_series;

TEST(Prediction, SoftmaxClosedForm) {
  const auto p = make_prediction({2.0, 0.0});
  EXPECT_NEAR(p.probs[0], 0.880797, 1e-6);
  EXPECT_NEAR(p.probs[1], 0.119203, 1e-6);
  EXPECT_EQ(p.predicted_class, 0);
}

TEST(Prediction, TiesGoToClassZero) { EXPECT_EQ(make_prediction({0.3, 0.3}).predicted_class, 0); }

TEST(Network, ZeroHeadGivesUniformProbabilities) {
  const auto net = Network::initialize(Architecture{}, 1);
  const auto p = net.predict(random_series(2));
  EXPECT_EQ(p.probs[0], 0.5);
  EXPECT_EQ(p.probs[1], 0.5);
  EXPECT_EQ(p.predicted_class, 0);
}

TEST(Network, ParameterCountMatchesLayout) {
  const Architecture arch;
  const auto layout = parameter_layout(arch);
  std::size_t total = 0;
  for (const auto& t : layout) {
    EXPECT_EQ(t.offset, total);
    total += t.dims.size();
  }
  EXPECT_EQ(total, parameter_count(arch));
  EXPECT_EQ(Network::initialize(arch, 0).parameters().size(), total);
}

TEST(Network, HeUniformBoundsAndZeroBiases) {
  const auto net = Network::initialize(Architecture{}, 3);
  for (const auto& t : net.layout()) {
    const auto values = net.parameters().subspan(t.offset, t.dims.size());
    const bool head = t.name.rfind("head.", 0) == 0;
    for (double v : values) {
      if (t.is_bias || head) {
        ASSERT_EQ(v, 0.0) << t.name;
      } else {
        ASSERT_LE(std::abs(v), std::sqrt(6.0 / t.fan_in)) << t.name;
      }
    }
  }
}

TEST(Network, SoftmaxNormalizedAndDeterministic) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto net = random_net(s);
    const auto x = random_series(100 + s);
    const auto a = net.predict(x);
    const auto b = net.predict(x);
    EXPECT_NEAR(a.probs[0] + a.probs[1], 1.0, 1e-12);
    EXPECT_EQ(a.logits, b.logits);
    EXPECT_EQ(a.probs, b.probs);
  }
}

TEST(Network, WrongLengthIsShapeError) {
  const auto net = random_net(0);
  EXPECT_THROW(net.predict(random_series(1, 149)), ShapeError);
  EXPECT_THROW(net.input_gradient(random_series(1, 151), 0), ShapeError);
}

TEST(Network, NonFiniteInputRaisesNumericError) {
  const auto net = random_net(0);
  auto x = random_series(1);
  x[17] = std::numeric_limits<double>::quiet_NaN();
  try {
    net.input_gradient(x, 0);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_FALSE(e.op().empty());
  }
}

TEST(Network, ConstantNetworkHasZeroInputGradient) {
  auto net = Network::initialize(Architecture{}, 0);
  for (auto& v : net.mutable_parameters()) v = 0.0;
  const auto g = net.input_gradient(random_series(4), 1);
  ASSERT_EQ(g.size(), 150u);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(Network, InputGradientMatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto net = random_net(s);
    const auto x = random_series(1000 + s);
    for (auto space : {GradientSpace::Probability, GradientSpace::Logit}) {
      const int target = static_cast<int>(s % 2);
      const auto g = net.input_gradient(x, target, space);
      ASSERT_EQ(g.size(), 150u);
      const auto fd = tsattr::testing::kink_aware_input_fd(net, x, target, space);
      EXPECT_LT(normwise_rel_error(g, fd.grad), 1e-4) << "seed " << s;
      EXPECT_LE(fd.refined, 15) << "seed " << s;  // at most 10% of stencils straddle a ReLU kink
    }
  }
}

TEST(Network, ParameterGradientMatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto net = random_net(s);
    const auto x0 = random_series(2000 + s);
    const auto x1 = random_series(3000 + s);
    const std::vector<Example> batch{{x0, 0}, {x1, 1}};
    const auto lg = net.parameter_gradient(batch);
    EXPECT_NEAR(lg.loss, net.loss(batch), 1e-12);
    Rng rng(s);
    std::vector<std::size_t> coords;
    std::vector<double> analytic;
    for (int k = 0; k < 25; ++k) {
      coords.push_back(static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(lg.grad.size()) - 1)));
      analytic.push_back(lg.grad[coords.back()]);
    }
    auto params = net.mutable_parameters();
    const auto fd = tsattr::testing::kink_aware_fd(
        coords.size(),
        [&](std::size_t k, double delta) {
          const double orig = params[coords[k]];
          params[coords[k]] = orig + delta;
          const double l = net.loss(batch);
          params[coords[k]] = orig;
          return l;
        },
        1e-5, 1e-4);
    EXPECT_LT(normwise_rel_error(analytic, fd.grad), 1e-3) << "seed " << s;
    EXPECT_LE(fd.refined, 3) << "seed " << s;
  }
}

TEST(Network, SaturatedCorrectPredictionHasVanishingGradient) {
  auto net = random_net(5);
  for (auto& v : net.tensor("head.weight")) v = 0.0;
  auto bias = net.tensor("head.bias");
  bias[0] = 40.0;
  bias[1] = 0.0;
  const auto x = random_series(6);
  const std::vector<Example> batch{{x, 0}};
  const auto lg = net.parameter_gradient(batch);
  double norm = 0.0;
  for (double g : lg.grad) norm += g * g;
  EXPECT_LT(std::sqrt(norm), 1e-6);
}

TEST(Tape, AdditiveConstantDoesNotChangeGradient) {
  const auto net = random_net(7);
  const auto x = random_series(8);
  auto grads = [&](bool with_constant) {
    ad::Tape tape;
    std::vector<ad::NodeId> params;
    const auto logits = net.build_graph(tape, x, false, true, nullptr, &params);
    auto loss = ad::cross_entropy(tape, logits, 1);
    if (with_constant) loss = ad::add(tape, loss, tape.leaf({3.25}, {1, 1}, false));
    tape.backward(loss);
    std::vector<double> out;
    for (auto id : params) {
      const auto g = tape.grad(id);
      out.insert(out.end(), g.begin(), g.end());
    }
    return out;
  };
  EXPECT_EQ(grads(false), grads(true));
}

TEST(Tape, ParentsPrecedeChildren) {
  const auto net = random_net(9);
  ad::Tape tape;
  net.build_graph(tape, random_series(1), true, true);
  for (ad::NodeId n = 0; n < tape.size(); ++n) {
    for (auto p : tape.parents(n)) EXPECT_LT(p, n);
  }
}

TEST(Tape, BackwardRequiresScalarRoot) {
  ad::Tape tape;
  const auto v = tape.leaf({1.0, 2.0}, {2, 1}, true);
  EXPECT_THROW(tape.backward(v), InvalidInput);
}

TEST(Tape, GraphMatchesFastForward) {
  const auto net = random_net(10);
  const auto x = random_series(11);
  ad::Tape tape;
  const auto logits = net.build_graph(tape, x, false, false);
  const auto z = tape.value(logits);
  const auto p = net.predict(x);
  EXPECT_EQ(std::vector<double>(z.begin(), z.end()), p.logits);
}

TEST(Network, ResidualBlockWithZeroConvsIsIdentity) {
  // Zeroing block0's convolutions must give the same output as a network
  // without block0 (its input is already non-negative after the stem ReLU).
  const auto full = random_net(12);
  auto zeroed = full;
  for (const char* name : {"block0.conv1.weight", "block0.conv1.bias", "block0.conv2.weight", "block0.conv2.bias"}) {
    for (auto& v : zeroed.tensor(name)) v = 0.0;
  }
  Architecture short_arch;
  short_arch.block_channels = {32};
  auto shorter = Network::initialize(short_arch, 0);
  for (const char* name : {"stem.weight", "stem.bias", "head.weight", "head.bias"}) {
    auto src = zeroed.tensor(name);
    std::copy(src.begin(), src.end(), shorter.tensor(name).begin());
  }
  for (const char* part : {".conv1.weight", ".conv1.bias", ".conv2.weight", ".conv2.bias", ".proj.weight",
                           ".proj.bias"}) {
    auto src = zeroed.tensor(std::string("block1") + part);
    std::copy(src.begin(), src.end(), shorter.tensor(std::string("block0") + part).begin());
  }
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto x = random_series(50 + s);
    EXPECT_EQ(zeroed.predict(x).logits, shorter.predict(x).logits);
  }
}

TEST(Network, CheckpointRoundTripIsBitExact) {
  const auto net = random_net(13);
  const auto path = std::filesystem::temp_directory_path() / "tsattr_ckpt_roundtrip.json";
  net.save(path);
  const auto back = Network::load(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.architecture(), net.architecture());
  EXPECT_EQ(back.seed(), net.seed());
  ASSERT_EQ(back.parameters().size(), net.parameters().size());
  for (std::size_t i = 0; i < net.parameters().size(); ++i) ASSERT_EQ(back.parameters()[i], net.parameters()[i]);
  const auto x = random_series(14);
  EXPECT_EQ(back.predict(x).logits, net.predict(x).logits);
}

TEST(Network, IncrementalEditorMatchesFullForward) {
  const auto net = random_net(15);
  auto x = random_series(16);
  auto editor = net.editor(x);
  Rng rng(17);
  for (int step = 0; step < 300; ++step) {
    const int i = static_cast<int>(rng.uniform_int(0, 149));
    const double v = rng.normal();
    editor->set(i, v);
    x[static_cast<std::size_t>(i)] = v;
    EXPECT_EQ(editor->get(i), v);
    if (step % 3 == 0) {
      const auto a = editor->predict();
      const auto b = net.predict(x);
      ASSERT_EQ(a.logits, b.logits) << "step " << step;
      ASSERT_EQ(a.probs, b.probs);
    }
  }
}

TEST(Network, IncrementalEditorHandlesEdges) {
  const auto net = random_net(18);
  auto x = random_series(19);
  auto editor = net.editor(x);
  for (int i : {0, 149, 1, 148}) {
    editor->set(i, 0.0);
    x[static_cast<std::size_t>(i)] = 0.0;
    ASSERT_EQ(editor->predict().logits, net.predict(x).logits) << i;
  }
}

TEST(Architecture, ValidateRejectsBadDescriptors) {
  Architecture a;
  a.stem_kernel = 4;
  EXPECT_THROW(a.validate(), InvalidInput);
  Architecture b;
  b.block_channels = {16, 0};
  EXPECT_THROW(b.validate(), InvalidInput);
}
