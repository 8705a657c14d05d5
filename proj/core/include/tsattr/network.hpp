#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tsattr/autodiff.hpp"

namespace tsattr {

struct Prediction {
  std::vector<double> logits;
  std::vector<double> probs;
  int predicted_class = 0;  // argmax of probs, ties to the lower index
};

// Builds logits/probs/class from raw logits.
Prediction make_prediction(std::vector<double> logits);

enum class GradientSpace { Probability, Logit };

// Edits single input points and re-evaluates the model. Implementations may
// reuse work between calls but must return exactly what predict() on the
// edited input would.
class InputEditor {
 public:
  virtual ~InputEditor() = default;
  virtual void set(int index, double value) = 0;
  virtual double get(int index) const = 0;
  virtual Prediction predict() = 0;
};

// Any differentiable binary classifier over fixed-length series.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual int input_length() const = 0;
  virtual Prediction predict(std::span<const double> x) const = 0;
  // d q_target / d x (Probability) or d z_target / d x (Logit).
  virtual std::vector<double> input_gradient(std::span<const double> x, int target,
                                             GradientSpace space = GradientSpace::Probability) const = 0;
  // Default editor re-runs predict() on every call.
  virtual std::unique_ptr<InputEditor> editor(std::span<const double> x) const;
};

struct Architecture {
  std::string name = "mini-resnet";
  int series_length = 150;
  int stem_channels = 16;
  int stem_kernel = 7;
  std::vector<int> block_channels{16, 32};
  int block_kernel = 5;
  int num_classes = 2;

  void validate() const;
  bool operator==(const Architecture&) const = default;
};

// One parameter tensor inside the flat parameter vector.
struct ParamTensor {
  std::string name;
  std::size_t offset = 0;
  ad::Dims dims;
  int fan_in = 1;
  bool is_bias = false;
};

std::vector<ParamTensor> parameter_layout(const Architecture& arch);
std::size_t parameter_count(const Architecture& arch);

struct Example {
  std::span<const double> x;
  int label = 0;
};

struct LossAndGradient {
  double loss = 0.0;          // mean cross-entropy over the batch
  std::vector<double> grad;   // d loss / d theta
  int correct = 0;            // examples whose argmax matches the label
};

// Residual 1-D convolutional classifier:
//   stem conv(k=7) -> ReLU
//   per block: conv(k=5) -> ReLU -> conv(k=5), add skip (1x1 projection when
//              the width changes), ReLU
//   global average pool over time -> dense -> logits
// All convolutions are stride 1 with zero 'same' padding.
class Network final : public Classifier {
 public:
  Network(Architecture arch, std::vector<double> params, std::uint64_t seed = 0);

  // He-uniform convolution weights from `seed`, zero biases, zero head.
  static Network initialize(const Architecture& arch, std::uint64_t seed);

  const Architecture& architecture() const { return arch_; }
  std::span<const double> parameters() const { return params_; }
  std::span<double> mutable_parameters() { return params_; }
  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  const std::vector<ParamTensor>& layout() const { return layout_; }
  // Parameters of the named tensor.
  std::span<double> tensor(std::string_view name);

  int input_length() const override { return arch_.series_length; }
  Prediction predict(std::span<const double> x) const override;
  std::vector<double> input_gradient(std::span<const double> x, int target,
                                     GradientSpace space = GradientSpace::Probability) const override;
  std::unique_ptr<InputEditor> editor(std::span<const double> x) const override;

  // Mean cross-entropy over the batch and its exact gradient in theta.
  LossAndGradient parameter_gradient(std::span<const Example> batch) const;
  double loss(std::span<const Example> batch) const;

  // Records the full forward graph. Returns the logits node; `input_node`
  // receives the input leaf and `param_nodes` one leaf per layout entry.
  ad::NodeId build_graph(ad::Tape& tape, std::span<const double> x, bool input_requires_grad,
                         bool params_require_grad, ad::NodeId* input_node = nullptr,
                         std::vector<ad::NodeId>* param_nodes = nullptr) const;

  void save(const std::filesystem::path& path) const;
  static Network load(const std::filesystem::path& path);
  std::string to_json() const;
  static Network from_json(std::string_view text);

 private:
  void check_input(std::span<const double> x) const;

  Architecture arch_;
  std::vector<ParamTensor> layout_;
  std::vector<double> params_;
  std::uint64_t seed_ = 0;
};

}  // namespace tsattr
