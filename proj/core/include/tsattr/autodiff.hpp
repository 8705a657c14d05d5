#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tsattr::ad {

struct Dims {
  int rows = 1;
  int cols = 1;
  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
  bool operator==(const Dims&) const = default;
};

using NodeId = std::size_t;

// Append-only record of tensor-valued primitive operations.
//
// Nodes are appended after their parents, so index order is a topological
// order and a single reverse sweep in backward() visits every node after all
// of its consumers. Each node owns its forward value and, lazily, its
// gradient. Nodes that do not require a gradient are skipped by the backward
// closures of their children.
class Tape {
 public:
  // Propagates the node's own gradient into its parents' gradients.
  using Backward = std::function<void(Tape& tape, NodeId self)>;

  NodeId leaf(std::vector<double> value, Dims dims, bool requires_grad, std::string_view op = "leaf");

  // Throws NumericError if `value` contains a non-finite entry.
  NodeId record(std::string_view op, Dims dims, std::vector<double> value,
                std::vector<NodeId> parents, Backward backward);

  // Seeds d(root)/d(root) = seed. The root must be a scalar node.
  void backward(NodeId root, double seed = 1.0);

  std::span<const double> value(NodeId id) const { return nodes_[id].value; }
  Dims dims(NodeId id) const { return nodes_[id].dims; }
  bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }
  const std::string& op(NodeId id) const { return nodes_[id].op; }
  const std::vector<NodeId>& parents(NodeId id) const { return nodes_[id].parents; }

  // Empty if nothing has flowed into this node.
  std::span<const double> grad(NodeId id) const { return nodes_[id].grad; }
  // Zero-initialised on first access.
  std::span<double> grad_mut(NodeId id);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::string op;
    Dims dims;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<NodeId> parents;
    Backward backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

// Primitive operations. Activations are [channels x time]; vectors are
// [n x 1].

// Same-padded, stride-1 convolution. w is [out x (in * kernel)], b is [out x 1].
NodeId conv1d(Tape& tape, NodeId x, NodeId w, NodeId b, int kernel);
NodeId relu(Tape& tape, NodeId x);
NodeId add(Tape& tape, NodeId a, NodeId b);
// [C x T] -> [C x 1], mean over time.
NodeId mean_over_time(Tape& tape, NodeId x);
// w is [out x in], v is [in x 1], b is [out x 1].
NodeId dense(Tape& tape, NodeId v, NodeId w, NodeId b);
NodeId softmax(Tape& tape, NodeId logits);
// Scalar node holding x[index].
NodeId select(Tape& tape, NodeId x, int index);
// -log softmax(logits)[label], computed with log-sum-exp.
NodeId cross_entropy(Tape& tape, NodeId logits, int label);

}  // namespace tsattr::ad
