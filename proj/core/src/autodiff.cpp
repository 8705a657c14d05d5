#include "tsattr/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "tsattr/errors.hpp"
#include "tsattr/kernels.hpp"
#include "tsattr/nn_math.hpp"

namespace tsattr::ad {

namespace {

bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

NodeId Tape::leaf(std::vector<double> value, Dims dims, bool requires_grad, std::string_view op) {
  if (value.size() != dims.size()) throw InvalidInput("leaf value does not match its dims");
  const NodeId id = nodes_.size();
  if (!all_finite(value)) throw NumericError(id, std::string(op), "non-finite leaf value");
  Node node;
  node.op = op;
  node.dims = dims;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return id;
}

NodeId Tape::record(std::string_view op, Dims dims, std::vector<double> value,
                    std::vector<NodeId> parents, Backward backward) {
  const NodeId id = nodes_.size();
  if (!all_finite(value)) throw NumericError(id, std::string(op), "non-finite forward value");
  Node node;
  node.op = op;
  node.dims = dims;
  node.value = std::move(value);
  node.requires_grad = std::any_of(parents.begin(), parents.end(),
                                   [this](NodeId p) { return nodes_[p].requires_grad; });
  node.parents = std::move(parents);
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return id;
}

std::span<double> Tape::grad_mut(NodeId id) {
  auto& node = nodes_[id];
  if (node.grad.empty()) node.grad.assign(node.value.size(), 0.0);
  return node.grad;
}

void Tape::backward(NodeId root, double seed) {
  if (root >= nodes_.size()) throw InvalidInput("backward: unknown root");
  if (nodes_[root].value.size() != 1) throw InvalidInput("backward: root must be a scalar");
  for (auto& node : nodes_) node.grad.clear();
  grad_mut(root)[0] = seed;
  for (NodeId i = root + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty() || !node.backward) continue;
    if (!all_finite(node.grad)) throw NumericError(i, node.op, "non-finite gradient");
    node.backward(*this, i);
  }
}

NodeId conv1d(Tape& tape, NodeId x, NodeId w, NodeId b, int kernel) {
  const Dims xd = tape.dims(x);
  const Dims wd = tape.dims(w);
  if (kernel % 2 == 0 || wd.cols != xd.rows * kernel || tape.dims(b) != Dims{wd.rows, 1}) {
    throw InvalidInput("conv1d: incompatible shapes");
  }
  const kernels::ConvShape shape{xd.rows, wd.rows, kernel, xd.cols};
  std::vector<double> padded(static_cast<std::size_t>(shape.in_channels) * shape.padded_length());
  kernels::pad_rows(tape.value(x), shape.in_channels, shape.length, shape.pad(), padded);
  std::vector<double> out(static_cast<std::size_t>(shape.out_channels) * shape.length);
  kernels::conv1d_forward(shape, padded, tape.value(w), tape.value(b), out, 0, shape.length);

  return tape.record(
      "conv1d", Dims{shape.out_channels, shape.length}, std::move(out), {x, w, b},
      [shape, padded = std::move(padded), x, w, b](Tape& t, NodeId self) {
        std::vector<double> grad_padded;
        if (t.requires_grad(x)) grad_padded.assign(padded.size(), 0.0);
        std::span<double> gw = t.requires_grad(w) ? t.grad_mut(w) : std::span<double>{};
        std::span<double> gb = t.requires_grad(b) ? t.grad_mut(b) : std::span<double>{};
        kernels::conv1d_backward(shape, padded, t.value(w), t.grad(self), grad_padded, gw, gb);
        if (!grad_padded.empty()) {
          auto gx = t.grad_mut(x);
          const int prow = shape.padded_length();
          for (int c = 0; c < shape.in_channels; ++c) {
            for (int i = 0; i < shape.length; ++i) {
              gx[static_cast<std::size_t>(c) * shape.length + i] +=
                  grad_padded[static_cast<std::size_t>(c) * prow + shape.pad() + i];
            }
          }
        }
      });
}

NodeId relu(Tape& tape, NodeId x) {
  auto in = tape.value(x);
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = nn::relu(in[i]);
  return tape.record("relu", tape.dims(x), std::move(out), {x}, [x](Tape& t, NodeId self) {
    auto g = t.grad(self);
    auto v = t.value(x);
    auto gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (v[i] > 0.0) gx[i] += g[i];
    }
  });
}

NodeId add(Tape& tape, NodeId a, NodeId b) {
  if (tape.dims(a) != tape.dims(b)) throw InvalidInput("add: shape mismatch");
  auto va = tape.value(a);
  auto vb = tape.value(b);
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = va[i] + vb[i];
  return tape.record("add", tape.dims(a), std::move(out), {a, b}, [a, b](Tape& t, NodeId self) {
    auto g = t.grad(self);
    for (NodeId p : {a, b}) {
      if (!t.requires_grad(p)) continue;
      auto gp = t.grad_mut(p);
      for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i];
    }
  });
}

NodeId mean_over_time(Tape& tape, NodeId x) {
  const Dims d = tape.dims(x);
  std::vector<double> out(static_cast<std::size_t>(d.rows));
  nn::mean_over_time(tape.value(x), d.rows, d.cols, out);
  return tape.record("mean_over_time", Dims{d.rows, 1}, std::move(out), {x},
                     [x, d](Tape& t, NodeId self) {
                       auto g = t.grad(self);
                       auto gx = t.grad_mut(x);
                       const double inv = 1.0 / d.cols;
                       for (int c = 0; c < d.rows; ++c) {
                         const double gc = g[c] * inv;
                         for (int i = 0; i < d.cols; ++i) gx[static_cast<std::size_t>(c) * d.cols + i] += gc;
                       }
                     });
}

NodeId dense(Tape& tape, NodeId v, NodeId w, NodeId b) {
  const Dims wd = tape.dims(w);
  if (tape.dims(v) != Dims{wd.cols, 1} || tape.dims(b) != Dims{wd.rows, 1}) {
    throw InvalidInput("dense: incompatible shapes");
  }
  std::vector<double> out(static_cast<std::size_t>(wd.rows));
  nn::dense(tape.value(v), tape.value(w), tape.value(b), wd.rows, wd.cols, out);
  return tape.record("dense", Dims{wd.rows, 1}, std::move(out), {v, w, b},
                     [v, w, b, wd](Tape& t, NodeId self) {
                       auto g = t.grad(self);
                       auto vv = t.value(v);
                       auto wv = t.value(w);
                       if (t.requires_grad(v)) {
                         auto gv = t.grad_mut(v);
                         for (int o = 0; o < wd.rows; ++o) {
                           for (int i = 0; i < wd.cols; ++i) gv[i] += g[o] * wv[static_cast<std::size_t>(o) * wd.cols + i];
                         }
                       }
                       if (t.requires_grad(w)) {
                         auto gw = t.grad_mut(w);
                         for (int o = 0; o < wd.rows; ++o) {
                           for (int i = 0; i < wd.cols; ++i) gw[static_cast<std::size_t>(o) * wd.cols + i] += g[o] * vv[i];
                         }
                       }
                       if (t.requires_grad(b)) {
                         auto gb = t.grad_mut(b);
                         for (int o = 0; o < wd.rows; ++o) gb[o] += g[o];
                       }
                     });
}

NodeId softmax(Tape& tape, NodeId logits) {
  auto z = tape.value(logits);
  std::vector<double> out(z.size());
  nn::softmax(z, out);
  return tape.record("softmax", tape.dims(logits), std::move(out), {logits},
                     [logits](Tape& t, NodeId self) {
                       auto g = t.grad(self);
                       auto q = t.value(self);
                       double dot = 0.0;
                       for (std::size_t i = 0; i < q.size(); ++i) dot += g[i] * q[i];
                       auto gz = t.grad_mut(logits);
                       for (std::size_t i = 0; i < q.size(); ++i) gz[i] += q[i] * (g[i] - dot);
                     });
}

NodeId select(Tape& tape, NodeId x, int index) {
  auto v = tape.value(x);
  if (index < 0 || static_cast<std::size_t>(index) >= v.size()) throw InvalidInput("select: index out of range");
  return tape.record("select", Dims{1, 1}, {v[static_cast<std::size_t>(index)]}, {x},
                     [x, index](Tape& t, NodeId self) { t.grad_mut(x)[static_cast<std::size_t>(index)] += t.grad(self)[0]; });
}

NodeId cross_entropy(Tape& tape, NodeId logits, int label) {
  auto z = tape.value(logits);
  if (label < 0 || static_cast<std::size_t>(label) >= z.size()) throw InvalidInput("cross_entropy: bad label");
  const double loss = nn::log_sum_exp(z) - z[static_cast<std::size_t>(label)];
  return tape.record("cross_entropy", Dims{1, 1}, {loss}, {logits},
                     [logits, label](Tape& t, NodeId self) {
                       const double g = t.grad(self)[0];
                       auto z = t.value(logits);
                       std::vector<double> q(z.size());
                       nn::softmax(z, q);
                       auto gz = t.grad_mut(logits);
                       for (std::size_t i = 0; i < q.size(); ++i) {
                         gz[i] += g * (q[i] - (static_cast<int>(i) == label ? 1.0 : 0.0));
                       }
                     });
}

}  // namespace tsattr::ad
