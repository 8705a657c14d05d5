#include "tsattr/network.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "tsattr/errors.hpp"
#include "tsattr/io.hpp"
#include "tsattr/kernels.hpp"
#include "tsattr/nn_math.hpp"
#include "tsattr/rng.hpp"

namespace tsattr {

Prediction make_prediction(std::vector<double> logits) {
  Prediction p;
  p.probs.resize(logits.size());
  nn::softmax(logits, p.probs);
  p.predicted_class = 0;
  for (std::size_t i = 1; i < p.probs.size(); ++i) {
    if (p.probs[i] > p.probs[static_cast<std::size_t>(p.predicted_class)]) p.predicted_class = static_cast<int>(i);
  }
  p.logits = std::move(logits);
  return p;
}

namespace {

class RecomputingEditor final : public InputEditor {
 public:
  RecomputingEditor(const Classifier& model, std::span<const double> x) : model_(model), x_(x.begin(), x.end()) {}
  void set(int index, double value) override { x_.at(static_cast<std::size_t>(index)) = value; }
  double get(int index) const override { return x_.at(static_cast<std::size_t>(index)); }
  Prediction predict() override { return model_.predict(x_); }

 private:
  const Classifier& model_;
  std::vector<double> x_;
};

struct Range {
  int lo;
  int hi;  // inclusive; empty when hi < lo
  Range expand(int by, int length) const { return {std::max(0, lo - by), std::min(length - 1, hi + by)}; }
  bool empty() const { return hi < lo; }
};

// Tape-free forward pass that keeps every activation so a change to a few
// input points only recomputes their receptive field. A full forward is the
// same update over the whole series, which keeps the two paths identical.
class ForwardState {
 public:
  ForwardState(const Network& net, std::span<const double> x)
      : arch_(net.architecture()), length_(arch_.series_length) {
    const auto& layout = net.layout();
    const auto params = net.parameters();
    auto tensor = [&](std::size_t i) {
      return params.subspan(layout[i].offset, layout[i].dims.size());
    };
    std::size_t idx = 0;
    stem_ = {{1, arch_.stem_channels, arch_.stem_kernel, length_}, tensor(idx), tensor(idx + 1)};
    idx += 2;
    int in_ch = arch_.stem_channels;
    for (int width : arch_.block_channels) {
      Block blk;
      blk.in_ch = in_ch;
      blk.width = width;
      blk.conv1 = {{in_ch, width, arch_.block_kernel, length_}, tensor(idx), tensor(idx + 1)};
      blk.conv2 = {{width, width, arch_.block_kernel, length_}, tensor(idx + 2), tensor(idx + 3)};
      idx += 4;
      if (in_ch != width) {
        blk.has_proj = true;
        blk.proj = {{in_ch, width, 1, length_}, tensor(idx), tensor(idx + 1)};
        idx += 2;
      }
      const int pad = arch_.block_kernel / 2;
      blk.in_plain.assign(static_cast<std::size_t>(in_ch) * length_, 0.0);
      blk.in_pad.assign(static_cast<std::size_t>(in_ch) * (length_ + 2 * pad), 0.0);
      blk.h1.assign(static_cast<std::size_t>(width) * length_, 0.0);
      blk.r1_pad.assign(static_cast<std::size_t>(width) * (length_ + 2 * pad), 0.0);
      blk.h2.assign(static_cast<std::size_t>(width) * length_, 0.0);
      if (blk.has_proj) blk.skip.assign(static_cast<std::size_t>(width) * length_, 0.0);
      blk.out.assign(static_cast<std::size_t>(width) * length_, 0.0);
      blocks_.push_back(std::move(blk));
      in_ch = width;
    }
    head_w_ = tensor(idx);
    head_b_ = tensor(idx + 1);
    last_width_ = in_ch;

    const int spad = arch_.stem_kernel / 2;
    xpad_.assign(static_cast<std::size_t>(length_ + 2 * spad), 0.0);
    std::copy(x.begin(), x.end(), xpad_.begin() + spad);
    stem_out_.assign(static_cast<std::size_t>(arch_.stem_channels) * length_, 0.0);
    dirty_ = {0, length_ - 1};
  }

  void set(int index, double value) {
    if (index < 0 || index >= length_) throw InvalidInput("editor index out of range");
    const int spad = arch_.stem_kernel / 2;
    xpad_[static_cast<std::size_t>(index + spad)] = value;
    if (dirty_.empty()) {
      dirty_ = {index, index};
    } else {
      dirty_.lo = std::min(dirty_.lo, index);
      dirty_.hi = std::max(dirty_.hi, index);
    }
  }

  double get(int index) const {
    return xpad_.at(static_cast<std::size_t>(index + arch_.stem_kernel / 2));
  }

  Prediction predict() {
    if (!dirty_.empty()) {
      update(dirty_);
      dirty_ = {0, -1};
    }
    std::vector<double> pooled(static_cast<std::size_t>(last_width_));
    const auto& last = blocks_.empty() ? stem_relu_ : blocks_.back().out;
    nn::mean_over_time(last, last_width_, length_, pooled);
    std::vector<double> logits(static_cast<std::size_t>(arch_.num_classes));
    nn::dense(pooled, head_w_, head_b_, arch_.num_classes, last_width_, logits);
    return make_prediction(std::move(logits));
  }

 private:
  struct Conv {
    kernels::ConvShape shape;
    std::span<const double> w;
    std::span<const double> b;
  };
  struct Block {
    int in_ch = 0;
    int width = 0;
    Conv conv1, conv2, proj;
    bool has_proj = false;
    std::vector<double> in_plain, in_pad, h1, r1_pad, h2, skip, out;
  };

  static void run(const Conv& c, std::span<const double> padded_in, std::span<double> out, Range r) {
    kernels::conv1d_forward(c.shape, padded_in, c.w, c.b, out, r.lo, r.hi + 1);
  }

  void write_block_input(Block& blk, std::span<const double> src, Range r) {
    const int pad = arch_.block_kernel / 2;
    const int prow = length_ + 2 * pad;
    for (int c = 0; c < blk.in_ch; ++c) {
      for (int t = r.lo; t <= r.hi; ++t) {
        const double v = src[static_cast<std::size_t>(c) * length_ + t];
        blk.in_plain[static_cast<std::size_t>(c) * length_ + t] = v;
        blk.in_pad[static_cast<std::size_t>(c) * prow + pad + t] = v;
      }
    }
  }

  void update(Range dirty) {
    const int spad = arch_.stem_kernel / 2;
    const int bpad = arch_.block_kernel / 2;
    Range r = dirty.expand(spad, length_);
    run(stem_, xpad_, stem_out_, r);
    if (stem_relu_.empty()) stem_relu_.assign(stem_out_.size(), 0.0);
    for (int c = 0; c < arch_.stem_channels; ++c) {
      for (int t = r.lo; t <= r.hi; ++t) {
        const std::size_t i = static_cast<std::size_t>(c) * length_ + t;
        stem_relu_[i] = nn::relu(stem_out_[i]);
      }
    }
    const std::vector<double>* input = &stem_relu_;
    const int prow = length_ + 2 * bpad;
    for (auto& blk : blocks_) {
      write_block_input(blk, *input, r);
      const Range r1 = r.expand(bpad, length_);
      run(blk.conv1, blk.in_pad, blk.h1, r1);
      for (int c = 0; c < blk.width; ++c) {
        for (int t = r1.lo; t <= r1.hi; ++t) {
          blk.r1_pad[static_cast<std::size_t>(c) * prow + bpad + t] =
              nn::relu(blk.h1[static_cast<std::size_t>(c) * length_ + t]);
        }
      }
      const Range r2 = r1.expand(bpad, length_);
      run(blk.conv2, blk.r1_pad, blk.h2, r2);
      const std::vector<double>* skip = &blk.in_plain;
      if (blk.has_proj) {
        run(blk.proj, blk.in_plain, blk.skip, r2);
        skip = &blk.skip;
      }
      for (int c = 0; c < blk.width; ++c) {
        for (int t = r2.lo; t <= r2.hi; ++t) {
          const std::size_t i = static_cast<std::size_t>(c) * length_ + t;
          blk.out[i] = nn::relu(blk.h2[i] + (*skip)[i]);
        }
      }
      input = &blk.out;
      r = r2;
    }
  }

  const Architecture& arch_;
  int length_;
  Conv stem_;
  std::vector<Block> blocks_;
  std::span<const double> head_w_, head_b_;
  int last_width_ = 0;
  std::vector<double> xpad_, stem_out_, stem_relu_;
  Range dirty_{0, -1};
};

class IncrementalEditor final : public InputEditor {
 public:
  IncrementalEditor(const Network& net, std::span<const double> x) : state_(net, x) {}
  void set(int index, double value) override { state_.set(index, value); }
  double get(int index) const override { return state_.get(index); }
  Prediction predict() override { return state_.predict(); }

 private:
  ForwardState state_;
};

}  // namespace

std::unique_ptr<InputEditor> Classifier::editor(std::span<const double> x) const {
  return std::make_unique<RecomputingEditor>(*this, x);
}

void Architecture::validate() const {
  if (series_length < 1) throw InvalidInput("architecture: series_length must be positive");
  if (stem_channels < 1 || num_classes < 2) throw InvalidInput("architecture: bad widths");
  if (stem_kernel % 2 == 0 || block_kernel % 2 == 0 || stem_kernel < 1 || block_kernel < 1) {
    throw InvalidInput("architecture: kernels must be odd and positive");
  }
  for (int w : block_channels) {
    if (w < 1) throw InvalidInput("architecture: block widths must be positive");
  }
}

std::vector<ParamTensor> parameter_layout(const Architecture& arch) {
  arch.validate();
  std::vector<ParamTensor> layout;
  std::size_t offset = 0;
  auto push = [&](std::string name, int rows, int cols, int fan_in, bool bias) {
    ParamTensor t{std::move(name), offset, ad::Dims{rows, cols}, fan_in, bias};
    offset += t.dims.size();
    layout.push_back(std::move(t));
  };
  auto conv = [&](const std::string& name, int in, int out, int k) {
    push(name + ".weight", out, in * k, in * k, false);
    push(name + ".bias", out, 1, in * k, true);
  };
  conv("stem", 1, arch.stem_channels, arch.stem_kernel);
  int in_ch = arch.stem_channels;
  for (std::size_t b = 0; b < arch.block_channels.size(); ++b) {
    const int width = arch.block_channels[b];
    const std::string prefix = "block" + std::to_string(b);
    conv(prefix + ".conv1", in_ch, width, arch.block_kernel);
    conv(prefix + ".conv2", width, width, arch.block_kernel);
    if (in_ch != width) conv(prefix + ".proj", in_ch, width, 1);
    in_ch = width;
  }
  push("head.weight", arch.num_classes, in_ch, in_ch, false);
  push("head.bias", arch.num_classes, 1, in_ch, true);
  return layout;
}

std::size_t parameter_count(const Architecture& arch) {
  const auto layout = parameter_layout(arch);
  return layout.back().offset + layout.back().dims.size();
}

Network::Network(Architecture arch, std::vector<double> params, std::uint64_t seed)
    : arch_(std::move(arch)), layout_(parameter_layout(arch_)), params_(std::move(params)), seed_(seed) {
  if (params_.size() != parameter_count(arch_)) {
    throw InvalidInput("parameter vector has " + std::to_string(params_.size()) + " entries, architecture needs " +
                       std::to_string(parameter_count(arch_)));
  }
}

Network Network::initialize(const Architecture& arch, std::uint64_t seed) {
  const auto layout = parameter_layout(arch);
  std::vector<double> params(parameter_count(arch), 0.0);
  Rng rng(seed);
  for (const auto& t : layout) {
    if (t.is_bias || t.name.rfind("head.", 0) == 0) continue;
    const double bound = std::sqrt(6.0 / t.fan_in);
    for (std::size_t i = 0; i < t.dims.size(); ++i) params[t.offset + i] = (2.0 * rng.uniform() - 1.0) * bound;
  }
  return Network(arch, std::move(params), seed);
}

std::span<double> Network::tensor(std::string_view name) {
  for (const auto& t : layout_) {
    if (t.name == name) return std::span<double>(params_).subspan(t.offset, t.dims.size());
  }
  throw InvalidInput("no parameter tensor named '" + std::string(name) + "'");
}

void Network::check_input(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != arch_.series_length) {
    throw ShapeError("input has length " + std::to_string(x.size()) + ", network expects " +
                     std::to_string(arch_.series_length));
  }
}

Prediction Network::predict(std::span<const double> x) const {
  check_input(x);
  ForwardState state(*this, x);
  return state.predict();
}

std::unique_ptr<InputEditor> Network::editor(std::span<const double> x) const {
  check_input(x);
  return std::make_unique<IncrementalEditor>(*this, x);
}

ad::NodeId Network::build_graph(ad::Tape& tape, std::span<const double> x, bool input_requires_grad,
                                bool params_require_grad, ad::NodeId* input_node,
                                std::vector<ad::NodeId>* param_nodes) const {
  check_input(x);
  const ad::NodeId input =
      tape.leaf(std::vector<double>(x.begin(), x.end()), ad::Dims{1, arch_.series_length}, input_requires_grad, "input");
  std::vector<ad::NodeId> p;
  p.reserve(layout_.size());
  for (const auto& t : layout_) {
    const auto* begin = params_.data() + t.offset;
    p.push_back(tape.leaf(std::vector<double>(begin, begin + t.dims.size()), t.dims, params_require_grad, t.name));
  }
  std::size_t idx = 0;
  ad::NodeId a = ad::relu(tape, ad::conv1d(tape, input, p[0], p[1], arch_.stem_kernel));
  idx = 2;
  int in_ch = arch_.stem_channels;
  for (int width : arch_.block_channels) {
    const ad::NodeId h1 = ad::conv1d(tape, a, p[idx], p[idx + 1], arch_.block_kernel);
    const ad::NodeId r1 = ad::relu(tape, h1);
    const ad::NodeId h2 = ad::conv1d(tape, r1, p[idx + 2], p[idx + 3], arch_.block_kernel);
    idx += 4;
    ad::NodeId skip = a;
    if (in_ch != width) {
      skip = ad::conv1d(tape, a, p[idx], p[idx + 1], 1);
      idx += 2;
    }
    a = ad::relu(tape, ad::add(tape, h2, skip));
    in_ch = width;
  }
  const ad::NodeId pooled = ad::mean_over_time(tape, a);
  const ad::NodeId logits = ad::dense(tape, pooled, p[idx], p[idx + 1]);
  if (input_node) *input_node = input;
  if (param_nodes) *param_nodes = std::move(p);
  return logits;
}

std::vector<double> Network::input_gradient(std::span<const double> x, int target, GradientSpace space) const {
  if (target < 0 || target >= arch_.num_classes) throw InvalidInput("target class out of range");
  ad::Tape tape;
  ad::NodeId input = 0;
  const ad::NodeId logits = build_graph(tape, x, true, false, &input);
  const ad::NodeId out = space == GradientSpace::Probability
                             ? ad::select(tape, ad::softmax(tape, logits), target)
                             : ad::select(tape, logits, target);
  tape.backward(out);
  auto g = tape.grad(input);
  if (g.empty()) return std::vector<double>(x.size(), 0.0);
  return {g.begin(), g.end()};
}

LossAndGradient Network::parameter_gradient(std::span<const Example> batch) const {
  if (batch.empty()) throw InvalidInput("parameter_gradient: empty batch");
  LossAndGradient out;
  out.grad.assign(params_.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    ad::Tape tape;
    std::vector<ad::NodeId> pnodes;
    const ad::NodeId logits = build_graph(tape, ex.x, false, true, nullptr, &pnodes);
    const ad::NodeId ce = ad::cross_entropy(tape, logits, ex.label);
    out.loss += tape.value(ce)[0] * scale;
    auto z = tape.value(logits);
    const auto best = std::max_element(z.begin(), z.end()) - z.begin();
    if (best == ex.label) ++out.correct;
    tape.backward(ce, scale);
    for (std::size_t k = 0; k < layout_.size(); ++k) {
      auto g = tape.grad(pnodes[k]);
      if (g.empty()) continue;
      double* dst = out.grad.data() + layout_[k].offset;
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    }
  }
  return out;
}

double Network::loss(std::span<const Example> batch) const {
  if (batch.empty()) throw InvalidInput("loss: empty batch");
  double total = 0.0;
  for (const auto& ex : batch) {
    const auto p = predict(ex.x);
    total += nn::log_sum_exp(p.logits) - p.logits.at(static_cast<std::size_t>(ex.label));
  }
  return total / static_cast<double>(batch.size());
}

std::string Network::to_json() const {
  nlohmann::json arch = {{"name", arch_.name},
                         {"series_length", arch_.series_length},
                         {"stem_channels", arch_.stem_channels},
                         {"stem_kernel", arch_.stem_kernel},
                         {"block_channels", arch_.block_channels},
                         {"block_kernel", arch_.block_kernel},
                         {"num_classes", arch_.num_classes}};
  std::string text = "{\n  \"format\": \"tsattr-checkpoint\",\n  \"version\": 1,\n";
  text += "  \"architecture\": " + arch.dump() + ",\n";
  text += "  \"seed\": " + std::to_string(seed_) + ",\n";
  text += "  \"parameter_count\": " + std::to_string(params_.size()) + ",\n";
  text += "  \"parameters\": [";
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (i) text += ',';
    text += (i % 8 == 0) ? "\n    " : " ";
    text += io::format_double(params_[i]);
  }
  text += "\n  ]\n}\n";
  return text;
}

Network Network::from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("format", std::string{}) != "tsattr-checkpoint") throw InvalidInput("not a tsattr checkpoint");
  const auto& a = j.at("architecture");
  Architecture arch;
  arch.name = a.at("name").get<std::string>();
  arch.series_length = a.at("series_length").get<int>();
  arch.stem_channels = a.at("stem_channels").get<int>();
  arch.stem_kernel = a.at("stem_kernel").get<int>();
  arch.block_channels = a.at("block_channels").get<std::vector<int>>();
  arch.block_kernel = a.at("block_kernel").get<int>();
  arch.num_classes = a.at("num_classes").get<int>();
  return Network(arch, j.at("parameters").get<std::vector<double>>(), j.at("seed").get<std::uint64_t>());
}

void Network::save(const std::filesystem::path& path) const { io::write_file(path, to_json()); }

Network Network::load(const std::filesystem::path& path) { return from_json(io::read_file(path)); }

}  // namespace tsattr
