#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsattr {

// A FeatureSpec or DatasetConfig violates its invariants.
class InvalidSpec : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A function argument is outside its documented domain.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input array length does not match the network's series length.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A non-finite value appeared while recording or differentiating a tape.
class NumericError : public std::runtime_error {
 public:
  NumericError(std::size_t node, std::string op, const std::string& what)
      : std::runtime_error("numeric error at tape node " + std::to_string(node) + " (" + op +
                           "): " + what),
        node_(node),
        op_(std::move(op)) {}

  std::size_t node() const noexcept { return node_; }
  const std::string& op() const noexcept { return op_; }

 private:
  std::size_t node_;
  std::string op_;
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Correlation requested on constant or too-short input.
class UndefinedCorrelation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A pipeline stage failed; carries the stage name.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace tsattr
