// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flowpinn {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid user configuration (layer sizes, weights, problem definition).
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Malformed or missing input data.
class DataError : public Error {
  public:
    using Error::Error;
};

/// Raised while evaluating an expression graph, e.g. on division by zero.
class EvaluationError : public Error {
  public:
    EvaluationError(const std::string& what, std::size_t node)
        : Error(what + " (node " + std::to_string(node) + ")"), node_{node} {}
    std::size_t node() const { return node_; }

  private:
    std::size_t node_;
};

/// A gradient or parameter entry became NaN or infinite.
class NonFiniteError : public Error {
  public:
    NonFiniteError(const std::string& what, std::size_t index)
        : Error(what + " (parameter index " + std::to_string(index) + ")"), index_{index} {}
    std::size_t index() const { return index_; }

  private:
    std::size_t index_;
};

/// Adaptive weights cannot be formed because a term's gradient vanished.
class BalancingError : public Error {
  public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
  public:
    DivergenceError(std::size_t epoch, const std::string& term)
        : Error("loss term '" + term + "' diverged at epoch " + std::to_string(epoch)),
          epoch_{epoch},
          term_{term} {}
    std::size_t epoch() const { return epoch_; }
    const std::string& term() const { return term_; }

  private:
    std::size_t epoch_;
    std::string term_;
};

}  // namespace flowpinn
