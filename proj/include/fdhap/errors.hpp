#pragma once

#include <stdexcept>
#include <string>

namespace fdhap {

// Invalid configuration: bad dimensions, out-of-range parameters, bad files.
class config_error : public std::invalid_argument {
 public:
  explicit config_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Pilot/energy training cannot satisfy the orthogonality conditions.
class infeasible_training_error : public config_error {
 public:
  explicit infeasible_training_error(const std::string& msg) : config_error(msg) {}
};

// Zero-norm channel column where a beam direction is required.
class degenerate_channel_error : public std::domain_error {
 public:
  explicit degenerate_channel_error(const std::string& msg) : std::domain_error(msg) {}
};

// Argument outside the mathematical domain of an expression.
class domain_error : public std::domain_error {
 public:
  explicit domain_error(const std::string& msg) : std::domain_error(msg) {}
};

// Conditioning or convergence failure in a numerical routine.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fdhap
