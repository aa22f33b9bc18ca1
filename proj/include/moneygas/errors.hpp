#pragma once

#include <stdexcept>

namespace moneygas {

/// Invalid simulation or experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller broke an operation's preconditions (bad index, negative amount, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A distribution fit or estimator had too little (or degenerate) data.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Master-equation step rejected by the stability guard.
class StepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace moneygas
