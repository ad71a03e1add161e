#ifndef MARKETRL_ERRORS_HPP
#define MARKETRL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace marketrl {

/// Precondition breach on an operation argument (out-of-range action, bad period, ...).
class ContractViolation : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Call sequence violation (step before reset, step after truncation, ...).
class LifecycleError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// Invalid configuration: bad field values, unknown keys, unreadable files.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Filesystem / serialization failure at run time.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace marketrl

#endif
