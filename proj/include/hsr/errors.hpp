#pragma once

#include <stdexcept>
#include <string>

namespace hsr {

// Invalid user configuration: bad keys, out-of-range parameters, unreadable
// or malformed input files.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operand shapes do not conform.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Non-finite values, failed factorizations, divergence.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed HTF/CSV payloads.
class FormatError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

namespace detail {

inline void require_dims(bool ok, const std::string& what) {
    if (!ok) {
        throw DimensionError(what);
    }
}

} // namespace detail
} // namespace hsr
