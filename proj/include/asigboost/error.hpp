#pragma once

#include <stdexcept>
#include <string>

namespace asigboost {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed configuration, loss specification, grid, or document.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data violates a contract (unparsable values, single class, ...).
class DataError : public Error {
public:
    using Error::Error;
};

}  // namespace asigboost
