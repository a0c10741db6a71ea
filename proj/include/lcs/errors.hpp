#pragma once

#include <stdexcept>
#include <string>

namespace lcs {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid parameters, shapes, or configuration files.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A lightcone was requested at a point that lacks a full past or future cone.
class MarginError : public Error {
public:
    using Error::Error;
};

// Filesystem failures and malformed/corrupted binary containers.
class IoError : public Error {
public:
    using Error::Error;
};

// Non-finite input, degenerate statistics, or other numerical failure.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace lcs
