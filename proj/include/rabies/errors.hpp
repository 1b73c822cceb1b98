#pragma once

#include <stdexcept>
#include <string>

namespace rabies {

/// Base of the toolkit's error hierarchy. Each kind maps onto one CLI exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept = 0;
};

/// Invalid configuration, parameters, grids or names.
class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

/// Integration blow-up, divergence, non-convergence, degenerate input.
class NumericError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

/// Missing or unreadable files, unwritable output directories.
class IoError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

} // namespace rabies
