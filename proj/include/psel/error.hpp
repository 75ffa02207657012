#pragma once

#include <stdexcept>
#include <string>

namespace psel {

/// Base class for every error raised by the library. The exit code maps
/// directly onto the command-line contract (1 usage, 2 data, 3 numerical).
class Error : public std::runtime_error {
public:
    Error(const std::string& what, int exit_code)
        : std::runtime_error(what), exit_code_(exit_code) {}

    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

/// Bad arguments or an invalid request (unknown criterion, empty model list, ...).
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(what, 1) {}
};

/// Malformed or inconsistent input data.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(what, 2) {}
};

/// Rank deficiency, divergence, iteration caps.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(what, 3) {}
};

} // namespace psel
