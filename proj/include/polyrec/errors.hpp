#pragma once

#include <stdexcept>
#include <string>

namespace polyrec {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid parameters, malformed configuration, unusable fit setups. CLI exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Bad or inconsistent data: malformed input files, empty datasets,
// shape mismatches, non-finite scores. CLI exit code 3.
class DataError : public Error {
public:
    using Error::Error;
};

// Malformed input line; carries the 1-based line number in the message.
class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::size_t line)
        : DataError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Resource limits exceeded (memory budget, oracle size cap). CLI exit code 4.
class CapacityError : public Error {
public:
    using Error::Error;
};

}  // namespace polyrec
