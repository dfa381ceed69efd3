#pragma once

#include <stdexcept>
#include <string>

namespace lrshield {

// Base class for all errors raised by the library.  Every message is expected
// to carry enough context (file, field, index) to act on without a debugger.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed external input (JSON/CSV syntax, missing fields, bad types).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Structurally valid input that violates a domain rule (disconnected network,
// negative rating, out-of-range index, inconsistent dimensions...).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// A numerical routine failed to reach its advertised accuracy (solver
// non-convergence, singular basis that could not be repaired, ...).
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

// Bad run configuration (unknown key, wrong type, out-of-range value).
// The CLI maps this to exit code 2.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

} // namespace lrshield
