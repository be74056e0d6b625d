#ifndef NLBVP_ERRORS_HPP
#define NLBVP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nlbvp {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t pos)
        : Error(msg + " at position " + std::to_string(pos)), position(pos) {}
    std::size_t position;
};

struct EvalError : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct ParameterError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    ConfigError(const std::string& field_path, const std::string& msg)
        : Error(field_path + ": " + msg), field(field_path) {}
    std::string field;
};

struct LinearSolveFailure : Error {
    using Error::Error;
};

struct OverflowError : Error {
    using Error::Error;
};

struct NoUniqueSolution : Error {
    using Error::Error;
};

struct InsufficientSignal : Error {
    using Error::Error;
};

}  // namespace nlbvp

#endif
