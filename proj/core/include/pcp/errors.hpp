#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pcp {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration values (counts, ranges, unknown names).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Vector or matrix dimensions that do not chain.
class ShapeError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    /// 1-based line number, 0 when not line oriented.
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class DimensionMismatchError : public ParseError {
public:
    using ParseError::ParseError;
};

class EmptyDatasetError : public Error {
public:
    using Error::Error;
};

// Dataset cannot supply the requested episode shape.
class CapacityError : public Error {
public:
    using Error::Error;
};

class MissingClassError : public Error {
public:
    using Error::Error;
};

class InsufficientPairsError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace pcp
