#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace pinflow {

/// Base error for all pinflow failures. `code()` is a stable machine-readable
/// identifier (e.g. "UnknownCard", "ShapeMismatch"); `what()` is the full
/// human-readable message including the code.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message, long line = -1)
        : std::runtime_error("[" + code + "] " + message +
                             (line >= 0 ? " (line " + std::to_string(line) + ")" : "")),
          code_(std::move(code)),
          line_(line) {}

    const std::string& code() const noexcept { return code_; }
    long line() const noexcept { return line_; }

private:
    std::string code_;
    long line_;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class GraphError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class TrainError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace pinflow
