#pragma once

#include <stdexcept>
#include <string>

namespace kinemo {

// Error categories map onto the CLI exit codes:
//   ConfigError -> 1, DataError -> 2, NumericError -> 3.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error("data error: " + msg) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error("numeric error: " + msg) {}
};

// Missing or malformed column layout in an input file.
class SchemaError : public DataError {
public:
    explicit SchemaError(const std::string& msg) : DataError("schema: " + msg) {}
};

// Unparseable cell or record, reported with its location.
class ParseError : public DataError {
public:
    explicit ParseError(const std::string& msg) : DataError("parse: " + msg) {}
};

class EmptyInputError : public DataError {
public:
    explicit EmptyInputError(const std::string& msg) : DataError("empty input: " + msg) {}
};

// A series with no usable frames after cleaning.
class UnusableSeriesError : public DataError {
public:
    explicit UnusableSeriesError(const std::string& msg) : DataError("unusable series: " + msg) {}
};

class ShapeError : public DataError {
public:
    explicit ShapeError(const std::string& msg) : DataError("shape: " + msg) {}
};

// Scalar argument outside its documented domain.
class DomainError : public DataError {
public:
    explicit DomainError(const std::string& msg) : DataError("domain: " + msg) {}
};

class InsufficientDataError : public DataError {
public:
    explicit InsufficientDataError(const std::string& msg) : DataError("insufficient data: " + msg) {}
};

// Zero-variance or otherwise numerically unusable input.
class DegenerateInputError : public NumericError {
public:
    explicit DegenerateInputError(const std::string& msg) : NumericError("degenerate input: " + msg) {}
};

}  // namespace kinemo
