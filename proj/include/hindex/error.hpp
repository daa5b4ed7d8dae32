#pragma once

#include <stdexcept>
#include <string>

namespace hindex {

enum class ErrorKind {
    InvalidInput,
    Unsupported,
    NonInvertible,
    ResolutionInsufficient,
    Inconclusive,
    NormalizationFailure,
    InternalConsistency,
    NotElliptic,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// Parse and shape errors carry a source position (1-based).
class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line, int column);
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

}  // namespace hindex
