#include "hindex/error.hpp"

namespace hindex {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return "invalid-input";
        case ErrorKind::Unsupported: return "unsupported";
        case ErrorKind::NonInvertible: return "non-invertible-symbol";
        case ErrorKind::ResolutionInsufficient: return "resolution-insufficient";
        case ErrorKind::Inconclusive: return "inconclusive";
        case ErrorKind::NormalizationFailure: return "normalization-failure";
        case ErrorKind::InternalConsistency: return "internal-consistency";
        case ErrorKind::NotElliptic: return "not-elliptic";
    }
    return "unknown";
}

ParseError::ParseError(const std::string& msg, int line, int column)
    : Error(ErrorKind::InvalidInput, std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
      line_(line),
      column_(column) {}

}  // namespace hindex
