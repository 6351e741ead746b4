#pragma once

#include <stdexcept>
#include <string>

namespace uif {

enum class ErrorKind {
    Io,
    Decode,
    Shape,
    ShapeMismatch,
    TooSmall,
    DegenerateInput,
    InsufficientData,
    NonFinite,
    Format,
    AllInvalid,
    InvalidMask,
    Usage,
};

inline const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Io: return "IoError";
        case ErrorKind::Decode: return "DecodeError";
        case ErrorKind::Shape: return "ShapeError";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::TooSmall: return "TooSmall";
        case ErrorKind::DegenerateInput: return "DegenerateInput";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::NonFinite: return "NonFinite";
        case ErrorKind::Format: return "FormatError";
        case ErrorKind::AllInvalid: return "AllInvalid";
        case ErrorKind::InvalidMask: return "InvalidMask";
        case ErrorKind::Usage: return "UsageError";
    }
    return "Error";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it onto a stable exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace uif
