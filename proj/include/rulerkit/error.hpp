/**
 * @file error.hpp
 * @brief Typed error carried by every rulerkit operation
 */
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace rulerkit {

enum class ErrorCode {
    DegenerateInput,
    EmptyInput,
    InvalidSigma,
    ShapeMismatch,
    InvalidKernel,
    InvalidValue,
    TooFewPoints,
    InvalidParams,
    DegenerateSpan,
    TooFewMarks,
    InvalidCount,
    DegenerateRange,
    TooManyMarks,
    SpecOutOfBounds,
    InvalidTilt,
    CannotFit,
    UnsupportedGlyph,
    EmptyDataset,
    NoRulers,
    MalformedHeader,
    TruncatedPayload,
    SchemaViolation,
    IoError,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// SchemaViolation raised by the JSON loaders; `path()` is the offending field,
/// e.g. "rulers[0].length_cm".
class SchemaError : public Error {
public:
    SchemaError(std::string path, const std::string& message)
        : Error(ErrorCode::SchemaViolation, path + ": " + message), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::DegenerateInput: return "DegenerateInput";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::InvalidSigma: return "InvalidSigma";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::InvalidKernel: return "InvalidKernel";
        case ErrorCode::InvalidValue: return "InvalidValue";
        case ErrorCode::TooFewPoints: return "TooFewPoints";
        case ErrorCode::InvalidParams: return "InvalidParams";
        case ErrorCode::DegenerateSpan: return "DegenerateSpan";
        case ErrorCode::TooFewMarks: return "TooFewMarks";
        case ErrorCode::InvalidCount: return "InvalidCount";
        case ErrorCode::DegenerateRange: return "DegenerateRange";
        case ErrorCode::TooManyMarks: return "TooManyMarks";
        case ErrorCode::SpecOutOfBounds: return "SpecOutOfBounds";
        case ErrorCode::InvalidTilt: return "InvalidTilt";
        case ErrorCode::CannotFit: return "CannotFit";
        case ErrorCode::UnsupportedGlyph: return "UnsupportedGlyph";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::NoRulers: return "NoRulers";
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::TruncatedPayload: return "TruncatedPayload";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace rulerkit
