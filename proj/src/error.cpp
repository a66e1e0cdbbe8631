#include "ped/error.hpp"

namespace ped {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::TrailingBytes: return "TrailingBytes";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::ZeroLabel: return "ZeroLabel";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::FileError: return "FileError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::EmptyUnitList: return "EmptyUnitList";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::InconsistentClustering: return "InconsistentClustering";
    case ErrorCode::CannotPruneBelowOne: return "CannotPruneBelowOne";
    case ErrorCode::ScheduleExhausted: return "ScheduleExhausted";
    case ErrorCode::AdapterFailure: return "AdapterFailure";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::BadArity: return "BadArity";
    }
    return "Unknown";
}

std::string Error::format(ErrorCode code, const std::string &message, const std::string &path,
                          std::optional<std::uint64_t> offset) {
    std::string out(to_string(code));
    if (!path.empty()) {
        out += " [" + path;
        if (offset)
            out += " @ byte " + std::to_string(*offset);
        out += "]";
    }
    out += ": " + message;
    return out;
}

} // namespace ped
