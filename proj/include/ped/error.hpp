#ifndef PED_ERROR_HPP
#define PED_ERROR_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ped {

enum class ErrorCode {
    // io
    BadMagic,
    UnsupportedVersion,
    UnsupportedDtype,
    TruncatedPayload,
    TrailingBytes,
    NonFiniteValue,
    EmptyMatrix,
    MissingClass,
    ZeroLabel,
    LengthMismatch,
    FileError,
    ParseError,
    // energy
    DimensionMismatch,
    TooFewSamples,
    EmptyUnitList,
    InvalidArgument,
    // cluster1d
    BadK,
    NonFiniteInput,
    TooLarge,
    InconsistentClustering,
    // ped
    CannotPruneBelowOne,
    ScheduleExhausted,
    AdapterFailure,
    // toynet
    ShapeMismatch,
    DivergedLoss,
    BadArity,
};

std::string_view to_string(ErrorCode code);

/// Numerical failures map to a distinct CLI exit status from validation errors.
constexpr bool is_numerical(ErrorCode code) { return code == ErrorCode::DivergedLoss; }

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &message)
        : std::runtime_error(format(code, message, {}, {})), code_(code) {}

    Error(ErrorCode code, const std::string &message, std::string path,
          std::optional<std::uint64_t> offset = {})
        : std::runtime_error(format(code, message, path, offset)), code_(code),
          path_(std::move(path)), offset_(offset) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string &path() const noexcept { return path_; }
    std::optional<std::uint64_t> offset() const noexcept { return offset_; }

  private:
    static std::string format(ErrorCode code, const std::string &message, const std::string &path,
                              std::optional<std::uint64_t> offset);

    ErrorCode code_;
    std::string path_;
    std::optional<std::uint64_t> offset_;
};

} // namespace ped

#endif // PED_ERROR_HPP
