#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spreadsel {

enum class ErrorKind {
    MissingSeries,
    GapInDates,
    MalformedRow,
    EmptyInput,
    DomainError,
    HorizonTooLong,
    CoverageError,
    InvalidSplit,
    ConstantFeature,
    NotConverged,
    Separation,
    Singular,
    SingleClass,
    CountNeverAttained,
    LengthMismatch,
    ZeroBenchmark,
    InvalidConfig,
    IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so callers can branch
/// on it without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace spreadsel
