#include "spreadsel/calendar.hpp"

#include "spreadsel/error.hpp"

#include <charconv>
#include <cstdio>

namespace spreadsel {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::MissingSeries: return "MissingSeries";
        case ErrorKind::GapInDates: return "GapInDates";
        case ErrorKind::MalformedRow: return "MalformedRow";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::HorizonTooLong: return "HorizonTooLong";
        case ErrorKind::CoverageError: return "CoverageError";
        case ErrorKind::InvalidSplit: return "InvalidSplit";
        case ErrorKind::ConstantFeature: return "ConstantFeature";
        case ErrorKind::NotConverged: return "NotConverged";
        case ErrorKind::Separation: return "Separation";
        case ErrorKind::Singular: return "Singular";
        case ErrorKind::SingleClass: return "SingleClass";
        case ErrorKind::CountNeverAttained: return "CountNeverAttained";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::ZeroBenchmark: return "ZeroBenchmark";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

namespace {

int parse_fixed_int(std::string_view text, std::string_view whole) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw Error(ErrorKind::MalformedRow, "bad date '" + std::string(whole) + "'");
    return value;
}

}  // namespace

YearMonth YearMonth::parse(std::string_view text) {
    if (text.size() != 7 || text[4] != '-')
        throw Error(ErrorKind::MalformedRow, "bad year-month '" + std::string(text) + "'");
    const int year = parse_fixed_int(text.substr(0, 4), text);
    const int month = parse_fixed_int(text.substr(5, 2), text);
    if (month < 1 || month > 12)
        throw Error(ErrorKind::MalformedRow, "month out of range in '" + std::string(text) + "'");
    return {year, month};
}

std::string YearMonth::str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year(), month());
    return buf;
}

Date Date::parse(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        throw Error(ErrorKind::MalformedRow, "bad date '" + std::string(text) + "'");
    Date d{parse_fixed_int(text.substr(0, 4), text), parse_fixed_int(text.substr(5, 2), text),
           parse_fixed_int(text.substr(8, 2), text)};
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31)
        throw Error(ErrorKind::MalformedRow, "date out of range '" + std::string(text) + "'");
    return d;
}

}  // namespace spreadsel
