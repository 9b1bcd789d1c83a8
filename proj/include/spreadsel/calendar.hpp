#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace spreadsel {

/// Calendar month stamp, ordered and offsettable by whole months.
class YearMonth {
public:
    constexpr YearMonth() = default;
    constexpr YearMonth(int year, int month) : index_(year * 12 + (month - 1)) {}

    /// Parses `YYYY-MM`; throws Error(MalformedRow) on anything else.
    static YearMonth parse(std::string_view text);

    constexpr int year() const { return index_ / 12; }
    constexpr int month() const { return index_ % 12 + 1; }
    constexpr int index() const { return index_; }

    constexpr YearMonth operator+(int months) const { return from_index(index_ + months); }
    constexpr YearMonth operator-(int months) const { return from_index(index_ - months); }
    constexpr int operator-(YearMonth other) const { return index_ - other.index_; }

    constexpr auto operator<=>(const YearMonth&) const = default;

    std::string str() const;

private:
    static constexpr YearMonth from_index(int index) {
        YearMonth ym;
        ym.index_ = index;
        return ym;
    }
    int index_ = 0;
};

/// Calendar day, used only for daily observations before monthly averaging.
struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    static Date parse(std::string_view text);  // YYYY-MM-DD
    YearMonth year_month() const { return {year, month}; }

    auto operator<=>(const Date&) const = default;
};

}  // namespace spreadsel
