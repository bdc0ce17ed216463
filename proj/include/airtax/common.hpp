#pragma once

#include <compare>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace airtax {

/// Input failed validation (bad file, bad row, bad config). Maps to exit code 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure: rank deficiency, undefined pass-through. Maps to exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Calendar month, the panel's time unit.
struct YearMonth {
    int year = 2003;
    int month = 1;

    static YearMonth parse(std::string_view text);  // "YYYY-MM"
    std::string to_string() const;

    /// Months since year 0; consecutive months differ by one.
    int ordinal() const { return year * 12 + (month - 1); }
    static YearMonth from_ordinal(int ordinal);

    friend auto operator<=>(const YearMonth&, const YearMonth&) = default;
};

/// Closed interval of months.
struct MonthWindow {
    YearMonth first;
    YearMonth last;

    bool contains(const YearMonth& m) const { return first <= m && m <= last; }
};

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

/// Strict double parse: whole field must be consumed and the value finite.
double parse_double(std::string_view text);

std::vector<std::string_view> split_csv_line(std::string_view line);

}  // namespace airtax
