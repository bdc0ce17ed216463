#include "airtax/common.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace airtax {

YearMonth YearMonth::parse(std::string_view text)
{
    if (text.size() != 7 || text[4] != '-') {
        throw ValidationError("period '" + std::string(text) + "' is not YYYY-MM");
    }
    int year = 0;
    int month = 0;
    auto y = std::from_chars(text.data(), text.data() + 4, year);
    auto m = std::from_chars(text.data() + 5, text.data() + 7, month);
    if (y.ec != std::errc{} || y.ptr != text.data() + 4 || m.ec != std::errc{} ||
        m.ptr != text.data() + 7 || month < 1 || month > 12) {
        throw ValidationError("period '" + std::string(text) + "' is not YYYY-MM");
    }
    return {year, month};
}

std::string YearMonth::to_string() const
{
    std::array<char, 16> buf{};
    std::snprintf(buf.data(), buf.size(), "%04d-%02d", year, month);
    return buf.data();
}

YearMonth YearMonth::from_ordinal(int ordinal)
{
    return {ordinal / 12, ordinal % 12 + 1};
}

std::string format_double(double value)
{
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view text)
{
    double value = 0.0;
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    if (!text.empty() && *begin == '+') {
        ++begin;
    }
    auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end || text.empty() || !std::isfinite(value)) {
        throw ValidationError("'" + std::string(text) + "' is not a finite number");
    }
    return value;
}

std::vector<std::string_view> split_csv_line(std::string_view line)
{
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

}  // namespace airtax
