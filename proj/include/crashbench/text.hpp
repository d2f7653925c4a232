#pragma once

// Small string helpers shared by the parsers and writers.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace crashbench
{
inline bool iequals(std::string_view a, std::string_view b)
{
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        if (std::tolower(static_cast<unsigned char>(a[i]))
            != std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}

inline std::string to_lower(std::string_view s)
{
    std::string out(s);
    for (auto& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline std::string_view trim(std::string_view s)
{
    auto is_space = [](char c) {
        return std::isspace(static_cast<unsigned char>(c)) != 0;
    };
    while (!s.empty() && is_space(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && is_space(s.back()))
        s.remove_suffix(1);
    return s;
}

//! Split on a delimiter, trimming each piece. Empty input gives no pieces.
inline std::vector<std::string> split_trimmed(std::string_view s, char delim)
{
    std::vector<std::string> out;
    if (trim(s).empty())
        return out;
    std::size_t start = 0;
    while (true)
    {
        auto pos = s.find(delim, start);
        out.emplace_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

/*!
 * Parse a real number, tolerating surrounding blanks and thousands
 * separators ("1,234.5"). Returns nullopt for blank or malformed text.
 */
inline std::optional<double> parse_number(std::string_view text)
{
    auto t = trim(text);
    if (t.empty())
        return std::nullopt;
    std::string cleaned;
    cleaned.reserve(t.size());
    for (char c : t)
    {
        if (c != ',')
            cleaned.push_back(c);
    }
    if (!cleaned.empty() && cleaned.front() == '+')
        cleaned.erase(cleaned.begin());
    double value = 0;
    auto const* first = cleaned.data();
    auto const* last = cleaned.data() + cleaned.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value))
        return std::nullopt;
    return value;
}

inline std::optional<long long> parse_integer(std::string_view text)
{
    auto t = trim(text);
    if (t.empty())
        return std::nullopt;
    long long value = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        return std::nullopt;
    return value;
}

//! Shortest text that reads back to exactly the same double.
inline std::string format_double(double v)
{
    if (v == 0)
        return "0";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

//! Fixed-point text with the given number of decimals.
inline std::string format_fixed(double v, int decimals)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    std::string s(buf);
    if (s == "-0" || s.rfind("-0.", 0) == 0)
    {
        if (s.find_first_not_of("-0.") == std::string::npos)
            s.erase(0, 1);
    }
    return s;
}

//! Integer with comma thousands separators, rounded half away from zero.
inline std::string format_grouped(double v)
{
    auto n = static_cast<long long>(std::llround(v));
    bool neg = n < 0;
    auto digits = std::to_string(neg ? -n : n);
    std::string out;
    int count = 0;
    for (auto it = digits.rbegin(); it != digits.rend(); ++it)
    {
        if (count && count % 3 == 0)
            out.push_back(',');
        out.push_back(*it);
        ++count;
    }
    if (neg)
        out.push_back('-');
    std::reverse(out.begin(), out.end());
    return out;
}

/*!
 * Lower-case word tokens: maximal runs of characters that are neither
 * whitespace nor one of ",;/()". Hyphens stay inside tokens ("SR-74").
 */
inline std::vector<std::string> word_tokens(std::string_view s)
{
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty())
            out.push_back(std::move(cur));
        cur.clear();
    };
    for (char c : s)
    {
        if (std::isspace(static_cast<unsigned char>(c)) || c == ','
            || c == ';' || c == '/' || c == '(' || c == ')' || c == '.')
        {
            flush();
        }
        else
        {
            cur.push_back(static_cast<char>(
                std::tolower(static_cast<unsigned char>(c))));
        }
    }
    flush();
    return out;
}

}  // namespace crashbench
