#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace silic {

/// Fixed-point rendering with '.' as decimal separator regardless of locale.
std::string format_fixed(double value, int decimals);
/// Shortest text that parses back to the identical double.
std::string format_roundtrip(double value);
/// "[v0, v1, ...]" using format_roundtrip.
std::string format_list(std::span<const double> values);
std::string format_int_list(std::span<const int> values);

/// Locale-independent strict parse of a whole token; false on any trailing junk.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Splits one CSV record (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> split_csv_line(std::string_view line);
/// Quotes a field if it contains a comma, quote or leading/trailing space.
std::string csv_escape(std::string_view field);

/// A header row plus data rows, each tagged with its 1-based line number.
/// Blank lines are skipped; a leading UTF-8 BOM is dropped.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;

    /// Column position, or -1.
    int column(std::string_view name) const;
};

/// Throws SchemaError when the stream has no header or lacks a required column.
CsvTable read_csv(std::istream& in, std::span<const std::string_view> required = {});
CsvTable read_csv(const std::string& path, std::span<const std::string_view> required = {});

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

} // namespace silic
