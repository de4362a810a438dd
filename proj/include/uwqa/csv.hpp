#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace uwqa::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Throws Error{Schema} when the column is missing.
    std::size_t column(std::string_view name) const;
};

// Six significant digits, shortest form ("%.6g").
std::string format_number(double v);
// Throws Error{Schema} naming the row and column on malformed numbers.
double parse_number(std::string_view text, std::size_t row, std::string_view column);

std::string write(const Table& table);
// RFC 4180 subset: quoted fields, doubled quotes, LF or CRLF line ends.
Table parse(std::string_view text);

} // namespace uwqa::csv
