#include "uwqa/csv.hpp"

#include "uwqa/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace uwqa::csv {

std::size_t Table::column(std::string_view name) const
{
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw Error(ErrorKind::Schema, "missing CSV column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
}

std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v == 0.0 ? 0.0 : v);
    return buf;
}

double parse_number(std::string_view text, std::size_t row, std::string_view column)
{
    double v = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw Error(ErrorKind::Schema, "row " + std::to_string(row + 1) + ", column '" + std::string(column) +
                                           "': not a number: '" + std::string(text) + "'");
    return v;
}

namespace {

std::string quote(const std::string& field)
{
    if (field.find_first_of(",\"\n\r") == std::string::npos)
        return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void append_row(std::string& out, const std::vector<std::string>& fields)
{
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0)
            out += ',';
        out += quote(fields[i]);
    }
    out += '\n';
}

} // namespace

std::string write(const Table& table)
{
    std::string out;
    append_row(out, table.header);
    for (const auto& row : table.rows)
        append_row(out, row);
    return out;
}

Table parse(std::string_view text)
{
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
        case '"':
            in_quotes = true;
            field_started = true;
            break;
        case ',':
            record.push_back(std::move(field));
            field.clear();
            field_started = true;
            break;
        case '\r':
            break;
        case '\n':
            if (field_started || !field.empty() || !record.empty()) {
                record.push_back(std::move(field));
                records.push_back(std::move(record));
            }
            field.clear();
            record.clear();
            field_started = false;
            break;
        default:
            field += c;
            field_started = true;
        }
    }
    if (in_quotes)
        throw Error(ErrorKind::Schema, "unterminated quoted CSV field");
    if (field_started || !field.empty() || !record.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
    }
    if (records.empty())
        throw Error(ErrorKind::Schema, "CSV has no header");

    Table table;
    table.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.header.size())
            throw Error(ErrorKind::Schema, "row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                                               " fields, header has " + std::to_string(table.header.size()));
        table.rows.push_back(std::move(records[r]));
    }
    return table;
}

} // namespace uwqa::csv
