#pragma once

#include <string>
#include <vector>

namespace kinemo {

// Formats a double as decimal text with 17 significant digits, which
// round-trips any finite 64-bit float exactly through strtod.
std::string format_double(double v);

// Strict numeric parse of a whole token; throws ParseError on failure.
double parse_double(const std::string& token, const std::string& where);
long parse_long(const std::string& token, const std::string& where);

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& line, char delim);

// A delimited table: optional '#'-prefixed preamble lines, one header row,
// then data rows. Used for pose files, feature tables and report tables.
struct DelimitedTable {
    std::vector<std::string> preamble;  // without the leading "# "
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 when absent
};

DelimitedTable read_delimited(const std::string& path, char delim = ',');
void write_delimited(const std::string& path, const DelimitedTable& table, char delim = ',');

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace kinemo
