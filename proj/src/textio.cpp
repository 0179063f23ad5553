#include "kinemo/textio.hpp"

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "kinemo/errors.hpp"

namespace kinemo {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& token, const std::string& where) {
    const std::string t = trim(token);
    if (t.empty()) throw ParseError("empty numeric cell at " + where);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE)
        throw ParseError("non-numeric cell '" + t + "' at " + where);
    return v;
}

long parse_long(const std::string& token, const std::string& where) {
    const std::string t = trim(token);
    if (t.empty()) throw ParseError("empty integer cell at " + where);
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size() || errno == ERANGE)
        throw ParseError("non-integer cell '" + t + "' at " + where);
    return v;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == delim) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

int DelimitedTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (trim(header[i]) == name) return static_cast<int>(i);
    return -1;
}

DelimitedTable read_delimited(const std::string& path, char delim) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    DelimitedTable table;
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (line[0] == '#') {
            std::string p = line.substr(1);
            if (!p.empty() && p[0] == ' ') p = p.substr(1);
            table.preamble.push_back(p);
            continue;
        }
        if (!have_header) {
            table.header = split(line, delim);
            for (auto& h : table.header) h = trim(h);
            have_header = true;
            continue;
        }
        auto cells = split(line, delim);
        if (cells.size() != table.header.size())
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(table.header.size()) + " cells, got " +
                             std::to_string(cells.size()));
        table.rows.push_back(std::move(cells));
    }
    if (!have_header) throw EmptyInputError("no header row in " + path);
    return table;
}

void write_delimited(const std::string& path, const DelimitedTable& table, char delim) {
    std::ostringstream out;
    for (const auto& p : table.preamble) out << "# " << p << "\n";
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i) out << delim;
        out << table.header[i];
    }
    out << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << delim;
            out << row[i];
        }
        out << "\n";
    }
    write_text_file(path, out.str());
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << content;
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace kinemo
