#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "rcakit/errors.hpp"

namespace rcakit::csv {

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

// Streams a headered CSV file.  `on_row` receives the 1-based line number and
// the fields; a false return stops iteration.  The header must equal
// `expected_header` (comma-joined) when non-empty.
inline void for_each_row(const std::filesystem::path& path, const std::string& expected_header,
                         const std::function<bool(long, const std::vector<std::string>&)>& on_row) {
    std::ifstream in(path);
    if (!in) throw MissingFile("cannot open " + path.string());
    std::string line;
    long lineno = 0;
    if (!std::getline(in, line)) throw SchemaViolation(path.string() + ": empty file, missing header");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!expected_header.empty() && line != expected_header)
        throw SchemaViolation(path.string() + ": bad header '" + line + "', expected '" +
                              expected_header + "'");
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!on_row(lineno, split_line(line))) break;
    }
}

}  // namespace rcakit::csv
