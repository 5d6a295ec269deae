#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "armspace/errors.hpp"
#include "armspace/types.hpp"

namespace armspace {

/// Formats a double with 17 significant digits, enough to round-trip any
/// 64-bit value. Infinities come out as "inf"/"-inf" (the no-solution
/// sentinel in label files).
inline void append_number(std::string& out, double value) {
    char buf[40];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", value);
    out.append(buf, static_cast<std::size_t>(len));
}

inline void write_csv(const Matrix& m, std::ostream& os) {
    std::string line;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        line.clear();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c > 0) line.push_back(',');
            append_number(line, m(r, c));
        }
        line.push_back('\n');
        os.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
}

inline void write_csv(const Matrix& m, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    write_csv(m, os);
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

/// Plain headerless CSV of decimal doubles. Every row must have the same
/// column count as the first; otherwise MalformedRow with the row index.
inline Matrix read_csv(std::istream& is) {
    std::vector<double> values;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && is.peek() == EOF) break;
        std::size_t row_cols = 0;
        const char* p = line.c_str();
        while (true) {
            char* end = nullptr;
            const double v = std::strtod(p, &end);
            if (end == p) throw MalformedRow("unparseable number", rows);
            values.push_back(v);
            ++row_cols;
            p = end;
            while (*p == ' ') ++p;
            if (*p == ',') {
                ++p;
                continue;
            }
            if (*p == '\0') break;
            throw MalformedRow("trailing characters", rows);
        }
        if (rows == 0) {
            cols = row_cols;
        } else if (row_cols != cols) {
            throw MalformedRow("expected " + std::to_string(cols) + " columns, found " +
                                   std::to_string(row_cols),
                               rows);
        }
        ++rows;
    }
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    if (!values.empty()) std::memcpy(m.data(), values.data(), values.size() * sizeof(double));
    return m;
}

inline Matrix read_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    return read_csv(is);
}

}  // namespace armspace
