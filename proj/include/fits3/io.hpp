#pragma once

// CSV matrices (one row per line) and vectors (one value per line), written
// with 17 significant digits so values round-trip exactly. All writes go to
// a temporary file that is renamed into place.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace fits3 {

/// I/O failure, carrying the offending path in its message.
class IoError : public std::runtime_error {
public:
    IoError(const std::filesystem::path& path, const std::string& what)
        : std::runtime_error(path.string() + ": " + what), path_(path) {}
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

namespace io {

inline std::string format_double(double v) {
    char buf[64];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(n));
}

inline double parse_double(std::string_view s, const std::filesystem::path& path, std::size_t line) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw IoError(path, "line " + std::to_string(line) + ": cannot parse number '" +
                                std::string(s) + "'");
    return v;
}

/// Writes via `fill` into path.tmp, then renames over `path`.
inline void write_atomic(const std::filesystem::path& path,
                         const std::function<void(std::ostream&)>& fill) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(path, "cannot open for writing");
        fill(out);
        out.flush();
        if (!out) throw IoError(path, "write failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError(path, "rename failed: " + ec.message());
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

inline void write_vector(const std::filesystem::path& path, std::span<const double> v) {
    write_atomic(path, [&](std::ostream& out) {
        for (double e : v) out << format_double(e) << '\n';
    });
}

inline Vector read_vector(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    Vector v;
    v.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) v.push_back(parse_double(lines[i], path, i + 1));
    return v;
}

inline void write_matrix(const std::filesystem::path& path, const DenseMatrix& A) {
    write_atomic(path, [&](std::ostream& out) {
        std::string line;
        for (std::size_t i = 0; i < A.rows(); ++i) {
            line.clear();
            const auto r = A.row(i);
            for (std::size_t j = 0; j < r.size(); ++j) {
                if (j) line += ',';
                line += format_double(r[j]);
            }
            line += '\n';
            out << line;
        }
    });
}

inline DenseMatrix read_matrix(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw IoError(path, "empty matrix file");
    std::vector<double> data;
    std::size_t cols = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view s = lines[i];
        std::size_t count = 0;
        while (true) {
            const auto comma = s.find(',');
            data.push_back(parse_double(s.substr(0, comma), path, i + 1));
            ++count;
            if (comma == std::string_view::npos) break;
            s.remove_prefix(comma + 1);
        }
        if (i == 0)
            cols = count;
        else if (count != cols)
            throw IoError(path, "line " + std::to_string(i + 1) + ": expected " +
                                    std::to_string(cols) + " columns, found " + std::to_string(count));
    }
    return DenseMatrix(lines.size(), cols, std::move(data));
}

} // namespace io
} // namespace fits3
