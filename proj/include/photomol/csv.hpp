#pragma once

// Locale-independent CSV emission and ingestion. Numbers are written with
// std::to_chars: either scientific notation with 17 significant digits (the
// fixed on-disk schema format) or shortest-round-trip (manifests).

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "photomol/errors.hpp"

namespace photomol {

inline std::string format_sci17(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific, 16);
    if (res.ec != std::errc()) throw numerical_error("failed to format a number");
    return std::string(buf, res.ptr);
}

inline std::string format_shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc()) throw numerical_error("failed to format a number");
    return std::string(buf, res.ptr);
}

inline std::string format_int(long long v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& what) {
    const char* b = s.data();
    const char* e = b + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    const char* tail = e;
    while (tail > b && (tail[-1] == ' ' || tail[-1] == '\t')) --tail;
    double v = 0.0;
    auto res = std::from_chars(b, tail, v);
    if (res.ec != std::errc() || res.ptr != tail)
        throw config_error(what + ": cannot parse '" + s + "' as a number");
    return v;
}

inline long long parse_int(const std::string& s, const std::string& what) {
    const char* b = s.data();
    const char* e = b + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    const char* tail = e;
    while (tail > b && (tail[-1] == ' ' || tail[-1] == '\t')) --tail;
    long long v = 0;
    auto res = std::from_chars(b, tail, v);
    if (res.ec != std::errc() || res.ptr != tail)
        throw config_error(what + ": cannot parse '" + s + "' as an integer");
    return v;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : path_(path), out_(path) {
        if (!out_) throw config_error("cannot open '" + path + "' for writing");
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    void close() {
        out_.flush();
        if (!out_) throw config_error("write to '" + path_ + "' failed");
        out_.close();
    }

private:
    std::string path_;
    std::ofstream out_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw config_error("CSV has no column named '" + name + "'");
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open '" + path + "' for reading");
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.push_back("");
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

}  // namespace photomol
