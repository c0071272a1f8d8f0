// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "rdlab/error.hpp"

namespace rdlab::cli {

inline constexpr const char* kVersion = "0.1.0";

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 computation failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// %.17g, with NaN spelled "nan" on every platform.
inline std::string fmt(double v) {
    if (v != v) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Time value as used in file names: integers without exponent.
inline std::string fmt_time(double t) {
    char buf[64];
    if (t == static_cast<double>(static_cast<long long>(t)) && t < 1e15)
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(t));
    else
        std::snprintf(buf, sizeof buf, "%.17g", t);
    return buf;
}

/// CSV file with a fixed header; rows are buffered and written on close.
class CsvWriter {
  public:
    CsvWriter(std::filesystem::path path, std::vector<std::string> header)
        : path_(std::move(path)), columns_(header.size()) {
        for (std::size_t i = 0; i < header.size(); ++i) buf_ << (i ? "," : "") << header[i];
        buf_ << "\n";
    }

    /// Each cell is either already text or a number rendered with fmt().
    struct Cell {
        std::string text;
        Cell(double v) : text(fmt(v)) {}
        Cell(std::size_t v) : text(std::to_string(v)) {}
        Cell(int v) : text(std::to_string(v)) {}
        Cell(bool v) : text(v ? "true" : "false") {}
        Cell(const char* s) : text(s) {}
        Cell(std::string s) : text(std::move(s)) {}
    };

    void row(const std::vector<Cell>& cells) {
        if (cells.size() != columns_) throw Error("csv row width mismatch for " + path_.filename().string());
        for (std::size_t i = 0; i < cells.size(); ++i) buf_ << (i ? "," : "") << cells[i].text;
        buf_ << "\n";
        ++rows_;
    }

    std::size_t rows() const { return rows_; }
    const std::filesystem::path& path() const { return path_; }

    /// Writes the file and returns its SHA-256.
    std::string close() {
        const auto data = buf_.str();
        std::ofstream out(path_, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + path_.string() + "'");
        out << data;
        if (!out) throw Error("write failed for '" + path_.string() + "'");
        return sha256_hex(data);
    }

  private:
    std::filesystem::path path_;
    std::size_t columns_;
    std::ostringstream buf_;
    std::size_t rows_ = 0;
};

/// Ordered "key = value" lines.
class Manifest {
  public:
    void set(const std::string& key, const std::string& value) {
        for (auto& [k, v] : entries_) {
            if (k == key) {
                v = value;
                return;
            }
        }
        entries_.emplace_back(key, value);
    }
    std::string get(const std::string& key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return v;
        throw Error("manifest has no key '" + key + "'");
    }
    bool has(const std::string& key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return true;
        return false;
    }
    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    /// Records a finished CSV file: row count and content hash.
    void add_file(CsvWriter& w) {
        const auto hash = w.close();
        const auto name = w.path().filename().string();
        set("file." + name + ".rows", std::to_string(w.rows()));
        set("file." + name + ".sha256", hash);
    }

    std::string text() const {
        std::string out;
        for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
        return out;
    }

    void write(const std::filesystem::path& p) const {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + p.string() + "'");
        out << text();
    }

    static Manifest parse(const std::string& text) {
        Manifest m;
        std::istringstream is(text);
        std::string line;
        std::size_t n = 0;
        while (std::getline(is, line)) {
            ++n;
            if (line.empty()) continue;
            const auto eq = line.find(" = ");
            if (eq == std::string::npos || eq == 0)
                throw Error("manifest line " + std::to_string(n) + " is not 'key = value'");
            m.entries_.emplace_back(line.substr(0, eq), line.substr(eq + 3));
        }
        if (m.entries_.empty()) throw Error("manifest is empty");
        return m;
    }

  private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// Minimal CSV reader for files written by CsvWriter (no quoting).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw Error("csv has no column '" + name + "'");
    }
};

inline CsvTable read_csv(const std::filesystem::path& p) {
    std::istringstream is(read_file(p));
    CsvTable t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(item);
        return out;
    };
    if (!std::getline(is, line)) throw Error("'" + p.string() + "' is empty");
    t.header = split(line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto r = split(line);
        if (r.size() != t.header.size()) throw Error("'" + p.string() + "' has a malformed row");
        t.rows.push_back(std::move(r));
    }
    return t;
}

}  // namespace rdlab::cli
