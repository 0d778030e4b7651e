#pragma once

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "hartree/config.hpp"
#include "hartree/velocity_grid.hpp"

namespace hartree {

// Binary layouts are documented byte-exactly in docs/formats.md. All integers
// and floats are written in native little-endian order; the endianness marker
// lets a reader detect a foreign byte order.

namespace detail {

template <class T>
void put(std::ostream& o, const T& v) {
    o.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& i) {
    T v{};
    i.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!i) throw std::runtime_error("binary read: truncated file");
    return v;
}

inline void put_magic(std::ostream& o, const char* magic8) {
    o.write(magic8, 8);
}

inline void check_magic(std::istream& i, const char* magic8, const char* what) {
    char buf[8];
    i.read(buf, 8);
    if (!i || std::memcmp(buf, magic8, 8) != 0)
        throw std::runtime_error(std::string("bad magic for ") + what);
}

inline constexpr std::uint32_t kEndianMark = 0x01020304u;

}  // namespace detail

inline void write_field(const std::string& path, const ComplexField& f) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw std::runtime_error("cannot open for write: " + path);
    detail::put_magic(o, "HWPSNAP\x01");
    detail::put<std::uint32_t>(o, 1);  // version
    detail::put<std::uint32_t>(o, detail::kEndianMark);
    detail::put<std::uint32_t>(o, static_cast<std::uint32_t>(f.grid.d));
    detail::put<std::uint32_t>(o, static_cast<std::uint32_t>(f.grid.n));
    detail::put<double>(o, f.grid.length);
    detail::put<double>(o, f.time);
    detail::put<std::uint32_t>(o, f.space == Space::physical ? 0u : 1u);
    for (const auto& z : f.values) {
        detail::put<double>(o, z.real());
        detail::put<double>(o, z.imag());
    }
    if (!o) throw std::runtime_error("write failed: " + path);
}

inline ComplexField read_field(const std::string& path) {
    std::ifstream i(path, std::ios::binary);
    if (!i) throw std::runtime_error("cannot open for read: " + path);
    detail::check_magic(i, "HWPSNAP\x01", "snapshot");
    const auto version = detail::get<std::uint32_t>(i);
    if (version != 1) throw std::runtime_error("unsupported snapshot version");
    if (detail::get<std::uint32_t>(i) != detail::kEndianMark)
        throw std::runtime_error("snapshot byte order mismatch");
    const int d = static_cast<int>(detail::get<std::uint32_t>(i));
    const int n = static_cast<int>(detail::get<std::uint32_t>(i));
    const double L = detail::get<double>(i);
    const double t = detail::get<double>(i);
    const auto space = detail::get<std::uint32_t>(i);
    ComplexField f(make_grid(d, n, L), t, space == 0 ? Space::physical : Space::spectral);
    for (auto& z : f.values) {
        const double re = detail::get<double>(i);
        const double im = detail::get<double>(i);
        z = cplx(re, im);
    }
    return f;
}

inline void write_slice(const std::string& path, const GammaSlice& s) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw std::runtime_error("cannot open for write: " + path);
    detail::put_magic(o, "HWPGAMA\x01");
    detail::put<std::uint32_t>(o, 1);
    detail::put<std::uint32_t>(o, detail::kEndianMark);
    detail::put<std::uint32_t>(o, static_cast<std::uint32_t>(s.vgrid.d));
    detail::put<std::uint32_t>(o, static_cast<std::uint32_t>(s.vgrid.m));
    detail::put<double>(o, s.vgrid.vmax);
    detail::put<double>(o, s.t);
    detail::put<std::uint32_t>(o, s.H.empty() ? 0u : 1u);
    for (const auto& z : s.values) {
        detail::put<double>(o, z.real());
        detail::put<double>(o, z.imag());
    }
    for (double h : s.H) detail::put<double>(o, h);
    if (!o) throw std::runtime_error("write failed: " + path);
}

inline GammaSlice read_slice(const std::string& path) {
    std::ifstream i(path, std::ios::binary);
    if (!i) throw std::runtime_error("cannot open for read: " + path);
    detail::check_magic(i, "HWPGAMA\x01", "gamma slice");
    if (detail::get<std::uint32_t>(i) != 1) throw std::runtime_error("unsupported slice version");
    if (detail::get<std::uint32_t>(i) != detail::kEndianMark)
        throw std::runtime_error("slice byte order mismatch");
    const int d = static_cast<int>(detail::get<std::uint32_t>(i));
    const int m = static_cast<int>(detail::get<std::uint32_t>(i));
    const double vmax = detail::get<double>(i);
    const double t = detail::get<double>(i);
    const auto has_h = detail::get<std::uint32_t>(i);
    GammaSlice s(VelocityGrid(d, m, vmax), t);
    for (auto& z : s.values) {
        const double re = detail::get<double>(i);
        const double im = detail::get<double>(i);
        z = cplx(re, im);
    }
    if (has_h) {
        s.H.resize(s.vgrid.size());
        for (auto& h : s.H) h = detail::get<double>(i);
    }
    return s;
}

struct ProfileFile {
    VelocityGrid vgrid;
    cvec values;
    double T = 0.0;
    double tail = 0.0;
    double prev_tail = 0.0;
    std::uint32_t cauchy_ok = 0;
};

inline void write_profile(const std::string& path, const ProfileFile& p) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw std::runtime_error("cannot open for write: " + path);
    detail::put_magic(o, "HWPPROF\x01");
    detail::put<std::uint32_t>(o, 1);
    detail::put<std::uint32_t>(o, detail::kEndianMark);
    detail::put<std::uint32_t>(o, static_cast<std::uint32_t>(p.vgrid.d));
    detail::put<std::uint32_t>(o, static_cast<std::uint32_t>(p.vgrid.m));
    detail::put<double>(o, p.vgrid.vmax);
    detail::put<double>(o, p.T);
    detail::put<double>(o, p.tail);
    detail::put<double>(o, p.prev_tail);
    detail::put<std::uint32_t>(o, p.cauchy_ok);
    for (const auto& z : p.values) {
        detail::put<double>(o, z.real());
        detail::put<double>(o, z.imag());
    }
    if (!o) throw std::runtime_error("write failed: " + path);
}

inline ProfileFile read_profile(const std::string& path) {
    std::ifstream i(path, std::ios::binary);
    if (!i) throw std::runtime_error("cannot open for read: " + path);
    detail::check_magic(i, "HWPPROF\x01", "profile");
    if (detail::get<std::uint32_t>(i) != 1) throw std::runtime_error("unsupported profile version");
    if (detail::get<std::uint32_t>(i) != detail::kEndianMark)
        throw std::runtime_error("profile byte order mismatch");
    ProfileFile p;
    const int d = static_cast<int>(detail::get<std::uint32_t>(i));
    const int m = static_cast<int>(detail::get<std::uint32_t>(i));
    const double vmax = detail::get<double>(i);
    p.vgrid = VelocityGrid(d, m, vmax);
    p.T = detail::get<double>(i);
    p.tail = detail::get<double>(i);
    p.prev_tail = detail::get<double>(i);
    p.cauchy_ok = detail::get<std::uint32_t>(i);
    p.values.resize(p.vgrid.size());
    for (auto& z : p.values) {
        const double re = detail::get<double>(i);
        const double im = detail::get<double>(i);
        z = cplx(re, im);
    }
    return p;
}

// ---------------------------------------------------------------------------
// CSV with exact round-trip: doubles printed with %.17g re-parse to the same
// bits and re-emit to the same bytes.

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_csv(const std::string& path, const CsvTable& t) {
    std::ofstream o(path);
    if (!o) throw std::runtime_error("cannot open for write: " + path);
    for (std::size_t c = 0; c < t.columns.size(); ++c)
        o << (c ? "," : "") << t.columns[c];
    o << "\n";
    for (const auto& row : t.rows) {
        if (row.size() != t.columns.size())
            throw std::runtime_error("csv row width mismatch");
        for (std::size_t c = 0; c < row.size(); ++c)
            o << (c ? "," : "") << format_double(row[c]);
        o << "\n";
    }
    if (!o) throw std::runtime_error("write failed: " + path);
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream i(path);
    if (!i) throw std::runtime_error("cannot open for read: " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(i, line)) throw std::runtime_error("empty csv: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.columns.push_back(cell);
    while (std::getline(i, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream rs(line);
        std::vector<double> row;
        while (std::getline(rs, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        if (row.size() != t.columns.size())
            throw std::runtime_error("csv row width mismatch in " + path);
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline int csv_column(const CsvTable& t, const std::string& name) {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        if (t.columns[i] == name) return static_cast<int>(i);
    throw std::runtime_error("csv column not found: " + name);
}

// ---------------------------------------------------------------------------
// Flat key = value manifest (ordered).

using Manifest = std::vector<std::pair<std::string, std::string>>;

inline void write_manifest(const std::string& path, const Manifest& m) {
    std::ofstream o(path);
    if (!o) throw std::runtime_error("cannot open for write: " + path);
    for (const auto& [k, v] : m) o << k << " = " << v << "\n";
    if (!o) throw std::runtime_error("write failed: " + path);
}

inline Manifest read_manifest(const std::string& path) {
    std::ifstream i(path);
    if (!i) throw std::runtime_error("cannot open for read: " + path);
    Manifest m;
    std::string line;
    while (std::getline(i, line)) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        m.emplace_back(line.substr(0, eq), line.substr(eq + 3));
    }
    return m;
}

inline std::string manifest_get(const Manifest& m, const std::string& key) {
    for (const auto& [k, v] : m)
        if (k == key) return v;
    throw std::runtime_error("manifest key not found: " + key);
}

}  // namespace hartree
