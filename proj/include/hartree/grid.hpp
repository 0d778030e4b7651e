#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hartree {

/// Periodic spatial grid on [-L/2, L/2)^d with its dual frequency lattice
/// xi_k = 2*pi*k/L, k in [-N/2, N/2) per axis.
struct GridSpec {
    int d = 2;          // spatial dimension, 2 or 3
    int n = 0;          // points per axis, power of two
    double length = 0;  // box length per axis
    double h = 0;       // spacing, h*n == length

    std::size_t size() const {
        std::size_t s = 1;
        for (int i = 0; i < d; ++i) s *= static_cast<std::size_t>(n);
        return s;
    }

    /// coordinate of node j on one axis, x_j = -L/2 + j*h
    double coord(int j) const { return -0.5 * length + h * j; }

    /// signed integer frequency index for storage index k in [0, n)
    int freq_index(int k) const { return k < n / 2 ? k : k - n; }

    /// frequency xi = 2*pi*ktilde/L for storage index k
    double freq(int k) const {
        return 2.0 * 3.14159265358979323846 * freq_index(k) / length;
    }

    std::vector<double> coords() const {
        std::vector<double> x(n);
        for (int j = 0; j < n; ++j) x[j] = coord(j);
        return x;
    }

    std::vector<double> freqs() const {
        std::vector<double> xi(n);
        for (int k = 0; k < n; ++k) xi[k] = freq(k);
        return xi;
    }

    bool operator==(const GridSpec& o) const {
        return d == o.d && n == o.n && length == o.length;
    }
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Build a grid. Rejects d outside {2,3}, non-power-of-two or too-small N,
/// and non-positive box lengths.
inline GridSpec make_grid(int d, int n, double length) {
    if (d != 2 && d != 3)
        throw std::invalid_argument("make_grid: dimension must be 2 or 3, got " + std::to_string(d));
    if (n < 8 || !is_power_of_two(n))
        throw std::invalid_argument("make_grid: N must be a power of two >= 8, got " + std::to_string(n));
    if (!(length > 0))
        throw std::invalid_argument("make_grid: box length must be positive");
    GridSpec g;
    g.d = d;
    g.n = n;
    g.length = length;
    g.h = length / n;
    return g;
}

/// Decompose a row-major linear index into per-axis indices.
inline std::array<int, 3> unravel(const GridSpec& g, std::size_t idx) {
    std::array<int, 3> out{0, 0, 0};
    for (int ax = g.d - 1; ax >= 0; --ax) {
        out[ax] = static_cast<int>(idx % g.n);
        idx /= g.n;
    }
    return out;
}

inline std::size_t ravel2(const GridSpec& g, int i, int j) {
    return static_cast<std::size_t>(i) * g.n + j;
}

inline std::size_t ravel3(const GridSpec& g, int i, int j, int k) {
    return (static_cast<std::size_t>(i) * g.n + j) * g.n + k;
}

}  // namespace hartree
