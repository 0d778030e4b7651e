#pragma once

#include "hartree/field.hpp"

namespace hartree {

/// Uniform velocity grid v_i = -vmax + i * dv, i = 0..m-1, dv = 2 vmax / m,
/// used for gamma slices and velocity-space convolutions.
struct VelocityGrid {
    int d = 2;
    int m = 0;
    double vmax = 0.0;
    double dv = 0.0;

    VelocityGrid() = default;
    VelocityGrid(int d_, int m_, double vmax_)
        : d(d_), m(m_), vmax(vmax_), dv(2.0 * vmax_ / m_) {
        if (d_ != 2 && d_ != 3) throw std::invalid_argument("VelocityGrid: d must be 2 or 3");
        if (m_ < 2) throw std::invalid_argument("VelocityGrid: m must be >= 2");
        if (!(vmax_ > 0)) throw std::invalid_argument("VelocityGrid: vmax must be positive");
    }

    double node(int i) const { return -vmax + dv * i; }
    std::size_t size() const {
        std::size_t s = 1;
        for (int i = 0; i < d; ++i) s *= static_cast<std::size_t>(m);
        return s;
    }
    bool operator==(const VelocityGrid& o) const {
        return d == o.d && m == o.m && vmax == o.vmax;
    }
};

inline std::size_t vravel2(const VelocityGrid& g, int i, int j) {
    return static_cast<std::size_t>(i) * g.m + j;
}
inline std::size_t vravel3(const VelocityGrid& g, int i, int j, int k) {
    return (static_cast<std::size_t>(i) * g.m + j) * g.m + k;
}

/// gamma(t, .) sampled on the velocity grid, with optional companions:
/// the velocity-Coulomb convolution H and the resampled ray values u(t, 2tv).
struct GammaSlice {
    VelocityGrid vgrid;
    double t = 0.0;
    cvec values;             // gamma(t, v)
    std::vector<double> H;   // (|.|^{-1} *_v |gamma|^2)(v); empty until computed
    cvec ray_values;         // u(t, 2tv) e^{-i t |v|^2}; empty unless produced by the batch path

    GammaSlice() = default;
    GammaSlice(const VelocityGrid& g, double time)
        : vgrid(g), t(time), values(g.size(), cplx(0, 0)) {}

    double sup_abs() const {
        double m = 0.0;
        for (const auto& z : values) m = std::max(m, std::abs(z));
        return m;
    }

    /// L2 norm over the velocity grid with measure dv^d.
    double l2() const {
        double s = 0.0;
        for (const auto& z : values) s += std::norm(z);
        return std::sqrt(s * std::pow(vgrid.dv, vgrid.d));
    }
};

}  // namespace hartree
