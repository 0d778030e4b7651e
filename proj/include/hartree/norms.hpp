#pragma once

#include <algorithm>

#include "hartree/propagator.hpp"

namespace hartree {

/// Grid L^p norm (h^d Sum |u|^p)^{1/p}; p = infinity gives max |u|.
inline double lp_norm(const ComplexField& u, double p) {
    require_space(u, Space::physical, "lp_norm");
    if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
    if (std::isinf(p)) return max_abs(u);
    double s = 0.0;
    for (const auto& z : u.values) s += std::pow(std::abs(z), p);
    return std::pow(s * std::pow(u.grid.h, u.grid.d), 1.0 / p);
}

/// Discrete Lorentz norm by decreasing rearrangement over cells of measure
/// h^d, using the exact layer-cake sum
///   ||u||_{p,q}^q = (p/q) Sum_j a_j^q [ (j mu)^{q/p} - ((j-1) mu)^{q/p} ],
/// which reproduces L^{p,p} = L^p identically on grid functions.
inline double lorentz_norm(const ComplexField& u, double p, double q) {
    require_space(u, Space::physical, "lorentz_norm");
    if (!(p > 1.0) || std::isinf(p))
        throw std::invalid_argument("lorentz_norm: p must lie in (1, infinity)");
    if (q < 1.0) throw std::invalid_argument("lorentz_norm: q must be >= 1");
    std::vector<double> a(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) a[i] = std::abs(u.values[i]);
    std::sort(a.begin(), a.end(), std::greater<double>());
    const double mu = std::pow(u.grid.h, u.grid.d);
    if (std::isinf(q)) {
        double best = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (a[j] == 0.0) break;
            best = std::max(best, std::pow((j + 1) * mu, 1.0 / p) * a[j]);
        }
        return best;
    }
    double s = 0.0;
    double prev = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (a[j] == 0.0) break;
        const double cur = std::pow((j + 1) * mu, q / p);
        s += std::pow(a[j], q) * (cur - prev);
        prev = cur;
    }
    return std::pow(s * p / q, 1.0 / q);
}

/// Multiply by the radial weight |x|^beta in physical space.
inline ComplexField radial_weight(const ComplexField& u, double beta) {
    require_space(u, Space::physical, "radial_weight");
    const GridSpec& g = u.grid;
    ComplexField out = u;
    const int n = g.n;
    std::vector<double> x2(n);
    for (int j = 0; j < n; ++j) x2[j] = g.coord(j) * g.coord(j);
    if (g.d == 2) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                out.values[ravel2(g, i, j)] *= std::pow(x2[i] + x2[j], 0.5 * beta);
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double a = x2[i] + x2[j];
                cplx* row = &out.values[ravel3(g, i, j, 0)];
                for (int k = 0; k < n; ++k) row[k] *= std::pow(a + x2[k], 0.5 * beta);
            }
    }
    return out;
}

/// Weighted Sobolev norm of the back-propagated solution:
///   ||e^{-it Lap} u||_{H^{0,beta}} = ||u||_2 + || |x|^beta e^{-it Lap} u ||_2.
/// At t = 0 no propagation is involved. Optionally reports when the
/// back-propagated field leaks into the outer 5% shell.
inline double weighted_sobolev_norm(const ComplexField& u, double t, double beta,
                                    bool* boundary_warning = nullptr) {
    require_space(u, Space::physical, "weighted_sobolev_norm");
    if (t < 0) throw std::invalid_argument("weighted_sobolev_norm: t must be >= 0");
    ComplexField back = (t == 0.0) ? u : free_propagate(u, -t);
    if (boundary_warning)
        *boundary_warning = boundary_shell_mass_fraction(back) > 1e-6;
    return l2_norm(u) + l2_norm(radial_weight(back, beta));
}

/// Ratio rho = ||u||_{L^{2d/(d-1),2}} / (||u||_2^{(d-1)/d} ||u||_inf^{1/d}).
/// Scaling invariant; the suite asserts a single uniform bound across runs.
inline double interpolation_ratio(const ComplexField& u) {
    const int d = u.grid.d;
    const double l2 = lp_norm(u, 2.0);
    const double li = max_abs(u);
    if (l2 == 0.0 || li == 0.0)
        throw std::invalid_argument("interpolation_ratio: zero field");
    const double lor = lorentz_norm(u, 2.0 * d / (d - 1.0), 2.0);
    return lor / (std::pow(l2, (d - 1.0) / d) * std::pow(li, 1.0 / d));
}

/// One time-stamped record of the tracked norms.
struct NormReport {
    double t = 0.0;
    double l2 = 0.0;
    double linf = 0.0;
    double lorentz = 0.0;       // L^{2d/(d-1),2}
    double h0beta = 0.0;        // ||e^{-it Lap} u||_{H^{0,beta}}
    double jbeta = 0.0;         // || |J|^beta u ||_2
    double interp_ratio = 0.0;  // rho
    double boundary_mass = 0.0;
    double gauge_c = 0.0;
};

}  // namespace hartree
