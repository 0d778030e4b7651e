#pragma once

#include "hartree/wavepacket.hpp"

namespace hartree {

/// Velocity-space Coulomb convolution H(v) = Sum_w |gamma(w)|^2 / |v-w| dv^d.
/// The self-cell uses the exact average of 1/|.| over one grid cell (the point
/// value is infinite; omitting it biases H low). Evaluated as a zero-padded
/// FFT convolution, which reproduces the direct sum to round-off.
inline std::vector<double> velocity_coulomb(const GammaSlice& slice) {
    const VelocityGrid& vg = slice.vgrid;
    const int m = vg.m;
    const int S = detail::next_pow2(2 * m - 1);
    const std::size_t Sd = vg.d == 2 ? static_cast<std::size_t>(S) * S
                                     : static_cast<std::size_t>(S) * S * S;
    cvec dens(Sd, cplx(0, 0));
    cvec ker(Sd, cplx(0, 0));
    const double selfavg = cell_average_inv_r(vg.d, vg.dv);
    auto kv = [&](int r1, int r2, int r3) {
        const double q = (static_cast<double>(r1) * r1 + static_cast<double>(r2) * r2 +
                          static_cast<double>(r3) * r3);
        if (q == 0.0) return selfavg;
        return 1.0 / (vg.dv * std::sqrt(q));
    };
    auto kidx = [&](int r) { return r >= 0 ? r : S + r; };
    if (vg.d == 2) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                dens[static_cast<std::size_t>(i) * S + j] =
                    std::norm(slice.values[vravel2(vg, i, j)]);
        for (int r1 = -(m - 1); r1 <= m - 1; ++r1)
            for (int r2 = -(m - 1); r2 <= m - 1; ++r2)
                ker[static_cast<std::size_t>(kidx(r1)) * S + kidx(r2)] = kv(r1, r2, 0);
    } else {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k)
                    dens[(static_cast<std::size_t>(i) * S + j) * S + k] =
                        std::norm(slice.values[vravel3(vg, i, j, k)]);
        for (int r1 = -(m - 1); r1 <= m - 1; ++r1)
            for (int r2 = -(m - 1); r2 <= m - 1; ++r2)
                for (int r3 = -(m - 1); r3 <= m - 1; ++r3)
                    ker[(static_cast<std::size_t>(kidx(r1)) * S + kidx(r2)) * S + kidx(r3)] =
                        kv(r1, r2, r3);
    }
    fftw_plan pf = detail::PlanCache::instance().get(vg.d, S, FFTW_FORWARD);
    fftw_plan pb = detail::PlanCache::instance().get(vg.d, S, FFTW_BACKWARD);
    detail::execute_inplace(pf, dens.data());
    detail::execute_inplace(pf, ker.data());
    for (std::size_t i = 0; i < Sd; ++i) dens[i] *= ker[i];
    detail::execute_inplace(pb, dens.data());
    const double scale = std::pow(vg.dv, vg.d) / static_cast<double>(Sd);
    std::vector<double> H(vg.size());
    if (vg.d == 2) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                H[vravel2(vg, i, j)] =
                    std::max(0.0, dens[static_cast<std::size_t>(i) * S + j].real() * scale);
    } else {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k)
                    H[vravel3(vg, i, j, k)] = std::max(
                        0.0, dens[(static_cast<std::size_t>(i) * S + j) * S + k].real() * scale);
    }
    return H;
}

/// Direct O(M^{2d}) reference for velocity_coulomb; test oracle only.
inline std::vector<double> velocity_coulomb_direct(const GammaSlice& slice) {
    const VelocityGrid& vg = slice.vgrid;
    const int m = vg.m;
    const double selfavg = cell_average_inv_r(vg.d, vg.dv);
    std::vector<double> H(vg.size(), 0.0);
    const double meas = std::pow(vg.dv, vg.d);
    if (vg.d == 2) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double s = 0.0;
                for (int a = 0; a < m; ++a)
                    for (int b = 0; b < m; ++b) {
                        const double w2 = std::norm(slice.values[vravel2(vg, a, b)]);
                        if (a == i && b == j) {
                            s += w2 * selfavg;
                        } else {
                            const double dx = vg.node(i) - vg.node(a);
                            const double dy = vg.node(j) - vg.node(b);
                            s += w2 / std::sqrt(dx * dx + dy * dy);
                        }
                    }
                H[vravel2(vg, i, j)] = s * meas;
            }
    } else {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k) {
                    double s = 0.0;
                    for (int a = 0; a < m; ++a)
                        for (int b = 0; b < m; ++b)
                            for (int c = 0; c < m; ++c) {
                                const double w2 = std::norm(slice.values[vravel3(vg, a, b, c)]);
                                if (a == i && b == j && c == k) {
                                    s += w2 * selfavg;
                                } else {
                                    const double dx = vg.node(i) - vg.node(a);
                                    const double dy = vg.node(j) - vg.node(b);
                                    const double dz = vg.node(k) - vg.node(c);
                                    s += w2 / std::sqrt(dx * dx + dy * dy + dz * dz);
                                }
                            }
                    H[vravel3(vg, i, j, k)] = s * meas;
                }
    }
    return H;
}

/// Accumulated integrating-factor phase
///   Phi_acc(v) = Int_1^t (factor / 2s) H(s, v) ds
/// by the trapezoid rule over diagnostic slices. Non-decreasing at every v
/// since H >= 0. The model-constant `factor` multiplies the verbatim 1/(2s)
/// coefficient (1 = as displayed; 2^d matches the change-of-variables count,
/// see the notes in the README).
struct PhaseAccumulator {
    VelocityGrid vgrid;
    std::vector<double> phi;     // Phi_acc(v)
    std::vector<double> last_H;  // H at last update time
    double last_t = 0.0;
    double factor = 1.0;
    std::string rule = "trapezoid";

    PhaseAccumulator() = default;
    PhaseAccumulator(const VelocityGrid& g, double t0, const std::vector<double>& H0,
                     double factor_)
        : vgrid(g), phi(g.size(), 0.0), last_H(H0), last_t(t0), factor(factor_) {
        if (!(t0 >= 1.0)) throw std::invalid_argument("PhaseAccumulator: start time must be >= 1");
        if (H0.size() != g.size()) throw std::invalid_argument("PhaseAccumulator: H size mismatch");
    }
};

inline void update_phase(PhaseAccumulator& acc, const std::vector<double>& H, double t) {
    if (!(t > acc.last_t))
        throw std::invalid_argument("update_phase: time must increase");
    if (H.size() != acc.phi.size())
        throw std::invalid_argument("update_phase: H size mismatch");
    const double dt = t - acc.last_t;
    for (std::size_t i = 0; i < acc.phi.size(); ++i) {
        const double f0 = acc.last_H[i] / (2.0 * acc.last_t);
        const double f1 = H[i] / (2.0 * t);
        acc.phi[i] += acc.factor * 0.5 * (f0 + f1) * dt;
    }
    acc.last_H = H;
    acc.last_t = t;
}

/// G = e^{-i sign Phi_acc} gamma. |G| = |gamma| exactly (unimodular gauge).
/// sign = +1 removes the phase of the model d gamma/dt = +i (factor/2t) H gamma
/// as displayed; sign = -1 matches the measured rotation direction (see README).
inline GammaSlice gauged_amplitude(const GammaSlice& gamma, const PhaseAccumulator& acc,
                                   int sign = +1) {
    if (!(gamma.vgrid == acc.vgrid))
        throw std::invalid_argument("gauged_amplitude: grid mismatch");
    if (std::abs(gamma.t - acc.last_t) > 1e-9)
        throw std::invalid_argument("gauged_amplitude: time mismatch between slice and accumulator");
    GammaSlice G = gamma;
    for (std::size_t i = 0; i < G.values.size(); ++i) {
        const double th = -sign * acc.phi[i];
        G.values[i] *= cplx(std::cos(th), std::sin(th));
    }
    return G;
}

/// Remainder of the model ODE measured from three consecutive slices:
///   R = (gamma(t+dt) - gamma(t-dt)) / (2 dt) - sign i (factor/2t) H gamma(t).
/// Requires uniform spacing with dt <= 0.1 t.
inline std::vector<double> ode_residual(const GammaSlice& prev, const GammaSlice& mid,
                                        const GammaSlice& next, const std::vector<double>& H,
                                        double factor, int sign) {
    const double d1 = mid.t - prev.t, d2 = next.t - mid.t;
    if (std::abs(d1 - d2) > 1e-9 * std::max(d1, d2))
        throw std::invalid_argument("ode_residual: non-uniform slice spacing");
    if (!(d1 > 0) || d1 > 0.1 * mid.t + 1e-12)
        throw std::invalid_argument("ode_residual: spacing must be positive and <= 0.1 t");
    std::vector<double> out(mid.values.size());
    const double inv2d = 1.0 / (d1 + d2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const cplx dgdt = (next.values[i] - prev.values[i]) * inv2d;
        const cplx model =
            cplx(0, sign * factor * H[i] / (2.0 * mid.t)) * mid.values[i];
        out[i] = std::abs(dgdt - model);
    }
    return out;
}

/// Extracted asymptotic profile with its Cauchy certificate.
struct ScatteringProfile {
    VelocityGrid vgrid;
    cvec values;          // W(v) = G(T, v)
    double T = 0.0;       // extraction time
    double tail = 0.0;    // sup_v |G(T) - G(T/2)|
    double prev_tail = 0.0;  // sup_v |G(T/2) - G(T/4)|
    bool cauchy_ok = false;  // tail decreased between the dyadic checkpoints
    std::vector<double> HW;       // velocity_coulomb of |W|^2
    std::vector<double> phi_anchor;  // Phi_acc(T): converging part of the phase
};

/// Build the profile from gauged slices at T/4, T/2, T. Flags non-Cauchy
/// sequences (tail growing) rather than failing: that signals an
/// under-resolved run, not a code bug.
inline ScatteringProfile extract_profile(const GammaSlice& G_quarter,
                                         const GammaSlice& G_half,
                                         const GammaSlice& G_final,
                                         const std::vector<double>& phi_at_T) {
    if (!(G_quarter.vgrid == G_half.vgrid) || !(G_half.vgrid == G_final.vgrid))
        throw std::invalid_argument("extract_profile: grid mismatch");
    ScatteringProfile p;
    p.vgrid = G_final.vgrid;
    p.values = G_final.values;
    p.T = G_final.t;
    double tail = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < p.values.size(); ++i) {
        tail = std::max(tail, std::abs(G_final.values[i] - G_half.values[i]));
        prev = std::max(prev, std::abs(G_half.values[i] - G_quarter.values[i]));
    }
    p.tail = tail;
    p.prev_tail = prev;
    p.cauchy_ok = tail < prev;
    GammaSlice wslice(p.vgrid, p.T);
    wslice.values = p.values;
    p.HW = velocity_coulomb(wslice);
    p.phi_anchor = phi_at_T;
    return p;
}

/// Multilinear interpolation of a velocity-grid array at v (0 outside).
template <class T>
inline T vgrid_interp(const VelocityGrid& vg, const std::vector<T>& a, const double* v) {
    double f[3] = {0, 0, 0};
    int i0[3] = {0, 0, 0};
    for (int ax = 0; ax < vg.d; ++ax) {
        const double s = (v[ax] + vg.vmax) / vg.dv;
        if (s < 0.0 || s > vg.m - 1) return T{};
        i0[ax] = std::min(vg.m - 2, static_cast<int>(std::floor(s)));
        f[ax] = s - i0[ax];
    }
    if (vg.d == 2) {
        auto at = [&](int a1, int a2) { return a[vravel2(vg, i0[0] + a1, i0[1] + a2)]; };
        return at(0, 0) * ((1 - f[0]) * (1 - f[1])) + at(1, 0) * (f[0] * (1 - f[1])) +
               at(0, 1) * ((1 - f[0]) * f[1]) + at(1, 1) * (f[0] * f[1]);
    }
    auto at = [&](int a1, int a2, int a3) {
        return a[vravel3(vg, i0[0] + a1, i0[1] + a2, i0[2] + a3)];
    };
    T r{};
    for (int a1 = 0; a1 < 2; ++a1)
        for (int a2 = 0; a2 < 2; ++a2)
            for (int a3 = 0; a3 < 2; ++a3) {
                const double w = (a1 ? f[0] : 1 - f[0]) * (a2 ? f[1] : 1 - f[1]) *
                                 (a3 ? f[2] : 1 - f[2]);
                r += at(a1, a2, a3) * w;
            }
    return r;
}

/// Reconstruct the asymptotic form
///   u(t,x) ~ t^{-d/2} e^{i|x|^2/4t} W(x/2t)
///            exp(i sign [phi_anchor + (factor/2) HW(x/2t) ln(t/T)])
///            e^{i gauge_phase_offset}
/// with W interpolated linearly on the velocity grid and set to 0 outside.
/// gauge_phase_offset = Theta(t) - Theta(T) from the c(t) ledger keeps the
/// comparison in the simulation gauge. Optionally warns when more than 1% of
/// the compared field's L2 mass maps outside the velocity grid.
inline ComplexField reconstruct(const ScatteringProfile& prof, double t, const GridSpec& g,
                                double factor, int sign, double gauge_phase_offset,
                                const ComplexField* u_for_mass_check = nullptr,
                                bool* outside_warning = nullptr) {
    if (!(t > 0)) throw std::invalid_argument("reconstruct: t must be positive");
    ComplexField out(g, t, Space::physical);
    std::vector<cplx> W(prof.values.begin(), prof.values.end());
    const double lnratio = std::log(t / prof.T);
    const double tpow = std::pow(t, -0.5 * g.d);
    const int n = g.n;
    double outside_mass = 0.0, total_mass = 0.0;
    double x[3] = {0, 0, 0};
    auto emit = [&](std::size_t q, double xx) {
        double v[3] = {x[0] / (2 * t), x[1] / (2 * t), x[2] / (2 * t)};
        bool inside = true;
        for (int ax = 0; ax < g.d; ++ax)
            if (v[ax] < -prof.vgrid.vmax || v[ax] > prof.vgrid.vmax - prof.vgrid.dv)
                inside = false;
        if (u_for_mass_check) {
            const double mz = std::norm(u_for_mass_check->values[q]);
            total_mass += mz;
            if (!inside) outside_mass += mz;
        }
        if (!inside) {
            out.values[q] = cplx(0, 0);
            return;
        }
        const cplx Wv = vgrid_interp(prof.vgrid, W, v);
        const double HWv = vgrid_interp(prof.vgrid, prof.HW, v);
        const double phiv = vgrid_interp(prof.vgrid, prof.phi_anchor, v);
        const double th = xx / (4 * t) + sign * (phiv + 0.5 * factor * HWv * lnratio) +
                          gauge_phase_offset;
        out.values[q] = tpow * Wv * cplx(std::cos(th), std::sin(th));
    };
    if (g.d == 2) {
        for (int i = 0; i < n; ++i) {
            x[0] = g.coord(i);
            for (int j = 0; j < n; ++j) {
                x[1] = g.coord(j);
                emit(ravel2(g, i, j), x[0] * x[0] + x[1] * x[1]);
            }
        }
    } else {
        for (int i = 0; i < n; ++i) {
            x[0] = g.coord(i);
            for (int j = 0; j < n; ++j) {
                x[1] = g.coord(j);
                for (int k = 0; k < n; ++k) {
                    x[2] = g.coord(k);
                    emit(ravel3(g, i, j, k), x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
                }
            }
        }
    }
    if (outside_warning)
        *outside_warning = (total_mass > 0 && outside_mass > 0.01 * total_mass);
    return out;
}

}  // namespace hartree
