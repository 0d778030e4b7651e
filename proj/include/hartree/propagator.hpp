#pragma once

#include <chrono>
#include <functional>

#include "hartree/czt.hpp"
#include "hartree/multipliers.hpp"

namespace hartree {

/// Quadratic chirp e^{i s |x|^2} sampled on the grid (physical space).
inline void chirp_multiply(ComplexField& u, double s) {
    const GridSpec& g = u.grid;
    const int n = g.n;
    std::vector<double> x2(n);
    for (int j = 0; j < n; ++j) x2[j] = g.coord(j) * g.coord(j);
    if (g.d == 2) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double th = s * (x2[i] + x2[j]);
                u.values[ravel2(g, i, j)] *= cplx(std::cos(th), std::sin(th));
            }
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double a = x2[i] + x2[j];
                cplx* row = &u.values[ravel3(g, i, j, 0)];
                for (int k = 0; k < n; ++k) {
                    const double th = s * (a + x2[k]);
                    row[k] *= cplx(std::cos(th), std::sin(th));
                }
            }
    }
}

/// Exact free Schrodinger flow e^{i dt Laplacian}: spectral multiplier
/// e^{-i |xi|^2 dt}. Unitary; advances the time tag by dt. Negative dt allowed.
inline ComplexField free_propagate(const ComplexField& u, double dt) {
    const GridSpec& g = u.grid;
    const bool was_physical = (u.space == Space::physical);
    ComplexField spec = was_physical ? forward_transform(u) : u;
    const int n = g.n;
    auto xi1 = g.freqs();
    cvec ph(n);
    for (int k = 0; k < n; ++k) {
        const double th = -xi1[k] * xi1[k] * dt;
        ph[k] = cplx(std::cos(th), std::sin(th));
    }
    if (g.d == 2) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) spec.values[ravel2(g, i, j)] *= ph[i] * ph[j];
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const cplx pij = ph[i] * ph[j];
                cplx* row = &spec.values[ravel3(g, i, j, 0)];
                for (int k = 0; k < n; ++k) row[k] *= pij * ph[k];
            }
    }
    ComplexField out = was_physical ? inverse_transform(spec) : spec;
    out.time = u.time + dt;
    return out;
}

/// One Strang step for i u_t + Lap u = coupling * (|x|^{-1} * |u|^2) u:
/// half nonlinear phase, exact free step, half nonlinear phase re-evaluated.
/// The nonlinear sub-flow is exact because the potential depends only on |u|.
inline ComplexField strang_step(const ComplexField& u, double tau,
                                double coupling = 1.0,
                                bool* aliasing_warning = nullptr) {
    require_space(u, Space::physical, "strang_step");
    ComplexField v = u;
    bool warn = false;
    auto half_phase = [&](ComplexField& f) {
        HartreeResult hr = hartree_potential(f);
        warn = warn || hr.aliasing_warning;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double th = -0.5 * tau * coupling * hr.potential.values[i].real();
            f.values[i] *= cplx(std::cos(th), std::sin(th));
        }
    };
    if (coupling != 0.0) half_phase(v);
    v = free_propagate(v, tau);
    if (coupling != 0.0) half_phase(v);
    if (aliasing_warning) *aliasing_warning = warn;
    require_finite(v, "strang_step");
    return v;
}

struct EvolveConfig {
    double t_end = 1.0;
    double tau = 0.01;
    int snapshot_every = 1;     // in steps
    int diagnostic_every = 1;   // in steps
    double coupling = 1.0;      // 0 disables the nonlinearity
    double boundary_tol = 1e-6; // abort when outer-5% shell mass exceeds this
    double mass_tol = 1e-8;     // abort on relative mass drift beyond this
};

struct StepStats {
    long step = 0;
    double t = 0.0;
    double mass_rel_drift = 0.0;
    double boundary_mass_fraction = 0.0;
    double gauge_c = 0.0;           // zero-mode gauge ledger c(t)
    bool aliasing_warning = false;
    double wall_ms = 0.0;           // wall-clock per step, excluded from determinism
};

inline double boundary_shell_mass_fraction(const ComplexField& u) {
    const GridSpec& g = u.grid;
    const double lim = 0.95 * 0.5 * g.length;
    double shell = 0.0, total = 0.0;
    const int n = g.n;
    if (g.d == 2) {
        for (int i = 0; i < n; ++i) {
            const bool bi = std::abs(g.coord(i)) > lim;
            for (int j = 0; j < n; ++j) {
                const double m = std::norm(u.values[ravel2(g, i, j)]);
                total += m;
                if (bi || std::abs(g.coord(j)) > lim) shell += m;
            }
        }
    } else {
        for (int i = 0; i < n; ++i) {
            const bool bi = std::abs(g.coord(i)) > lim;
            for (int j = 0; j < n; ++j) {
                const bool bj = bi || std::abs(g.coord(j)) > lim;
                for (int k = 0; k < n; ++k) {
                    const double m = std::norm(u.values[ravel3(g, i, j, k)]);
                    total += m;
                    if (bj || std::abs(g.coord(k)) > lim) shell += m;
                }
            }
        }
    }
    return total > 0 ? shell / total : 0.0;
}

/// Time evolution by fused potential-first Strang splitting. Snapshots and
/// diagnostics fire at their configured step cadences with the true
/// (unfused) state. Aborts on boundary-mass breach, NaN, or mass drift.
///
/// on_state is called with the field at every snapshot/diagnostic boundary
/// (flags tell which); it must treat the field as read-only.
inline void evolve(
    const ComplexField& datum, const EvolveConfig& cfg,
    const std::function<void(const ComplexField&, const StepStats&, bool is_snapshot,
                             bool is_diagnostic)>& on_state) {
    require_space(datum, Space::physical, "evolve");
    require_finite(datum, "evolve datum");
    if (!(cfg.t_end > datum.time)) throw std::invalid_argument("evolve: t_end must exceed datum time");
    if (!(cfg.tau > 0)) throw std::invalid_argument("evolve: tau must be positive");
    if (cfg.snapshot_every < 1 || cfg.diagnostic_every < 1)
        throw std::invalid_argument("evolve: cadences must be >= 1");
    const double t0 = datum.time;
    const double span = cfg.t_end - t0;
    const double steps_frac = span / cfg.tau;
    const long nsteps = std::lround(steps_frac);
    if (std::abs(steps_frac - static_cast<double>(nsteps)) > 0.5 + 1e-12)
        throw std::invalid_argument("evolve: (T - t0)/tau must be within 0.5 of an integer");
    const double partial = span - nsteps * cfg.tau;

    const double mass0 = l2_norm(datum);
    ComplexField u = datum;
    double latest_gauge = 0.0;
    bool latest_alias = false;

    auto apply_phase = [&](ComplexField& f, double dt_half) {
        HartreeResult hr = hartree_potential(f);
        latest_gauge = hr.gauge_c;
        latest_alias = hr.aliasing_warning;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double th = -dt_half * cfg.coupling * hr.potential.values[i].real();
            f.values[i] *= cplx(std::cos(th), std::sin(th));
        }
        return hr;
    };
    // emit the initial state if cadence aligns (step 0)
    auto emit = [&](long k, double wall_ms) {
        const bool snap = (k % cfg.snapshot_every == 0);
        const bool diag = (k % cfg.diagnostic_every == 0);
        if (!snap && !diag) return;
        StepStats st;
        st.step = k;
        st.t = u.time;
        st.mass_rel_drift = mass0 > 0 ? std::abs(l2_norm(u) - mass0) / mass0 : 0.0;
        st.boundary_mass_fraction = boundary_shell_mass_fraction(u);
        st.gauge_c = latest_gauge;
        st.aliasing_warning = latest_alias;
        st.wall_ms = wall_ms;
        if (!all_finite(u)) throw std::runtime_error("evolve: NaN detected");
        if (st.mass_rel_drift > cfg.mass_tol)
            throw std::runtime_error("evolve: mass drift " + std::to_string(st.mass_rel_drift) +
                                     " exceeds tolerance");
        if (st.boundary_mass_fraction > cfg.boundary_tol)
            throw std::runtime_error(
                "evolve: boundary shell mass fraction " +
                std::to_string(st.boundary_mass_fraction) +
                " exceeds tolerance (box too small for this horizon)");
        on_state(u, st, snap, diag);
    };

    if (cfg.coupling != 0.0) {
        // gauge ledger needs an initial value even for pure emission at k=0
        HartreeResult hr0 = hartree_potential(u);
        latest_gauge = hr0.gauge_c;
        latest_alias = hr0.aliasing_warning;
    }
    emit(0, 0.0);

    bool pending_half = false;  // true when u carries only the leading half phase
    if (cfg.coupling != 0.0 && nsteps > 0) {
        apply_phase(u, 0.5 * cfg.tau);
        pending_half = true;
    }
    for (long k = 1; k <= nsteps; ++k) {
        const auto tic = std::chrono::steady_clock::now();
        u = free_propagate(u, cfg.tau);
        u.time = t0 + k * cfg.tau;  // avoid accumulated addition error
        const bool boundary_emit =
            (k % cfg.snapshot_every == 0) || (k % cfg.diagnostic_every == 0) || k == nsteps;
        if (cfg.coupling != 0.0) {
            if (boundary_emit) {
                apply_phase(u, 0.5 * cfg.tau);  // trailing half: true state
                pending_half = false;
            } else {
                apply_phase(u, cfg.tau);  // fused full phase
            }
        }
        const auto toc = std::chrono::steady_clock::now();
        const double ms =
            std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(toc - tic).count();
        if (boundary_emit) emit(k, ms);
        if (cfg.coupling != 0.0 && boundary_emit && k < nsteps) {
            // resume fusion: leading half of the next step; |u| unchanged by the
            // emitted trailing half so the potential is identical and exact.
            apply_phase(u, 0.5 * cfg.tau);
            pending_half = true;
        }
    }
    (void)pending_half;
    if (std::abs(partial) > 1e-12) {
        u = strang_step(u, partial, cfg.coupling);
        u.time = cfg.t_end;
        emit(nsteps + 1, 0.0);
    }
}

/// Galilean weight |J|^beta(t) = M(t) (-4 t^2 Lap)^{beta/2} M(-t), realized as
/// chirp conjugation of the multiplier (2 t |xi|)^beta. Requires t > 0.
inline ComplexField galilean_weight(const ComplexField& u, double t, double beta) {
    if (!(t > 0)) throw std::invalid_argument("galilean_weight: t must be positive");
    if (beta < 0 || beta > 3) throw std::invalid_argument("galilean_weight: beta must lie in [0,3]");
    require_space(u, Space::physical, "galilean_weight");
    ComplexField w = u;
    chirp_multiply(w, -1.0 / (4.0 * t));
    w = apply_multiplier(w, [t, beta](const double* xi, int d) {
        double q = 0.0;
        for (int i = 0; i < d; ++i) q += xi[i] * xi[i];
        return cplx(std::pow(2.0 * t * std::sqrt(q), beta), 0.0);
    });
    chirp_multiply(w, 1.0 / (4.0 * t));
    return w;
}

struct MdfmResult {
    double sup_error = 0.0;
    bool range_warning = false;
};

/// Check the factorization e^{it Lap} = M(t) D(t) F M(t), with
/// D(t)f(x) = (2it)^{-d/2} f(x/2t). The dilation is realized by evaluating the
/// semidiscrete transform of M(t)u at the points x/2t (trigonometric
/// evaluation; no interpolation error beyond the quadrature itself).
inline MdfmResult mdfm_check(const ComplexField& u, double t) {
    if (!(t > 0)) throw std::invalid_argument("mdfm_check: t must be positive");
    require_space(u, Space::physical, "mdfm_check");
    const GridSpec& g = u.grid;

    ComplexField lhs = free_propagate(u, t);

    ComplexField mu = u;
    chirp_multiply(mu, 1.0 / (4.0 * t));
    // evaluate F[mu] at xi* = x_j / (2t)
    const double xi0 = g.coord(0) / (2.0 * t);
    const double dxi = g.h / (2.0 * t);
    SpectralEvaluator ev(g, xi0, dxi, g.n);
    cvec vals = ev(mu);
    ComplexField rhs(g, u.time + t, Space::physical);
    // (2it)^{-d/2} with principal branch: (2t)^{-d/2} e^{-i pi d / 4}
    const cplx dil = std::pow(2.0 * t, -0.5 * g.d) *
                     cplx(std::cos(M_PI * g.d / 4.0), -std::sin(M_PI * g.d / 4.0));
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs.values[i] = dil * vals[i];
    chirp_multiply(rhs, 1.0 / (4.0 * t));

    MdfmResult res;
    res.sup_error = max_abs_diff(lhs, rhs);
    // the dilated evaluation points exceed the frequency lattice extent when
    // (L/2)/(2t) > pi/h, i.e. the factorization probes beyond band range
    res.range_warning = (0.5 * g.length / (2.0 * t) > M_PI / g.h + 1e-12);
    return res;
}

}  // namespace hartree
