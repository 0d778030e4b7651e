#pragma once

#include <chrono>
#include <optional>

#include "hartree/fitting.hpp"
#include "hartree/io.hpp"
#include "hartree/scattering.hpp"
#include "hartree/version.hpp"

namespace hartree {

/// Gaussian datum of the configured family, scaled post-hoc so that
/// || u0 ||_{H^{0,beta}} equals epsilon exactly on the grid.
inline ComplexField build_datum(const RunConfig& cfg, const GridSpec& g) {
    ComplexField u0 = sample_physical(g, 0.0, [&](double x, double y, double z) {
        const double dx = x - cfg.center[0];
        const double dy = y - cfg.center[1];
        const double dz = g.d == 3 ? z - cfg.center[2] : 0.0;
        const double r2 = dx * dx + dy * dy + dz * dz;
        const double th = cfg.boost[0] * x + cfg.boost[1] * y + (g.d == 3 ? cfg.boost[2] * z : 0.0);
        return std::exp(-r2 / (2.0 * cfg.sigma * cfg.sigma)) * cplx(std::cos(th), std::sin(th));
    });
    if (cfg.epsilon == 0.0) {
        for (auto& v : u0.values) v = cplx(0, 0);
        return u0;
    }
    const double n0 = weighted_sobolev_norm(u0, 0.0, cfg.beta);
    const double scale = cfg.epsilon / n0;
    for (auto& v : u0.values) v *= scale;
    return u0;
}

/// Column schema of diagnostics.csv, in order. Documented in
/// docs/diagnostics-columns.md. wall_ms is excluded from determinism
/// comparisons.
inline const std::vector<std::string>& diagnostics_columns() {
    static const std::vector<std::string> cols = {
        "t",
        "l2",
        "linf",
        "lorentz",
        "h0beta",
        "jbeta",
        "interp_ratio",
        "boundary_mass",
        "gauge_c",
        "gamma_linf",
        "gamma_l2",
        "bound_linf_ratio",
        "bound_l2_ratio",
        "bound_grad_ratio",
        "ray_sup",
        "freq_sup",
        "residual_linf",
        "phi_max",
        "cauchy_tail",
        "gamma_probe_err",
        "gamma_full_err",
        "jbeta_identity_rel",
        "alias_flag",
        "wall_ms",
    };
    return cols;
}

struct RunResult {
    std::string out_dir;
    CsvTable diagnostics;
    std::optional<ScatteringProfile> profile;
    std::vector<std::pair<double, double>> recon_residuals;  // (t, ||u-rec||_inf t^{d/2})
    double elapsed_seconds = 0.0;
    std::vector<double> snapshot_times;
};

namespace detail {

inline bool near(double a, double b, double tol = 1e-9) { return std::abs(a - b) <= tol; }

/// Dyadic snapshot times {1,2,4,...} up to T plus the T-anchored checkpoints
/// {T/4, T/2, T}, restricted to the diagnostic grid.
inline std::vector<double> snapshot_time_set(const RunConfig& cfg) {
    std::vector<double> ts;
    for (double t = cfg.diag_start; t <= cfg.t_end + 1e-9; t *= 2) ts.push_back(t);
    for (double t : {cfg.t_end / 4, cfg.t_end / 2, cfg.t_end}) {
        if (t >= cfg.diag_start - 1e-9) ts.push_back(t);
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end(),
                         [](double a, double b) { return near(a, b); }),
             ts.end());
    // snap onto the diagnostic grid; drop anything that misses it
    std::vector<double> out;
    for (double t : ts) {
        const double k = (t - cfg.diag_start) / cfg.diag_dt;
        if (near(k, std::round(k), 1e-6)) out.push_back(t);
    }
    return out;
}

inline std::string time_tag(double t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%012.4f", t);
    return buf;
}

}  // namespace detail

/// Execute a full diagnostic run: evolve the datum, track every norm and
/// wavepacket quantity at the diagnostic cadence, write the run directory
/// (manifest, diagnostics.csv, snapshots, gamma slices, profile,
/// reconstruction residuals). Deterministic given the config.
inline RunResult run(const RunConfig& cfg, const std::string& out_dir) {
    validate_config(cfg);
    const auto t_start = std::chrono::steady_clock::now();
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    fs::create_directories(out_dir + "/snapshots");
    fs::create_directories(out_dir + "/gamma");

    const GridSpec g = make_grid(cfg.dimension, cfg.grid_n, cfg.box_length);
    const VelocityGrid vg(cfg.dimension, cfg.vgrid_m, cfg.vmax);
    ComplexField u0 = build_datum(cfg, g);

    EvolveConfig ec;
    ec.t_end = cfg.t_end;
    ec.tau = cfg.tau;
    ec.diagnostic_every = static_cast<int>(std::lround(cfg.diag_dt / cfg.tau));
    ec.snapshot_every = ec.diagnostic_every;
    ec.coupling = cfg.hartree_coupling();
    ec.boundary_tol = cfg.boundary_tol;
    ec.mass_tol = cfg.mass_tol;

    const std::vector<double> snap_times = detail::snapshot_time_set(cfg);
    auto is_snapshot_time = [&](double t) {
        for (double s : snap_times)
            if (detail::near(t, s, 1e-6)) return true;
        return false;
    };

    // manifest first (so aborted runs still carry their provenance)
    Manifest man;
    const std::string cfg_text = config_to_text(cfg);
    man.emplace_back("code_version", kVersion);
    man.emplace_back("config_hash",
                     [&] {
                         char b[32];
                         std::snprintf(b, sizeof(b), "%016" PRIx64, fnv1a64(cfg_text));
                         return std::string(b);
                     }());
    man.emplace_back("determinism_mode", "serial-exact");
    man.emplace_back("riesz_constant", format_double(riesz_constant(g.d)));
    man.emplace_back("missing_zero_mode", format_double(missing_zero_mode(g)));
    man.emplace_back("self_cell_average_inv_r", format_double(cell_average_inv_r(g.d, vg.dv)));
    man.emplace_back("freq_norm_constant_re", format_double(freq_norm_constant(g.d).real()));
    man.emplace_back("freq_norm_constant_im", format_double(freq_norm_constant(g.d).imag()));
    man.emplace_back("convolution_factor", format_double(std::pow(2 * M_PI, 0.5 * g.d)));
    man.emplace_back("ode_factor", format_double(cfg.ode_factor));
    man.emplace_back("ode_sign", std::to_string(cfg.ode_sign));
    man.emplace_back("gamma_full_check_stride", std::to_string(g.d == 2 ? 1 : 4));
    {
        std::istringstream cs(cfg_text);
        std::string line;
        while (std::getline(cs, line)) {
            const auto eq = line.find(" = ");
            man.emplace_back("config." + line.substr(0, eq), line.substr(eq + 3));
        }
    }
    write_manifest(out_dir + "/manifest.txt", man);

    CsvTable table;
    table.columns = diagnostics_columns();
    std::vector<GammaSlice> slices;   // with H filled
    std::vector<GammaSlice> gauged;   // G slices
    std::optional<PhaseAccumulator> acc;
    const double NaN = std::numeric_limits<double>::quiet_NaN();
    RunResult result;
    result.out_dir = out_dir;
    result.snapshot_times = snap_times;

    try {
        evolve(u0, ec,
               [&](const ComplexField& u, const StepStats& st, bool, bool) {
                   const double t = u.time;
                   if (t < cfg.diag_start - 1e-9) return;
                   const bool snap = is_snapshot_time(t);

                   GammaSlice slice = gamma_batch(u, vg);
                   slice.H = velocity_coulomb(slice);
                   if (!acc) {
                       acc.emplace(vg, t, slice.H, cfg.ode_factor);
                   } else {
                       update_phase(*acc, slice.H, t);
                   }
                   GammaSlice G = gauged_amplitude(slice, *acc, cfg.ode_sign);

                   // norms
                   NormReport nr;
                   nr.t = t;
                   nr.l2 = lp_norm(u, 2.0);
                   nr.linf = max_abs(u);
                   nr.lorentz = lorentz_norm(u, 2.0 * g.d / (g.d - 1.0), 2.0);
                   ComplexField back = free_propagate(u, -t);
                   const double xw = l2_norm(radial_weight(back, cfg.beta));
                   nr.h0beta = l2_norm(u) + xw;
                   const double jb = l2_norm(galilean_weight(u, t, cfg.beta));
                   nr.jbeta = jb;
                   const double jb_id_rel = jb > 0 ? std::abs(jb - xw) / jb : 0.0;
                   nr.interp_ratio = nr.linf > 0 ? interpolation_ratio(u) : 0.0;
                   nr.boundary_mass = st.boundary_mass_fraction;
                   nr.gauge_c = st.gauge_c;

                   GammaBounds gb = gamma_bounds(u, slice, cfg.beta, jb);

                   // oracle probes: batch vs direct on a coarse node set
                   const int probe_stride = std::max(1, vg.m / 5);
                   GammaSlice probe = gamma_direct_slice(u, vg, probe_stride);
                   double probe_err = 0.0;
                   const double gsup = slice.sup_abs();
                   for (std::size_t q = 0; q < probe.values.size(); ++q) {
                       if (std::isnan(probe.values[q].real())) continue;
                       probe_err = std::max(probe_err,
                                            std::abs(probe.values[q] - slice.values[q]));
                   }
                   probe_err = gsup > 0 ? probe_err / gsup : 0.0;

                   double full_err = NaN;
                   if (snap) {
                       const int full_stride = g.d == 2 ? 1 : 4;
                       GammaSlice full = gamma_direct_slice(u, vg, full_stride);
                       double e = 0.0;
                       for (std::size_t q = 0; q < full.values.size(); ++q) {
                           if (std::isnan(full.values[q].real())) continue;
                           e = std::max(e, std::abs(full.values[q] - slice.values[q]));
                       }
                       full_err = gsup > 0 ? e / gsup : 0.0;
                   }

                   // Cauchy tail against the slice at t/2, when recorded
                   double tail = NaN;
                   for (std::size_t k = 0; k < gauged.size(); ++k) {
                       if (detail::near(gauged[k].t, 0.5 * t, 1e-6)) {
                           double s = 0.0;
                           for (std::size_t q = 0; q < G.values.size(); ++q)
                               s = std::max(s, std::abs(G.values[q] - gauged[k].values[q]));
                           tail = s;
                           break;
                       }
                   }

                   double phimax = 0.0;
                   for (double p : acc->phi) phimax = std::max(phimax, p);

                   std::vector<double> row = {
                       t, nr.l2, nr.linf, nr.lorentz, nr.h0beta, nr.jbeta, nr.interp_ratio,
                       nr.boundary_mass, nr.gauge_c, slice.sup_abs(), slice.l2(),
                       gb.linf_ratio, gb.l2_ratio, gb.grad_ratio, gb.ray_sup, gb.freq_sup,
                       NaN /*residual filled post-pass*/, phimax, tail, probe_err, full_err,
                       jb_id_rel, st.aliasing_warning ? 1.0 : 0.0, st.wall_ms};
                   table.rows.push_back(std::move(row));

                   write_slice(out_dir + "/gamma/gamma_" + detail::time_tag(t) + ".slice", slice);
                   if (snap)
                       write_field(out_dir + "/snapshots/snap_" + detail::time_tag(t) + ".field", u);

                   slices.push_back(std::move(slice));
                   gauged.push_back(std::move(G));
               });
    } catch (const std::exception& e) {
        std::ofstream err(out_dir + "/error.txt");
        err << "status = aborted\nreason = " << e.what() << "\n";
        throw;
    }

    // post-pass: centered-difference ODE remainder where the spacing rule
    // dt <= 0.1 t allows it
    const int rescol = csv_column(table, "residual_linf");
    for (std::size_t k = 1; k + 1 < slices.size(); ++k) {
        const double dt1 = slices[k].t - slices[k - 1].t;
        const double dt2 = slices[k + 1].t - slices[k].t;
        if (std::abs(dt1 - dt2) > 1e-9 || dt1 > 0.1 * slices[k].t + 1e-12) continue;
        auto R = ode_residual(slices[k - 1], slices[k], slices[k + 1], slices[k].H,
                              cfg.ode_factor, cfg.ode_sign);
        double sup = 0.0;
        for (double r : R) sup = std::max(sup, r);
        table.rows[k][rescol] = sup;
    }

    write_csv(out_dir + "/diagnostics.csv", table);
    result.diagnostics = table;

    // profile extraction at T/4, T/2, T when all three slices exist
    auto find_g = [&](double t) -> const GammaSlice* {
        for (const auto& s : gauged)
            if (detail::near(s.t, t, 1e-6)) return &s;
        return nullptr;
    };
    const GammaSlice* g4 = find_g(cfg.t_end / 4);
    const GammaSlice* g2 = find_g(cfg.t_end / 2);
    const GammaSlice* gT = find_g(cfg.t_end);
    if (g4 && g2 && gT && acc) {
        ScatteringProfile prof = extract_profile(*g4, *g2, *gT, acc->phi);
        result.profile = prof;
        ProfileFile pf;
        pf.vgrid = prof.vgrid;
        pf.values = prof.values;
        pf.T = prof.T;
        pf.tail = prof.tail;
        pf.prev_tail = prof.prev_tail;
        pf.cauchy_ok = prof.cauchy_ok ? 1 : 0;
        write_profile(out_dir + "/profile.prof", pf);

        // reconstruction residual ||u - rec||_inf t^{d/2} at the checkpoints,
        // gauge-consistent via the c(t) ledger
        const int gcol = csv_column(table, "gauge_c");
        const int tcol = csv_column(table, "t");
        auto gauge_theta = [&](double t) {
            for (const auto& row : table.rows)
                if (detail::near(row[tcol], t, 1e-6)) return row[gcol] * t;
            return 0.0;
        };
        CsvTable rt;
        rt.columns = {"t", "recon_residual_scaled", "outside_warning"};
        for (double tchk : {cfg.t_end / 4, cfg.t_end / 2, cfg.t_end}) {
            const std::string path =
                out_dir + "/snapshots/snap_" + detail::time_tag(tchk) + ".field";
            if (!fs::exists(path)) continue;
            ComplexField uchk = read_field(path);
            bool warn = false;
            ComplexField rec =
                reconstruct(prof, tchk, g, cfg.ode_factor, cfg.ode_sign,
                            gauge_theta(tchk) - gauge_theta(cfg.t_end), &uchk, &warn);
            const double eta = max_abs_diff(uchk, rec) * std::pow(tchk, 0.5 * g.d);
            result.recon_residuals.emplace_back(tchk, eta);
            rt.rows.push_back({tchk, eta, warn ? 1.0 : 0.0});
        }
        write_csv(out_dir + "/reconstruction.csv", rt);
    }

    const auto t_stop = std::chrono::steady_clock::now();
    result.elapsed_seconds =
        std::chrono::duration_cast<std::chrono::duration<double>>(t_stop - t_start).count();
    {
        Manifest done = read_manifest(out_dir + "/manifest.txt");
        done.emplace_back("status", "completed");
        write_manifest(out_dir + "/manifest.txt", done);
    }
    return result;
}

/// Recompute diagnostics from the stored artifacts: field-derived columns from
/// snapshots, slice-derived columns (gamma stats, phase, remainder, tails)
/// from the stored gamma slices. Columns that need the live trajectory are
/// left NaN. Writes diagnostics_analyze.csv next to the original.
inline CsvTable analyze(const std::string& run_dir) {
    namespace fs = std::filesystem;
    Manifest man = read_manifest(run_dir + "/manifest.txt");
    std::string cfg_text;
    for (const auto& [k, v] : man)
        if (k.rfind("config.", 0) == 0) cfg_text += k.substr(7) + " = " + v + "\n";
    RunConfig cfg = parse_config(cfg_text);
    const GridSpec g = make_grid(cfg.dimension, cfg.grid_n, cfg.box_length);

    std::vector<std::string> slice_files;
    for (const auto& e : fs::directory_iterator(run_dir + "/gamma"))
        slice_files.push_back(e.path().string());
    std::sort(slice_files.begin(), slice_files.end());
    std::vector<GammaSlice> slices;
    for (const auto& p : slice_files) slices.push_back(read_slice(p));

    std::map<std::string, ComplexField> snaps;
    if (fs::exists(run_dir + "/snapshots"))
        for (const auto& e : fs::directory_iterator(run_dir + "/snapshots")) {
            ComplexField f = read_field(e.path().string());
            snaps.emplace(detail::time_tag(f.time), std::move(f));
        }

    CsvTable table;
    table.columns = diagnostics_columns();
    const double NaN = std::numeric_limits<double>::quiet_NaN();
    std::optional<PhaseAccumulator> acc;
    std::vector<GammaSlice> gauged;
    const VelocityGrid vg = slices.empty() ? VelocityGrid(cfg.dimension, cfg.vgrid_m, cfg.vmax)
                                           : slices.front().vgrid;
    for (auto& s : slices) {
        if (s.H.empty()) s.H = velocity_coulomb(s);
        if (!acc) acc.emplace(vg, s.t, s.H, cfg.ode_factor);
        else update_phase(*acc, s.H, s.t);
        GammaSlice G = gauged_amplitude(s, *acc, cfg.ode_sign);

        std::vector<double> row(table.columns.size(), NaN);
        row[csv_column(table, "t")] = s.t;
        row[csv_column(table, "gamma_linf")] = s.sup_abs();
        row[csv_column(table, "gamma_l2")] = s.l2();
        double phimax = 0.0;
        for (double p : acc->phi) phimax = std::max(phimax, p);
        row[csv_column(table, "phi_max")] = phimax;
        double tail = NaN;
        for (const auto& gg : gauged)
            if (detail::near(gg.t, 0.5 * s.t, 1e-6)) {
                double m = 0.0;
                for (std::size_t q = 0; q < G.values.size(); ++q)
                    m = std::max(m, std::abs(G.values[q] - gg.values[q]));
                tail = m;
            }
        row[csv_column(table, "cauchy_tail")] = tail;

        auto it = snaps.find(detail::time_tag(s.t));
        if (it != snaps.end()) {
            const ComplexField& u = it->second;
            row[csv_column(table, "l2")] = lp_norm(u, 2.0);
            row[csv_column(table, "linf")] = max_abs(u);
            row[csv_column(table, "lorentz")] = lorentz_norm(u, 2.0 * g.d / (g.d - 1.0), 2.0);
            ComplexField back = free_propagate(u, -s.t);
            const double xw = l2_norm(radial_weight(back, cfg.beta));
            row[csv_column(table, "h0beta")] = l2_norm(u) + xw;
            const double jb = l2_norm(galilean_weight(u, s.t, cfg.beta));
            row[csv_column(table, "jbeta")] = jb;
            row[csv_column(table, "jbeta_identity_rel")] = jb > 0 ? std::abs(jb - xw) / jb : 0.0;
            row[csv_column(table, "interp_ratio")] = interpolation_ratio(u);
            row[csv_column(table, "boundary_mass")] = boundary_shell_mass_fraction(u);
            GammaBounds gb = gamma_bounds(u, s, cfg.beta, jb);
            row[csv_column(table, "bound_linf_ratio")] = gb.linf_ratio;
            row[csv_column(table, "bound_l2_ratio")] = gb.l2_ratio;
            row[csv_column(table, "bound_grad_ratio")] = gb.grad_ratio;
            row[csv_column(table, "ray_sup")] = gb.ray_sup;
            row[csv_column(table, "freq_sup")] = gb.freq_sup;
        }
        table.rows.push_back(std::move(row));
        gauged.push_back(std::move(G));
    }
    // remainder post-pass over stored slices
    const int rescol = csv_column(table, "residual_linf");
    for (std::size_t k = 1; k + 1 < slices.size(); ++k) {
        const double dt1 = slices[k].t - slices[k - 1].t;
        const double dt2 = slices[k + 1].t - slices[k].t;
        if (std::abs(dt1 - dt2) > 1e-9 || dt1 > 0.1 * slices[k].t + 1e-12) continue;
        auto R = ode_residual(slices[k - 1], slices[k], slices[k + 1], slices[k].H,
                              cfg.ode_factor, cfg.ode_sign);
        double sup = 0.0;
        for (double r : R) sup = std::max(sup, r);
        table.rows[k][rescol] = sup;
    }
    write_csv(run_dir + "/diagnostics_analyze.csv", table);
    return table;
}

struct ConvergenceReport {
    std::vector<double> values;  // tau values or N values
    std::vector<double> diffs;   // pairwise L_inf differences at t_end
    std::vector<double> orders;  // log2 of successive ratios
};

/// Self-convergence study, halving tau (or doubling N) from the config value.
/// For tau the comparison is pointwise at t_end on the shared grid; for N the
/// finer solutions are restricted to the coarse nodes (the grids nest).
inline ConvergenceReport convergence_study(const RunConfig& cfg, const std::string& vary,
                                           int levels = 3) {
    validate_config(cfg);
    if (levels < 3) throw std::invalid_argument("convergence_study: need >= 3 levels");
    ConvergenceReport rep;
    std::vector<ComplexField> finals;
    for (int l = 0; l < levels; ++l) {
        RunConfig c = cfg;
        if (vary == "tau") {
            c.tau = cfg.tau / std::pow(2.0, l);
            rep.values.push_back(c.tau);
        } else if (vary == "n") {
            c.grid_n = cfg.grid_n * (1 << l);
            rep.values.push_back(c.grid_n);
        } else {
            throw std::invalid_argument("convergence_study: vary must be 'tau' or 'n'");
        }
        const GridSpec g = make_grid(c.dimension, c.grid_n, c.box_length);
        ComplexField u0 = build_datum(c, g);
        EvolveConfig ec;
        ec.t_end = c.t_end;
        ec.tau = c.tau;
        ec.diagnostic_every = std::max(1, static_cast<int>(std::lround(c.t_end / c.tau)));
        ec.snapshot_every = ec.diagnostic_every;
        ec.coupling = c.hartree_coupling();
        ec.boundary_tol = c.boundary_tol;
        ec.mass_tol = c.mass_tol;
        ComplexField ufinal;
        evolve(u0, ec, [&](const ComplexField& u, const StepStats&, bool, bool) {
            if (detail::near(u.time, c.t_end, 1e-9)) ufinal = u;
        });
        finals.push_back(std::move(ufinal));
    }
    for (int l = 0; l + 1 < levels; ++l) {
        const ComplexField& a = finals[l];
        const ComplexField& b = finals[l + 1];
        double diff = 0.0;
        if (vary == "tau") {
            diff = max_abs_diff(a, b);
        } else {
            const int ratio = b.grid.n / a.grid.n;
            if (a.grid.d == 2) {
                for (int i = 0; i < a.grid.n; ++i)
                    for (int j = 0; j < a.grid.n; ++j)
                        diff = std::max(diff,
                                        std::abs(a.values[ravel2(a.grid, i, j)] -
                                                 b.values[ravel2(b.grid, i * ratio, j * ratio)]));
            } else {
                for (int i = 0; i < a.grid.n; ++i)
                    for (int j = 0; j < a.grid.n; ++j)
                        for (int k = 0; k < a.grid.n; ++k)
                            diff = std::max(
                                diff, std::abs(a.values[ravel3(a.grid, i, j, k)] -
                                               b.values[ravel3(b.grid, i * ratio, j * ratio,
                                                               k * ratio)]));
            }
        }
        rep.diffs.push_back(diff);
    }
    for (std::size_t l = 0; l + 1 < rep.diffs.size(); ++l)
        rep.orders.push_back(std::log2(rep.diffs[l] / rep.diffs[l + 1]));
    return rep;
}

}  // namespace hartree
