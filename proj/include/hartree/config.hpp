#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hartree/grid.hpp"

namespace hartree {

/// Full run configuration. Parsed from flat `key = value` text (UTF-8, '#'
/// comments); keys are documented in docs/config.md.
struct RunConfig {
    int dimension = 2;
    int grid_n = 256;
    double box_length = 104.0;
    // Gaussian datum A exp(-|x - center|^2 / (2 sigma^2)) e^{i boost.x}, with A
    // chosen post-hoc so || u0 ||_{H^{0,beta}} = epsilon exactly.
    double epsilon = 0.05;
    double sigma = 2.1;
    double center[3] = {0, 0, 0};
    double boost[3] = {0, 0, 0};
    bool linear = false;       // disable the Hartree coupling (free flow)
    double t_end = 50.0;
    double tau = 0.01;
    double beta = 1.1;
    double diag_start = 1.0;   // wavepacket diagnostics begin here
    double diag_dt = 0.25;
    double vmax = 1.2;
    int vgrid_m = 96;
    double ode_factor = 1.0;   // multiplies the verbatim 1/(2t) model coefficient
    int ode_sign = +1;         // +1 = as displayed; -1 = measured rotation direction
    double boundary_tol = 1e-6;
    double mass_tol = 1e-8;
    std::uint64_t seed = 0;    // randomized property tests only
    std::string label = "run";

    double hartree_coupling() const { return (linear || epsilon == 0.0) ? 0.0 : 1.0; }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

/// Parse flat key = value text. Unknown keys are an error (catches typos).
inline RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        auto as_d = [&] { return std::stod(val); };
        auto as_i = [&] { return std::stoi(val); };
        auto as_b = [&] {
            if (val == "true" || val == "1") return true;
            if (val == "false" || val == "0") return false;
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected boolean");
        };
        if (key == "dimension") c.dimension = as_i();
        else if (key == "grid_n") c.grid_n = as_i();
        else if (key == "box_length") c.box_length = as_d();
        else if (key == "epsilon") c.epsilon = as_d();
        else if (key == "sigma") c.sigma = as_d();
        else if (key == "center_x") c.center[0] = as_d();
        else if (key == "center_y") c.center[1] = as_d();
        else if (key == "center_z") c.center[2] = as_d();
        else if (key == "boost_x") c.boost[0] = as_d();
        else if (key == "boost_y") c.boost[1] = as_d();
        else if (key == "boost_z") c.boost[2] = as_d();
        else if (key == "linear") c.linear = as_b();
        else if (key == "t_end") c.t_end = as_d();
        else if (key == "tau") c.tau = as_d();
        else if (key == "beta") c.beta = as_d();
        else if (key == "diag_start") c.diag_start = as_d();
        else if (key == "diag_dt") c.diag_dt = as_d();
        else if (key == "vmax") c.vmax = as_d();
        else if (key == "vgrid_m") c.vgrid_m = as_i();
        else if (key == "ode_factor") c.ode_factor = as_d();
        else if (key == "ode_sign") c.ode_sign = as_i();
        else if (key == "boundary_tol") c.boundary_tol = as_d();
        else if (key == "mass_tol") c.mass_tol = as_d();
        else if (key == "seed") c.seed = std::stoull(val);
        else if (key == "label") c.label = val;
        else
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

/// Validate the standing assumptions. Throws std::invalid_argument with a
/// one-line message (the CLI maps this to exit status 1).
inline void validate_config(const RunConfig& c) {
    make_grid(c.dimension, c.grid_n, c.box_length);  // validates d, N, L
    const double d2 = 0.5 * c.dimension;
    if (!(c.beta > d2 && c.beta < 1.0 + d2))
        throw std::invalid_argument("beta must satisfy d/2 < beta < 1 + d/2");
    if (c.epsilon < 0) throw std::invalid_argument("epsilon must be >= 0");
    if (!(c.t_end >= 4.0)) throw std::invalid_argument("t_end must be >= 4");
    if (!(c.tau > 0)) throw std::invalid_argument("tau must be positive");
    if (!(c.sigma > 0)) throw std::invalid_argument("sigma must be positive");
    if (!(c.diag_dt > 0)) throw std::invalid_argument("diag_dt must be positive");
    if (!(c.diag_start >= 1.0)) throw std::invalid_argument("diag_start must be >= 1");
    const double steps_per_diag = c.diag_dt / c.tau;
    if (std::abs(steps_per_diag - std::round(steps_per_diag)) > 1e-9)
        throw std::invalid_argument("diag_dt must be an integer multiple of tau");
    const double start_steps = c.diag_start / c.tau;
    if (std::abs(start_steps - std::round(start_steps)) > 1e-9)
        throw std::invalid_argument("diag_start must lie on the step grid");
    if (c.vgrid_m < 4) throw std::invalid_argument("vgrid_m must be >= 4");
    if (!(c.vmax > 0)) throw std::invalid_argument("vmax must be positive");
    if (2.0 * c.t_end * c.vmax > 0.4 * c.box_length + 1e-9)
        throw std::invalid_argument("velocity grid violates |2 T vmax| <= 0.4 L");
    if (c.ode_sign != 1 && c.ode_sign != -1)
        throw std::invalid_argument("ode_sign must be +1 or -1");
    if (!(c.ode_factor > 0)) throw std::invalid_argument("ode_factor must be positive");
}

/// Canonical text form (stable key order); the manifest embeds this and the
/// config hash is computed from it.
inline std::string config_to_text(const RunConfig& c) {
    std::ostringstream o;
    o.precision(17);
    o << "dimension = " << c.dimension << "\n";
    o << "grid_n = " << c.grid_n << "\n";
    o << "box_length = " << c.box_length << "\n";
    o << "epsilon = " << c.epsilon << "\n";
    o << "sigma = " << c.sigma << "\n";
    o << "center_x = " << c.center[0] << "\n";
    o << "center_y = " << c.center[1] << "\n";
    o << "center_z = " << c.center[2] << "\n";
    o << "boost_x = " << c.boost[0] << "\n";
    o << "boost_y = " << c.boost[1] << "\n";
    o << "boost_z = " << c.boost[2] << "\n";
    o << "linear = " << (c.linear ? "true" : "false") << "\n";
    o << "t_end = " << c.t_end << "\n";
    o << "tau = " << c.tau << "\n";
    o << "beta = " << c.beta << "\n";
    o << "diag_start = " << c.diag_start << "\n";
    o << "diag_dt = " << c.diag_dt << "\n";
    o << "vmax = " << c.vmax << "\n";
    o << "vgrid_m = " << c.vgrid_m << "\n";
    o << "ode_factor = " << c.ode_factor << "\n";
    o << "ode_sign = " << c.ode_sign << "\n";
    o << "boundary_tol = " << c.boundary_tol << "\n";
    o << "mass_tol = " << c.mass_tol << "\n";
    o << "seed = " << c.seed << "\n";
    o << "label = " << c.label << "\n";
    return o.str();
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace hartree
