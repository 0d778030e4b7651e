#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hartree {

struct PowerFit {
    double slope = 0.0;
    double intercept = 0.0;   // of log y vs log t
    double residual = 0.0;    // max absolute log deviation
    int samples = 0;
};

/// Least squares of log y against log t over the window [t_a, t_b].
/// Rejects windows with fewer than 8 samples or non-positive values.
inline PowerFit fit_power_law(const std::vector<double>& t, const std::vector<double>& y,
                              double t_a, double t_b) {
    if (t.size() != y.size()) throw std::invalid_argument("fit_power_law: size mismatch");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_a - 1e-12 || t[i] > t_b + 1e-12) continue;
        if (!(y[i] > 0.0))
            throw std::invalid_argument("fit_power_law: values must be positive in the window");
        lx.push_back(std::log(t[i]));
        ly.push_back(std::log(y[i]));
    }
    if (lx.size() < 8)
        throw std::invalid_argument("fit_power_law: need at least 8 samples in the window");
    const std::size_t n = lx.size();
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += lx[i];
        sy += ly[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    PowerFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.samples = static_cast<int>(n);
    for (std::size_t i = 0; i < n; ++i)
        f.residual = std::max(f.residual, std::abs(ly[i] - (f.intercept + f.slope * lx[i])));
    return f;
}

}  // namespace hartree
