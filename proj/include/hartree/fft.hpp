#pragma once

#include <map>
#include <mutex>
#include <tuple>

#include <fftw3.h>

#include "hartree/field.hpp"

namespace hartree {

namespace detail {

/// Process-wide cache of in-place FFTW plans keyed by (rank, n, sign).
/// Plans are created with FFTW_ESTIMATE so plan selection is deterministic
/// run to run; fftw_execute_dft is then applied to any fftw_malloc-aligned
/// array of the same shape.
class PlanCache {
  public:
    static PlanCache& instance() {
        static PlanCache c;
        return c;
    }

    fftw_plan get(int rank, int n, int sign) {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_tuple(rank, n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::size_t total = 1;
        for (int i = 0; i < rank; ++i) total *= static_cast<std::size_t>(n);
        cvec buf(total);
        int dims[3] = {n, n, n};
        fftw_plan p = fftw_plan_dft(
            rank, dims, reinterpret_cast<fftw_complex*>(buf.data()),
            reinterpret_cast<fftw_complex*>(buf.data()), sign, FFTW_ESTIMATE);
        plans_[key] = p;
        return p;
    }

    /// 1D plan for CZT work buffers of arbitrary length.
    fftw_plan get1d(int n, int sign) { return get(1, n, sign); }

  private:
    PlanCache() = default;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
    std::mutex mu_;
};

inline void execute_inplace(fftw_plan p, cplx* data) {
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data),
                     reinterpret_cast<fftw_complex*>(data));
}

}  // namespace detail

/// Flip the sign of entries with odd index parity (i1+...+id odd). With the
/// grid offset x_0 = -L/2 and even N this equals the phase e^{-i x_0 xi} that
/// converts FFTW's index-based transform to the x-based one.
inline void checkerboard_flip(const GridSpec& g, cplx* v) {
    const int n = g.n;
    if (g.d == 2) {
        for (int i = 0; i < n; ++i) {
            cplx* row = v + static_cast<std::size_t>(i) * n;
            for (int j = (i & 1) ? 0 : 1; j < n; j += 2) row[j] = -row[j];
        }
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                cplx* row = v + (static_cast<std::size_t>(i) * n + j) * n;
                for (int k = ((i + j) & 1) ? 0 : 1; k < n; k += 2) row[k] = -row[k];
            }
    }
}

/// Discrete Fourier transform matching the continuum normalization
///   F[f](xi) = (2pi)^{-d/2} Int e^{-i x.xi} f(x) dx,
/// realized as (2pi)^{-d/2} h^d Sum_x e^{-i x.xi} f(x) on the grid.
inline ComplexField forward_transform(const ComplexField& f) {
    require_space(f, Space::physical, "forward_transform");
    const GridSpec& g = f.grid;
    ComplexField out = f;
    out.space = Space::spectral;
    fftw_plan p = detail::PlanCache::instance().get(g.d, g.n, FFTW_FORWARD);
    detail::execute_inplace(p, out.data());
    const double scale =
        std::pow(2.0 * M_PI, -0.5 * g.d) * std::pow(g.h, g.d);
    for (auto& z : out.values) z *= scale;
    checkerboard_flip(g, out.data());
    require_finite(out, "forward_transform");
    return out;
}

/// Inverse of forward_transform:
///   f(x) = (2pi)^{-d/2} (2pi/L)^d Sum_xi e^{+i x.xi} g(xi).
inline ComplexField inverse_transform(const ComplexField& f) {
    require_space(f, Space::spectral, "inverse_transform");
    const GridSpec& g = f.grid;
    ComplexField out = f;
    out.space = Space::physical;
    checkerboard_flip(g, out.data());
    fftw_plan p = detail::PlanCache::instance().get(g.d, g.n, FFTW_BACKWARD);
    detail::execute_inplace(p, out.data());
    const double scale = std::pow(2.0 * M_PI, -0.5 * g.d) *
                         std::pow(2.0 * M_PI / g.length, g.d);
    for (auto& z : out.values) z *= scale;
    require_finite(out, "inverse_transform");
    return out;
}

/// L2 norm with the physical measure h^d or the dual measure (2pi/L)^d,
/// matching Parseval for the transform pair above.
inline double l2_norm(const ComplexField& f) {
    double s = 0.0;
    for (const auto& z : f.values) s += std::norm(z);
    const GridSpec& g = f.grid;
    const double meas = (f.space == Space::physical)
                            ? std::pow(g.h, g.d)
                            : std::pow(2.0 * M_PI / g.length, g.d);
    return std::sqrt(s * meas);
}

}  // namespace hartree
