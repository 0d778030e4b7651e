#pragma once

#include <cmath>
#include <complex>
#include <cstdlib>
#include <limits>
#include <new>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "hartree/grid.hpp"

namespace hartree {

using cplx = std::complex<double>;

/// Allocator backed by fftw_malloc so field storage satisfies FFTW's SIMD
/// alignment and plans can be reused across fields of the same shape.
template <class T>
struct FftwAllocator {
    using value_type = T;
    FftwAllocator() = default;
    template <class U>
    FftwAllocator(const FftwAllocator<U>&) {}
    T* allocate(std::size_t n) {
        void* p = fftw_malloc(n * sizeof(T));
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, std::size_t) { fftw_free(p); }
    template <class U>
    bool operator==(const FftwAllocator<U>&) const { return true; }
};

using cvec = std::vector<cplx, FftwAllocator<cplx>>;

enum class Space { physical, spectral };

/// Complex grid function tagged with simulation time and the space it lives in.
struct ComplexField {
    GridSpec grid;
    double time = 0.0;
    Space space = Space::physical;
    cvec values;

    ComplexField() = default;
    ComplexField(const GridSpec& g, double t, Space s)
        : grid(g), time(t), space(s), values(g.size(), cplx(0.0, 0.0)) {}

    std::size_t size() const { return values.size(); }
    cplx* data() { return values.data(); }
    const cplx* data() const { return values.data(); }
};

inline ComplexField zero_field(const GridSpec& g, double t = 0.0,
                               Space s = Space::physical) {
    return ComplexField(g, t, s);
}

inline bool all_finite(const ComplexField& f) {
    for (const auto& z : f.values)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

inline void require_finite(const ComplexField& f, const char* where) {
    if (!all_finite(f))
        throw std::runtime_error(std::string(where) + ": non-finite field values");
}

inline void require_space(const ComplexField& f, Space s, const char* where) {
    if (f.space != s)
        throw std::invalid_argument(std::string(where) + ": field is in the wrong space");
}

inline void require_same_grid(const ComplexField& a, const ComplexField& b,
                              const char* where) {
    if (!(a.grid == b.grid))
        throw std::invalid_argument(std::string(where) + ": grid mismatch");
}

/// Sample f(x) over the grid into a physical-space field.
template <class F>
ComplexField sample_physical(const GridSpec& g, double t, F&& f) {
    ComplexField out(g, t, Space::physical);
    if (g.d == 2) {
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j)
                out.values[ravel2(g, i, j)] = f(g.coord(i), g.coord(j), 0.0);
    } else {
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j)
                for (int k = 0; k < g.n; ++k)
                    out.values[ravel3(g, i, j, k)] = f(g.coord(i), g.coord(j), g.coord(k));
    }
    return out;
}

/// max |a - b| over all nodes
inline double max_abs_diff(const ComplexField& a, const ComplexField& b) {
    require_same_grid(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

inline double max_abs(const ComplexField& a) {
    double m = 0.0;
    for (const auto& z : a.values) m = std::max(m, std::abs(z));
    return m;
}

}  // namespace hartree
