#pragma once

#include <cstdint>
#include <cstring>
#include <map>

#include "hartree/fft.hpp"

namespace hartree {

namespace detail {

inline int next_pow2(int n) {
    int s = 1;
    while (s < n) s <<= 1;
    return s;
}

/// e^{i theta} with the angle reduced in extended precision. Chirp angles
/// grow like delta*k^2 and plain double loses ~1e-10 of phase there.
inline cplx cis_l(long double theta) {
    const long double tp = 6.283185307179586476925286766559L;
    long double r = std::fmod(theta, tp);
    return cplx(static_cast<double>(std::cos(r)), static_cast<double>(std::sin(r)));
}

struct CztKernelKey {
    int s;
    std::uint64_t delta_bits;
    bool operator<(const CztKernelKey& o) const {
        return s != o.s ? s < o.s : delta_bits < o.delta_bits;
    }
};

/// FFT of the wrapped Bluestein kernel e^{-i delta r^2 / 2}, cached per
/// (fft size, delta).
inline const cvec& czt_kernel_fft(int S, int N, int P, long double delta) {
    static std::map<CztKernelKey, cvec> cache;
    static std::mutex mu;
    double dd = static_cast<double>(delta);
    std::uint64_t bits;
    std::memcpy(&bits, &dd, sizeof(bits));
    CztKernelKey key{S, bits};
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    cvec ker(S, cplx(0.0, 0.0));
    for (int r = 0; r < P; ++r)
        ker[r] = cis_l(-delta * static_cast<long double>(r) * r / 2.0L);
    for (int r = 1; r < N; ++r)
        ker[S - r] = cis_l(-delta * static_cast<long double>(r) * r / 2.0L);
    fftw_plan p = PlanCache::instance().get1d(S, FFTW_FORWARD);
    execute_inplace(p, ker.data());
    return cache.emplace(key, std::move(ker)).first->second;
}

}  // namespace detail

/// Chirp-z evaluation: out[p] = Sum_{m=0}^{N-1} z[m] e^{i (phi0 m + delta m p)}
/// for p = 0..P-1, via Bluestein's factorization. Exact (to round-off) for any
/// real phi0, delta; cost three FFTs of the next power of two >= N+P-1.
inline void czt_core(const cplx* z, int N, int P, long double phi0,
                     long double delta, cplx* out) {
    const int S = detail::next_pow2(N + P - 1);
    const cvec& kerfft = detail::czt_kernel_fft(S, N, P, delta);
    cvec a(S, cplx(0.0, 0.0));
    for (int m = 0; m < N; ++m) {
        long double mm = m;
        a[m] = z[m] * detail::cis_l(phi0 * mm + delta * mm * mm / 2.0L);
    }
    fftw_plan pf = detail::PlanCache::instance().get1d(S, FFTW_FORWARD);
    fftw_plan pb = detail::PlanCache::instance().get1d(S, FFTW_BACKWARD);
    detail::execute_inplace(pf, a.data());
    for (int s = 0; s < S; ++s) a[s] *= kerfft[s];
    detail::execute_inplace(pb, a.data());
    const double inv = 1.0 / S;
    for (int p = 0; p < P; ++p) {
        long double pp = p;
        out[p] = a[p] * inv * detail::cis_l(delta * pp * pp / 2.0L);
    }
}

/// Evaluate the band-limited interpolant of a physical field at the uniform
/// target lattice x*_p = x0 + p*dx (same targets on every axis), from its
/// normalized spectrum. Targets may be off-grid and finer or coarser than h;
/// evaluation is exact for the trigonometric interpolant.
///
/// Per axis: f(x*) = C Sum_ktilde F_ktilde e^{i x* (2pi ktilde / L)},
/// C = (2pi)^{-1/2} (2pi/L). The spectrum is fftshift-reordered so the
/// frequency index becomes linear in the storage index.
class UniformResampler {
  public:
    UniformResampler(const GridSpec& g, double x0, double dx, int p_out)
        : g_(g), x0_(x0), dx_(dx), p_(p_out) {}

    /// spec: normalized spectrum (storage order). Returns p^d values.
    cvec operator()(const ComplexField& spec) const {
        require_space(spec, Space::spectral, "UniformResampler");
        const int n = g_.n;
        const double C = std::pow(2.0 * M_PI, -0.5) * (2.0 * M_PI / g_.length);
        if (g_.d == 2) {
            cvec mid(static_cast<std::size_t>(n) * p_);
            cvec row_in(n), row_out(p_);
            // axis 1 (contiguous)
            for (int i = 0; i < n; ++i) {
                shift_row(&spec.values[static_cast<std::size_t>(i) * n], n, row_in.data());
                eval_axis(row_in.data(), n, row_out.data());
                for (int p = 0; p < p_; ++p) mid[static_cast<std::size_t>(i) * p_ + p] = C * row_out[p];
            }
            // axis 0 (strided)
            cvec out(static_cast<std::size_t>(p_) * p_);
            cvec col(n), colr(p_);
            for (int p2 = 0; p2 < p_; ++p2) {
                for (int i = 0; i < n; ++i) col[i] = mid[static_cast<std::size_t>(i) * p_ + p2];
                shift_inplace(col);
                eval_axis(col.data(), n, colr.data());
                for (int p1 = 0; p1 < p_; ++p1) out[static_cast<std::size_t>(p1) * p_ + p2] = C * colr[p1];
            }
            return out;
        }
        // d == 3: transform the last axis, then middle, then first.
        const std::size_t n2 = static_cast<std::size_t>(n) * n;
        cvec buf1(n2 * p_);
        {
            cvec row_in(n), row_out(p_);
            for (std::size_t r = 0; r < n2; ++r) {
                shift_row(&spec.values[r * n], n, row_in.data());
                eval_axis(row_in.data(), n, row_out.data());
                for (int p = 0; p < p_; ++p) buf1[r * p_ + p] = C * row_out[p];
            }
        }
        // buf1 indexed [i][j][p3] with j the middle axis
        cvec buf2(static_cast<std::size_t>(n) * p_ * p_);
        {
            cvec col(n), colr(p_);
            for (int i = 0; i < n; ++i)
                for (int p3 = 0; p3 < p_; ++p3) {
                    for (int j = 0; j < n; ++j)
                        col[j] = buf1[(static_cast<std::size_t>(i) * n + j) * p_ + p3];
                    shift_inplace(col);
                    eval_axis(col.data(), n, colr.data());
                    for (int p2 = 0; p2 < p_; ++p2)
                        buf2[(static_cast<std::size_t>(i) * p_ + p2) * p_ + p3] = C * colr[p2];
                }
        }
        cvec out(static_cast<std::size_t>(p_) * p_ * p_);
        {
            cvec col(n), colr(p_);
            for (int p2 = 0; p2 < p_; ++p2)
                for (int p3 = 0; p3 < p_; ++p3) {
                    for (int i = 0; i < n; ++i)
                        col[i] = buf2[(static_cast<std::size_t>(i) * p_ + p2) * p_ + p3];
                    shift_inplace(col);
                    eval_axis(col.data(), n, colr.data());
                    for (int p1 = 0; p1 < p_; ++p1)
                        out[(static_cast<std::size_t>(p1) * p_ + p2) * p_ + p3] = C * colr[p1];
                }
        }
        return out;
    }

  private:
    // reorder storage-order spectrum to ktilde = m - N/2 ascending
    static void shift_row(const cplx* in, int n, cplx* out) {
        const int half = n / 2;
        for (int m = 0; m < n; ++m) {
            int ktilde = m - half;
            int k = ktilde >= 0 ? ktilde : ktilde + n;
            out[m] = in[k];
        }
    }
    static void shift_inplace(cvec& v) {
        cvec tmp(v.size());
        shift_row(v.data(), static_cast<int>(v.size()), tmp.data());
        v.swap(tmp);
    }

    /// row: shifted spectrum; out[p] = Sum_m row[m] e^{i (x0 + p dx) xi(m-N/2)}
    void eval_axis(const cplx* row, int n, cplx* out) const {
        const long double tpL = 2.0L * 3.141592653589793238462643383279L /
                                static_cast<long double>(g_.length);
        const long double phi0 = tpL * x0_;           // coefficient of m
        const long double delta = tpL * dx_;          // coefficient of m*p
        const int half = n / 2;
        czt_core(row, n, p_, phi0, delta, out);
        // account for ktilde = m - N/2: multiply by e^{i (x0 + p dx)(-N/2)(2pi/L)}
        for (int p = 0; p < p_; ++p) {
            long double ang = -static_cast<long double>(half) * (phi0 + delta * p);
            out[p] *= detail::cis_l(ang);
        }
    }

    GridSpec g_;
    double x0_, dx_;
    int p_;
};

/// Semidiscrete forward transform evaluated at off-lattice frequencies:
///   ghat(xi*_p) = (2pi)^{-d/2} h^d Sum_x e^{-i x . xi*} f(x)
/// at the uniform 1D target lattice xi*_p = xi0 + p*dxi used per axis.
/// Returns p^d values. This is the exact quadrature the on-lattice forward
/// transform uses, just at arbitrary evaluation points.
class SpectralEvaluator {
  public:
    SpectralEvaluator(const GridSpec& g, double xi0, double dxi, int p_out)
        : g_(g), xi0_(xi0), dxi_(dxi), p_(p_out) {}

    cvec operator()(const ComplexField& phys) const {
        require_space(phys, Space::physical, "SpectralEvaluator");
        const int n = g_.n;
        const double C = std::pow(2.0 * M_PI, -0.5) * g_.h;
        if (g_.d == 2) {
            cvec mid(static_cast<std::size_t>(n) * p_);
            cvec row_out(p_);
            for (int i = 0; i < n; ++i) {
                eval_axis(&phys.values[static_cast<std::size_t>(i) * n], n, row_out.data());
                for (int p = 0; p < p_; ++p) mid[static_cast<std::size_t>(i) * p_ + p] = C * row_out[p];
            }
            cvec out(static_cast<std::size_t>(p_) * p_);
            cvec col(n), colr(p_);
            for (int p2 = 0; p2 < p_; ++p2) {
                for (int i = 0; i < n; ++i) col[i] = mid[static_cast<std::size_t>(i) * p_ + p2];
                eval_axis(col.data(), n, colr.data());
                for (int p1 = 0; p1 < p_; ++p1) out[static_cast<std::size_t>(p1) * p_ + p2] = C * colr[p1];
            }
            return out;
        }
        const std::size_t n2 = static_cast<std::size_t>(n) * n;
        cvec buf1(n2 * p_);
        {
            cvec row_out(p_);
            for (std::size_t r = 0; r < n2; ++r) {
                eval_axis(&phys.values[r * n], n, row_out.data());
                for (int p = 0; p < p_; ++p) buf1[r * p_ + p] = C * row_out[p];
            }
        }
        cvec buf2(static_cast<std::size_t>(g_.n) * p_ * p_);
        {
            cvec col(n), colr(p_);
            for (int i = 0; i < n; ++i)
                for (int p3 = 0; p3 < p_; ++p3) {
                    for (int j = 0; j < n; ++j)
                        col[j] = buf1[(static_cast<std::size_t>(i) * n + j) * p_ + p3];
                    eval_axis(col.data(), n, colr.data());
                    for (int p2 = 0; p2 < p_; ++p2)
                        buf2[(static_cast<std::size_t>(i) * p_ + p2) * p_ + p3] = C * colr[p2];
                }
        }
        cvec out(static_cast<std::size_t>(p_) * p_ * p_);
        {
            cvec col(n), colr(p_);
            for (int p2 = 0; p2 < p_; ++p2)
                for (int p3 = 0; p3 < p_; ++p3) {
                    for (int i = 0; i < n; ++i)
                        col[i] = buf2[(static_cast<std::size_t>(i) * p_ + p2) * p_ + p3];
                    eval_axis(col.data(), n, colr.data());
                    for (int p1 = 0; p1 < p_; ++p1)
                        out[(static_cast<std::size_t>(p1) * p_ + p2) * p_ + p3] = C * colr[p1];
                }
        }
        return out;
    }

  private:
    /// out[p] = Sum_j row[j] e^{-i x_j (xi0 + p dxi)}, x_j = -L/2 + j h
    void eval_axis(const cplx* row, int n, cplx* out) const {
        const long double h = g_.h;
        const long double phi0 = -h * static_cast<long double>(xi0_);
        const long double delta = -h * static_cast<long double>(dxi_);
        czt_core(row, n, p_, phi0, delta, out);
        const long double halfL = 0.5L * static_cast<long double>(g_.length);
        for (int p = 0; p < p_; ++p) {
            long double ang = halfL * (static_cast<long double>(xi0_) +
                                       static_cast<long double>(dxi_) * p);
            out[p] *= detail::cis_l(ang);
        }
    }

    GridSpec g_;
    double xi0_, dxi_;
    int p_;
};

}  // namespace hartree
