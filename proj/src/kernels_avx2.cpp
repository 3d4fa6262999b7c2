// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "cfreq/kernels.hpp"

#include <immintrin.h>

namespace cfreq::simd {
namespace {

constexpr double kSqrt2_3 = 0.81649658092772603273;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kSqrt3_2 = 0.86602540378443864676;

inline double hsum(__m256d v)
{
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void injection_row(double eh, double fh, const double* g_row, const double* b_row,
                   const double* e, const double* f, double* p_out, double* q_out,
                   std::size_t n)
{
    const __m256d veh = _mm256_set1_pd(eh);
    const __m256d vfh = _mm256_set1_pd(fh);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d g = _mm256_loadu_pd(g_row + k);
        const __m256d b = _mm256_loadu_pd(b_row + k);
        const __m256d ek = _mm256_loadu_pd(e + k);
        const __m256d fk = _mm256_loadu_pd(f + k);
        const __m256d ar = _mm256_fmsub_pd(g, ek, _mm256_mul_pd(b, fk));
        const __m256d ai = _mm256_fmadd_pd(g, fk, _mm256_mul_pd(b, ek));
        _mm256_storeu_pd(p_out + k, _mm256_fmadd_pd(veh, ar, _mm256_mul_pd(vfh, ai)));
        _mm256_storeu_pd(q_out + k, _mm256_fmsub_pd(vfh, ar, _mm256_mul_pd(veh, ai)));
    }
    for (; k < n; ++k) {
        const double ar = g_row[k] * e[k] - b_row[k] * f[k];
        const double ai = g_row[k] * f[k] + b_row[k] * e[k];
        p_out[k] = eh * ar + fh * ai;
        q_out[k] = fh * ar - eh * ai;
    }
}

void complex_matvec(const double* mr, const double* mi, const double* xr, const double* xi,
                    double* yr, double* yi, std::size_t rows, std::size_t cols)
{
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row_r = mr + r * cols;
        const double* row_i = mi + r * cols;
        __m256d acc_r = _mm256_setzero_pd();
        __m256d acc_i = _mm256_setzero_pd();
        std::size_t c = 0;
        for (; c + 4 <= cols; c += 4) {
            const __m256d m_r = _mm256_loadu_pd(row_r + c);
            const __m256d m_i = _mm256_loadu_pd(row_i + c);
            const __m256d x_r = _mm256_loadu_pd(xr + c);
            const __m256d x_i = _mm256_loadu_pd(xi + c);
            acc_r = _mm256_fmadd_pd(m_r, x_r, acc_r);
            acc_r = _mm256_fnmadd_pd(m_i, x_i, acc_r);
            acc_i = _mm256_fmadd_pd(m_r, x_i, acc_i);
            acc_i = _mm256_fmadd_pd(m_i, x_r, acc_i);
        }
        double sr = hsum(acc_r);
        double si = hsum(acc_i);
        for (; c < cols; ++c) {
            sr += row_r[c] * xr[c] - row_i[c] * xi[c];
            si += row_r[c] * xi[c] + row_i[c] * xr[c];
        }
        yr[r] = sr;
        yi[r] = si;
    }
}

struct Rotations {
    __m256d c1, s1, c2, s2;
};

inline Rotations shifted(__m256d ct, __m256d st)
{
    const __m256d half = _mm256_set1_pd(-0.5);
    const __m256d r3 = _mm256_set1_pd(kSqrt3_2);
    return {_mm256_fmadd_pd(half, ct, _mm256_mul_pd(r3, st)),
            _mm256_fnmadd_pd(r3, ct, _mm256_mul_pd(half, st)),
            _mm256_fnmadd_pd(r3, st, _mm256_mul_pd(half, ct)),
            _mm256_fmadd_pd(r3, ct, _mm256_mul_pd(half, st))};
}

void park_forward(const double* a, const double* b, const double* c, const double* cos_t,
                  const double* sin_t, double* d, double* q, double* o, std::size_t count)
{
    const __m256d k = _mm256_set1_pd(kSqrt2_3);
    const __m256d k0 = _mm256_set1_pd(kSqrt2_3 * kInvSqrt2);
    std::size_t i = 0;
    for (; i + 4 <= count; i += 4) {
        const __m256d ct = _mm256_loadu_pd(cos_t + i);
        const __m256d st = _mm256_loadu_pd(sin_t + i);
        const Rotations rot = shifted(ct, st);
        const __m256d va = _mm256_loadu_pd(a + i);
        const __m256d vb = _mm256_loadu_pd(b + i);
        const __m256d vc = _mm256_loadu_pd(c + i);
        __m256d vd = _mm256_fmadd_pd(rot.c2, vc, _mm256_fmadd_pd(rot.c1, vb, _mm256_mul_pd(ct, va)));
        __m256d vq = _mm256_fmadd_pd(rot.s2, vc, _mm256_fmadd_pd(rot.s1, vb, _mm256_mul_pd(st, va)));
        _mm256_storeu_pd(d + i, _mm256_mul_pd(k, vd));
        _mm256_storeu_pd(q + i, _mm256_mul_pd(k, vq));
        _mm256_storeu_pd(o + i, _mm256_mul_pd(k0, _mm256_add_pd(_mm256_add_pd(va, vb), vc)));
    }
    if (i < count) {
        detail::scalar_table.park_forward(a + i, b + i, c + i, cos_t + i, sin_t + i, d + i, q + i,
                                          o + i, count - i);
    }
}

void park_inverse(const double* d, const double* q, const double* o, const double* cos_t,
                  const double* sin_t, double* a, double* b, double* c, std::size_t count)
{
    const __m256d k = _mm256_set1_pd(kSqrt2_3);
    const __m256d k0 = _mm256_set1_pd(kInvSqrt2);
    std::size_t i = 0;
    for (; i + 4 <= count; i += 4) {
        const __m256d ct = _mm256_loadu_pd(cos_t + i);
        const __m256d st = _mm256_loadu_pd(sin_t + i);
        const Rotations rot = shifted(ct, st);
        const __m256d vd = _mm256_loadu_pd(d + i);
        const __m256d vq = _mm256_loadu_pd(q + i);
        const __m256d zero = _mm256_mul_pd(k0, _mm256_loadu_pd(o + i));
        _mm256_storeu_pd(a + i, _mm256_mul_pd(k, _mm256_fmadd_pd(ct, vd, _mm256_fmadd_pd(st, vq, zero))));
        _mm256_storeu_pd(b + i, _mm256_mul_pd(k, _mm256_fmadd_pd(rot.c1, vd, _mm256_fmadd_pd(rot.s1, vq, zero))));
        _mm256_storeu_pd(c + i, _mm256_mul_pd(k, _mm256_fmadd_pd(rot.c2, vd, _mm256_fmadd_pd(rot.s2, vq, zero))));
    }
    if (i < count) {
        detail::scalar_table.park_inverse(d + i, q + i, o + i, cos_t + i, sin_t + i, a + i, b + i,
                                          c + i, count - i);
    }
}

}  // namespace

namespace detail {
const KernelTable avx2_table{Isa::avx2, injection_row, complex_matvec, park_forward,
                             park_inverse};
}

}  // namespace cfreq::simd
