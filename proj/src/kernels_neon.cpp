// aarch64 only. Two doubles per lane group.
#include "cfreq/kernels.hpp"

#include <arm_neon.h>

namespace cfreq::simd {
namespace {

constexpr double kSqrt2_3 = 0.81649658092772603273;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kSqrt3_2 = 0.86602540378443864676;

void injection_row(double eh, double fh, const double* g_row, const double* b_row,
                   const double* e, const double* f, double* p_out, double* q_out,
                   std::size_t n)
{
    const float64x2_t veh = vdupq_n_f64(eh);
    const float64x2_t vfh = vdupq_n_f64(fh);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        const float64x2_t g = vld1q_f64(g_row + k);
        const float64x2_t b = vld1q_f64(b_row + k);
        const float64x2_t ek = vld1q_f64(e + k);
        const float64x2_t fk = vld1q_f64(f + k);
        const float64x2_t ar = vfmsq_f64(vmulq_f64(g, ek), b, fk);
        const float64x2_t ai = vfmaq_f64(vmulq_f64(g, fk), b, ek);
        vst1q_f64(p_out + k, vfmaq_f64(vmulq_f64(veh, ar), vfh, ai));
        vst1q_f64(q_out + k, vfmsq_f64(vmulq_f64(vfh, ar), veh, ai));
    }
    if (k < n) {
        detail::scalar_table.injection_row(eh, fh, g_row + k, b_row + k, e + k, f + k, p_out + k,
                                           q_out + k, n - k);
    }
}

void complex_matvec(const double* mr, const double* mi, const double* xr, const double* xi,
                    double* yr, double* yi, std::size_t rows, std::size_t cols)
{
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row_r = mr + r * cols;
        const double* row_i = mi + r * cols;
        float64x2_t acc_r = vdupq_n_f64(0.0);
        float64x2_t acc_i = vdupq_n_f64(0.0);
        std::size_t c = 0;
        for (; c + 2 <= cols; c += 2) {
            const float64x2_t m_r = vld1q_f64(row_r + c);
            const float64x2_t m_i = vld1q_f64(row_i + c);
            const float64x2_t x_r = vld1q_f64(xr + c);
            const float64x2_t x_i = vld1q_f64(xi + c);
            acc_r = vfmaq_f64(acc_r, m_r, x_r);
            acc_r = vfmsq_f64(acc_r, m_i, x_i);
            acc_i = vfmaq_f64(acc_i, m_r, x_i);
            acc_i = vfmaq_f64(acc_i, m_i, x_r);
        }
        double sr = vaddvq_f64(acc_r);
        double si = vaddvq_f64(acc_i);
        for (; c < cols; ++c) {
            sr += row_r[c] * xr[c] - row_i[c] * xi[c];
            si += row_r[c] * xi[c] + row_i[c] * xr[c];
        }
        yr[r] = sr;
        yi[r] = si;
    }
}

void park_forward(const double* a, const double* b, const double* c, const double* cos_t,
                  const double* sin_t, double* d, double* q, double* o, std::size_t count)
{
    const float64x2_t half = vdupq_n_f64(-0.5);
    const float64x2_t r3 = vdupq_n_f64(kSqrt3_2);
    std::size_t i = 0;
    for (; i + 2 <= count; i += 2) {
        const float64x2_t ct = vld1q_f64(cos_t + i);
        const float64x2_t st = vld1q_f64(sin_t + i);
        const float64x2_t c1 = vfmaq_f64(vmulq_f64(half, ct), r3, st);
        const float64x2_t s1 = vfmsq_f64(vmulq_f64(half, st), r3, ct);
        const float64x2_t c2 = vfmsq_f64(vmulq_f64(half, ct), r3, st);
        const float64x2_t s2 = vfmaq_f64(vmulq_f64(half, st), r3, ct);
        const float64x2_t va = vld1q_f64(a + i);
        const float64x2_t vb = vld1q_f64(b + i);
        const float64x2_t vc = vld1q_f64(c + i);
        const float64x2_t vd = vfmaq_f64(vfmaq_f64(vmulq_f64(ct, va), c1, vb), c2, vc);
        const float64x2_t vq = vfmaq_f64(vfmaq_f64(vmulq_f64(st, va), s1, vb), s2, vc);
        vst1q_f64(d + i, vmulq_n_f64(vd, kSqrt2_3));
        vst1q_f64(q + i, vmulq_n_f64(vq, kSqrt2_3));
        vst1q_f64(o + i, vmulq_n_f64(vaddq_f64(vaddq_f64(va, vb), vc), kSqrt2_3 * kInvSqrt2));
    }
    if (i < count) {
        detail::scalar_table.park_forward(a + i, b + i, c + i, cos_t + i, sin_t + i, d + i, q + i,
                                          o + i, count - i);
    }
}

void park_inverse(const double* d, const double* q, const double* o, const double* cos_t,
                  const double* sin_t, double* a, double* b, double* c, std::size_t count)
{
    const float64x2_t half = vdupq_n_f64(-0.5);
    const float64x2_t r3 = vdupq_n_f64(kSqrt3_2);
    std::size_t i = 0;
    for (; i + 2 <= count; i += 2) {
        const float64x2_t ct = vld1q_f64(cos_t + i);
        const float64x2_t st = vld1q_f64(sin_t + i);
        const float64x2_t c1 = vfmaq_f64(vmulq_f64(half, ct), r3, st);
        const float64x2_t s1 = vfmsq_f64(vmulq_f64(half, st), r3, ct);
        const float64x2_t c2 = vfmsq_f64(vmulq_f64(half, ct), r3, st);
        const float64x2_t s2 = vfmaq_f64(vmulq_f64(half, st), r3, ct);
        const float64x2_t vd = vld1q_f64(d + i);
        const float64x2_t vq = vld1q_f64(q + i);
        const float64x2_t zero = vmulq_n_f64(vld1q_f64(o + i), kInvSqrt2);
        vst1q_f64(a + i, vmulq_n_f64(vfmaq_f64(vfmaq_f64(zero, st, vq), ct, vd), kSqrt2_3));
        vst1q_f64(b + i, vmulq_n_f64(vfmaq_f64(vfmaq_f64(zero, s1, vq), c1, vd), kSqrt2_3));
        vst1q_f64(c + i, vmulq_n_f64(vfmaq_f64(vfmaq_f64(zero, s2, vq), c2, vd), kSqrt2_3));
    }
    if (i < count) {
        detail::scalar_table.park_inverse(d + i, q + i, o + i, cos_t + i, sin_t + i, a + i, b + i,
                                          c + i, count - i);
    }
}

}  // namespace

namespace detail {
const KernelTable neon_table{Isa::neon, injection_row, complex_matvec, park_forward,
                             park_inverse};
}

}  // namespace cfreq::simd
