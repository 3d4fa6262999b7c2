#include "cfreq/kernels.hpp"

#include <cmath>

namespace cfreq::simd {
namespace {

constexpr double kSqrt2_3 = 0.81649658092772603273;  // sqrt(2/3)
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kSqrt3_2 = 0.86602540378443864676;  // sqrt(3)/2

void injection_row(double eh, double fh, const double* g_row, const double* b_row,
                   const double* e, const double* f, double* p_out, double* q_out,
                   std::size_t n)
{
    for (std::size_t k = 0; k < n; ++k) {
        // Y_hk v_k
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
        double acc_r = 0.0;
        double acc_i = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            acc_r += row_r[c] * xr[c] - row_i[c] * xi[c];
            acc_i += row_r[c] * xi[c] + row_i[c] * xr[c];
        }
        yr[r] = acc_r;
        yi[r] = acc_i;
    }
}

void park_forward(const double* a, const double* b, const double* c, const double* cos_t,
                  const double* sin_t, double* d, double* q, double* o, std::size_t count)
{
    for (std::size_t i = 0; i < count; ++i) {
        const double ct = cos_t[i];
        const double st = sin_t[i];
        // theta - 2pi/3 and theta + 2pi/3
        const double c1 = -0.5 * ct + kSqrt3_2 * st;
        const double s1 = -0.5 * st - kSqrt3_2 * ct;
        const double c2 = -0.5 * ct - kSqrt3_2 * st;
        const double s2 = -0.5 * st + kSqrt3_2 * ct;
        d[i] = kSqrt2_3 * (ct * a[i] + c1 * b[i] + c2 * c[i]);
        q[i] = kSqrt2_3 * (st * a[i] + s1 * b[i] + s2 * c[i]);
        o[i] = kSqrt2_3 * kInvSqrt2 * (a[i] + b[i] + c[i]);
    }
}

void park_inverse(const double* d, const double* q, const double* o, const double* cos_t,
                  const double* sin_t, double* a, double* b, double* c, std::size_t count)
{
    for (std::size_t i = 0; i < count; ++i) {
        const double ct = cos_t[i];
        const double st = sin_t[i];
        const double c1 = -0.5 * ct + kSqrt3_2 * st;
        const double s1 = -0.5 * st - kSqrt3_2 * ct;
        const double c2 = -0.5 * ct - kSqrt3_2 * st;
        const double s2 = -0.5 * st + kSqrt3_2 * ct;
        const double zero = kInvSqrt2 * o[i];
        a[i] = kSqrt2_3 * (ct * d[i] + st * q[i] + zero);
        b[i] = kSqrt2_3 * (c1 * d[i] + s1 * q[i] + zero);
        c[i] = kSqrt2_3 * (c2 * d[i] + s2 * q[i] + zero);
    }
}

}  // namespace

namespace detail {
const KernelTable scalar_table{Isa::scalar, injection_row, complex_matvec, park_forward,
                               park_inverse};
}

}  // namespace cfreq::simd
