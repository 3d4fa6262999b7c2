#pragma once

// Data-parallel inner loops used by the network and signal code.
//
// Every kernel has a scalar reference implementation plus optional AVX2+FMA
// (x86-64) and NEON (aarch64) variants. The variant is picked once at first
// use from the CPU features, and can be forced through the CFREQ_SIMD
// environment variable ("scalar", "avx2", "neon"). All variants must agree
// with the scalar path to rounding; tests/test_kernels.cpp checks that.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace cfreq::simd {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
    Isa isa;

    // s_hk = v_h (Y_hk v_k)^* for one row h, all k. Voltages are rectangular
    // (e + j f); g_row / b_row are row h of G and B.
    void (*injection_row)(double eh, double fh, const double* g_row, const double* b_row,
                          const double* e, const double* f, double* p_out, double* q_out,
                          std::size_t n);

    // y = M x for a complex row-major matrix stored as separate real/imag planes.
    void (*complex_matvec)(const double* mr, const double* mi, const double* xr,
                           const double* xi, double* yr, double* yi, std::size_t rows,
                           std::size_t cols);

    // Power-invariant abc -> dq0 for `count` samples, each with its own frame angle
    // given as cos/sin.
    void (*park_forward)(const double* a, const double* b, const double* c, const double* cos_t,
                         const double* sin_t, double* d, double* q, double* o, std::size_t count);

    // dq0 -> abc, the transpose of park_forward.
    void (*park_inverse)(const double* d, const double* q, const double* o, const double* cos_t,
                         const double* sin_t, double* a, double* b, double* c, std::size_t count);
};

std::string_view isa_name(Isa isa);

/// True when the variant was compiled in and the running CPU supports it.
bool isa_available(Isa isa);

/// Kernel table for a specific ISA. Throws cfreq::Error if unavailable.
const KernelTable& kernels(Isa isa);

/// Kernel table selected for this process.
const KernelTable& active_kernels();

std::vector<Isa> available_isas();

namespace detail {
extern const KernelTable scalar_table;
#if defined(CFREQ_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
#if defined(CFREQ_HAVE_NEON)
extern const KernelTable neon_table;
#endif
}  // namespace detail

}  // namespace cfreq::simd
