#include "cfreq/errors.hpp"
#include "cfreq/kernels.hpp"

#include <cstdlib>
#include <string>

namespace cfreq::simd {

std::string_view isa_name(Isa isa)
{
    switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
    }
    return "unknown";
}

bool isa_available(Isa isa)
{
    switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(CFREQ_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    case Isa::neon:
#if defined(CFREQ_HAVE_NEON)
        return true;
#else
        return false;
#endif
    }
    return false;
}

const KernelTable& kernels(Isa isa)
{
    if (!isa_available(isa)) {
        throw Error("kernel variant '" + std::string(isa_name(isa)) + "' is not available");
    }
    switch (isa) {
#if defined(CFREQ_HAVE_AVX2)
    case Isa::avx2: return detail::avx2_table;
#endif
#if defined(CFREQ_HAVE_NEON)
    case Isa::neon: return detail::neon_table;
#endif
    default: return detail::scalar_table;
    }
}

std::vector<Isa> available_isas()
{
    std::vector<Isa> out;
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
        if (isa_available(isa)) {
            out.push_back(isa);
        }
    }
    return out;
}

namespace {

const KernelTable& select()
{
    if (const char* forced = std::getenv("CFREQ_SIMD")) {
        const std::string_view want(forced);
        for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
            if (want == isa_name(isa)) {
                return kernels(isa);
            }
        }
        throw Error("CFREQ_SIMD='" + std::string(want) + "' names no kernel variant");
    }
    if (isa_available(Isa::avx2)) {
        return kernels(Isa::avx2);
    }
    if (isa_available(Isa::neon)) {
        return kernels(Isa::neon);
    }
    return detail::scalar_table;
}

}  // namespace

const KernelTable& active_kernels()
{
    static const KernelTable& table = select();
    return table;
}

}  // namespace cfreq::simd
