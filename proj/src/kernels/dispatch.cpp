#include "wdt/kernels.hpp"

#include <cstdlib>
#include <cstring>

#if defined(__x86_64__) || defined(_M_X64)
#include <cpuid.h>
#endif

namespace wdt::kernels {

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
    unsigned eax, ebx, ecx, edx;
    if (!__get_cpuid_count(7, 0, &eax, &ebx, &ecx, &edx)) return false;
    const bool avx2 = (ebx & (1u << 5)) != 0;
    if (!__get_cpuid(1, &eax, &ebx, &ecx, &edx)) return false;
    const bool fma = (ecx & (1u << 12)) != 0;
    const bool osxsave = (ecx & (1u << 27)) != 0;
    if (!(avx2 && fma && osxsave)) return false;
    // OS must preserve ymm state
    const unsigned long long xcr0 =
        static_cast<unsigned long long>(_xgetbv(0));
    return (xcr0 & 0x6) == 0x6;
#else
    return false;
#endif
}

namespace {

const Ops* resolve() {
    if (const char* force = std::getenv("WDT_KERNEL_ISA")) {
        if (std::strcmp(force, "scalar") == 0) return &scalar_ops();
#if defined(__x86_64__) || defined(_M_X64)
        if (std::strcmp(force, "avx2") == 0 && avx2_available()) return &avx2_ops();
#endif
    }
#if defined(__x86_64__) || defined(_M_X64)
    if (avx2_available()) return &avx2_ops();
#endif
    return &scalar_ops();
}

}  // namespace

const Ops& ops() {
    static const Ops* active = resolve();
    return *active;
}

}  // namespace wdt::kernels
