#include "ifcps/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace ifcps::kern {

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

const Backend& resolve() {
    if (const char* forced = std::getenv("IFCPS_KERNELS")) {
        if (std::strcmp(forced, "scalar") == 0) return scalar_backend();
        if (std::strcmp(forced, "avx2") == 0 && avx2_available()) return avx2_backend();
    }
    return avx2_available() ? avx2_backend() : scalar_backend();
}

} // namespace

const Backend& active() {
    static const Backend& backend = resolve();
    return backend;
}

} // namespace ifcps::kern
