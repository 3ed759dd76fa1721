#include "rasr/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace rasr::kernels {

// Defined in the ISA TUs when they are part of the build.
const Backend* avx2_backend_impl();
const Backend* neon_backend_impl();

#if !defined(RASR_HAVE_AVX2_TU)
const Backend* avx2_backend_impl() { return nullptr; }
#endif
#if !defined(RASR_HAVE_NEON_TU)
const Backend* neon_backend_impl() { return nullptr; }
#endif

const Backend* avx2_backend() {
#if defined(__x86_64__) || defined(__i386__)
    if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return nullptr;
#endif
    return avx2_backend_impl();
}

const Backend* neon_backend() { return neon_backend_impl(); }

namespace {

const Backend* probe() {
    if (const Backend* b = avx2_backend()) return b;
    if (const Backend* b = neon_backend()) return b;
    return &scalar_backend();
}

const Backend* lookup(std::string_view name) {
    if (name == "auto") return probe();
    if (name == "scalar") return &scalar_backend();
    if (name == "avx2") return avx2_backend();
    if (name == "neon") return neon_backend();
    return nullptr;
}

const Backend* initial_backend() {
    if (const char* env = std::getenv("RASR_SIMD")) {
        if (const Backend* b = lookup(env)) return b;
    }
    return probe();
}

std::atomic<const Backend*>& selected() {
    static std::atomic<const Backend*> backend{initial_backend()};
    return backend;
}

} // namespace

const Backend& active() { return *selected().load(std::memory_order_acquire); }

bool force_backend(std::string_view name) {
    const Backend* b = lookup(name);
    if (b == nullptr) return false;
    selected().store(b, std::memory_order_release);
    return true;
}

} // namespace rasr::kernels
