#pragma once

#include <cstddef>
#include <string_view>

namespace rasr::kernels {

/// One set of array kernels. All variants implement the same contracts:
///
///   dot(x, w, n)                 -> sum_i w[i]*x[i]
///   min_supported(x, w, n)      -> min { x[i] : w[i] > 0 }, +inf when the
///                                   support is empty
///   exp_dot(x, w, n, a, shift)  -> sum_{i : w[i] > 0} w[i]*exp(-a*x[i] - shift);
///                                   entries with w[i] == 0 contribute exactly 0
///                                   even when the exponent would overflow
///   affine(out, v, n, s, o)     -> out[i] = o + s*v[i]
///
/// Inputs must be finite and w elementwise nonnegative. A given variant is
/// bit-deterministic: the same inputs always produce the same outputs.
/// Different variants may differ by small rounding (different summation
/// order, polynomial exp); the equivalence test suite pins the gap.
struct Backend {
    const char* name;
    double (*dot)(const double* x, const double* w, size_t n);
    double (*min_supported)(const double* x, const double* w, size_t n);
    double (*exp_dot)(const double* x, const double* w, size_t n, double a, double shift);
    void (*affine)(double* out, const double* v, size_t n, double scale, double offset);
};

/// Portable reference implementation (plain loops over std::exp).
const Backend& scalar_backend();

/// ISA variants; nullptr when not compiled in or not supported by this CPU.
const Backend* avx2_backend();
const Backend* neon_backend();

/// The variant used by the library. Chosen once at first use: the RASR_SIMD
/// environment variable ("scalar", "avx2", "neon", "auto") wins, otherwise
/// the best variant this CPU supports.
const Backend& active();

/// Force a backend by name; "auto" re-probes. Returns false (and leaves the
/// selection unchanged) when the name is unknown or unavailable here.
bool force_backend(std::string_view name);

} // namespace rasr::kernels
