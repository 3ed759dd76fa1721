// NEON (aarch64) kernel variant; mirrors the AVX2 TU two lanes at a time.

#include "rasr/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>
#include <cmath>
#include <limits>

namespace rasr::kernels {
namespace {

// Same reduction and rational approximation as the AVX2 variant.
inline float64x2_t exp_f64(float64x2_t x) {
    const float64x2_t hi_cut = vdupq_n_f64(709.0);
    const float64x2_t lo_cut = vdupq_n_f64(-708.39641853226410622);

    const uint64x2_t too_big = vcgtq_f64(x, hi_cut);
    const uint64x2_t too_small = vcltq_f64(x, lo_cut);
    x = vminq_f64(vmaxq_f64(x, lo_cut), hi_cut);

    const float64x2_t log2e = vdupq_n_f64(1.4426950408889634074);
    float64x2_t n = vrndnq_f64(vmulq_f64(x, log2e));

    const float64x2_t ln2_hi = vdupq_n_f64(6.93145751953125e-1);
    const float64x2_t ln2_lo = vdupq_n_f64(1.42860682030941723212e-6);
    float64x2_t r = vfmsq_f64(x, n, ln2_hi);
    r = vfmsq_f64(r, n, ln2_lo);

    const float64x2_t r2 = vmulq_f64(r, r);
    float64x2_t p = vdupq_n_f64(1.26177193074810590878e-4);
    p = vfmaq_f64(vdupq_n_f64(3.02994407707441961300e-2), p, r2);
    p = vfmaq_f64(vdupq_n_f64(9.99999999999999999910e-1), p, r2);
    p = vmulq_f64(p, r);

    float64x2_t q = vdupq_n_f64(3.00198505138664455042e-6);
    q = vfmaq_f64(vdupq_n_f64(2.52448340349684104192e-3), q, r2);
    q = vfmaq_f64(vdupq_n_f64(2.27265548208155028766e-1), q, r2);
    q = vfmaq_f64(vdupq_n_f64(2.00000000000000000005e0), q, r2);

    float64x2_t e = vdivq_f64(p, vsubq_f64(q, p));
    e = vfmaq_f64(vdupq_n_f64(1.0), e, vdupq_n_f64(2.0));

    // n is integral after vrndnq, so the s64 conversion is exact.
    const int64x2_t n64 = vcvtq_s64_f64(n);
    const int64x2_t pow2 = vshlq_n_s64(vaddq_s64(n64, vdupq_n_s64(1023)), 52);
    e = vmulq_f64(e, vreinterpretq_f64_s64(pow2));

    e = vbslq_f64(too_small, vdupq_n_f64(0.0), e);
    e = vbslq_f64(too_big, vdupq_n_f64(std::numeric_limits<double>::infinity()), e);
    return e;
}

double dot_neon(const double* x, const double* w, size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc = vfmaq_f64(acc, vld1q_f64(&w[i]), vld1q_f64(&x[i]));
    }
    double sum = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; ++i) sum += w[i] * x[i];
    return sum;
}

double min_supported_neon(const double* x, const double* w, size_t n) {
    const float64x2_t inf = vdupq_n_f64(std::numeric_limits<double>::infinity());
    float64x2_t best = inf;
    size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t wv = vld1q_f64(&w[i]);
        const float64x2_t xv = vld1q_f64(&x[i]);
        const uint64x2_t mask = vcgtq_f64(wv, vdupq_n_f64(0.0));
        best = vminq_f64(best, vbslq_f64(mask, xv, inf));
    }
    double m = vgetq_lane_f64(best, 0);
    const double lane1 = vgetq_lane_f64(best, 1);
    if (lane1 < m) m = lane1;
    for (; i < n; ++i) {
        if (w[i] > 0.0 && x[i] < m) m = x[i];
    }
    return m;
}

double exp_dot_neon(const double* x, const double* w, size_t n, double a, double shift) {
    const float64x2_t av = vdupq_n_f64(a);
    const float64x2_t neg_shift = vdupq_n_f64(-shift);
    float64x2_t acc = vdupq_n_f64(0.0);
    size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t wv = vld1q_f64(&w[i]);
        const float64x2_t xv = vld1q_f64(&x[i]);
        float64x2_t arg = vfmsq_f64(neg_shift, av, xv);
        const uint64x2_t mask = vcgtq_f64(wv, vdupq_n_f64(0.0));
        arg = vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(arg), mask));
        acc = vfmaq_f64(acc, wv, exp_f64(arg));
    }
    double sum = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; ++i) {
        if (w[i] == 0.0) continue;
        sum += w[i] * std::exp(-a * x[i] - shift);
    }
    return sum;
}

void affine_neon(double* out, const double* v, size_t n, double scale, double offset) {
    const float64x2_t sv = vdupq_n_f64(scale);
    const float64x2_t ov = vdupq_n_f64(offset);
    size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(&out[i], vfmaq_f64(ov, sv, vld1q_f64(&v[i])));
    }
    for (; i < n; ++i) out[i] = offset + scale * v[i];
}

const Backend neon{"neon", dot_neon, min_supported_neon, exp_dot_neon, affine_neon};

} // namespace

const Backend* neon_backend_impl() { return &neon; }

} // namespace rasr::kernels

#else

namespace rasr::kernels {
const Backend* neon_backend_impl() { return nullptr; }
} // namespace rasr::kernels

#endif
