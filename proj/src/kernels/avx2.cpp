// AVX2+FMA kernel variant. This TU is compiled with -mavx2 -mfma; callers
// reach it only through the dispatch table after a runtime CPU check.

#include "rasr/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <cmath>
#include <immintrin.h>
#include <limits>

namespace rasr::kernels {
namespace {

// exp for 4 doubles, Cody-Waite reduction + Cephes rational approximation:
//   exp(x) = 2^n * (1 + 2*r*P(r^2) / (Q(r^2) - r*P(r^2))),  x = n*ln2 + r.
// Accurate to ~1 ulp on the reduced range. Saturates: x < -708.39 -> 0,
// x > 709.0 -> +inf (the upper sliver (709.0, 709.78) of finite results is
// given up to keep the 2^n scaling a single exponent add).
inline __m256d exp_pd(__m256d x) {
    const __m256d hi_cut = _mm256_set1_pd(709.0);
    const __m256d lo_cut = _mm256_set1_pd(-708.39641853226410622);

    const __m256d too_big = _mm256_cmp_pd(x, hi_cut, _CMP_GT_OQ);
    const __m256d too_small = _mm256_cmp_pd(x, lo_cut, _CMP_LT_OQ);
    x = _mm256_min_pd(_mm256_max_pd(x, lo_cut), hi_cut);

    const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
    __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);

    const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);
    __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
    r = _mm256_fnmadd_pd(n, ln2_lo, r);

    const __m256d r2 = _mm256_mul_pd(r, r);
    __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
    p = _mm256_fmadd_pd(p, r2, _mm256_set1_pd(3.02994407707441961300e-2));
    p = _mm256_fmadd_pd(p, r2, _mm256_set1_pd(9.99999999999999999910e-1));
    p = _mm256_mul_pd(p, r);

    __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
    q = _mm256_fmadd_pd(q, r2, _mm256_set1_pd(2.52448340349684104192e-3));
    q = _mm256_fmadd_pd(q, r2, _mm256_set1_pd(2.27265548208155028766e-1));
    q = _mm256_fmadd_pd(q, r2, _mm256_set1_pd(2.00000000000000000005e0));

    __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
    e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

    // n is in [-1022, 1023] after the clamp, so 2^n fits a single exponent.
    const __m128i n32 = _mm256_cvtpd_epi32(n);
    const __m256i n64 = _mm256_cvtepi32_epi64(n32);
    const __m256i pow2 =
        _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    e = _mm256_mul_pd(e, _mm256_castsi256_pd(pow2));

    e = _mm256_blendv_pd(e, _mm256_setzero_pd(), too_small);
    e = _mm256_blendv_pd(e, _mm256_set1_pd(std::numeric_limits<double>::infinity()),
                         too_big);
    return e;
}

inline double hsum_pd(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* x, const double* w, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(&w[i]), _mm256_loadu_pd(&x[i]), acc);
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += w[i] * x[i];
    return hsum_pd(acc) + tail;
}

double min_supported_avx2(const double* x, const double* w, size_t n) {
    const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    __m256d best = inf;
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d wv = _mm256_loadu_pd(&w[i]);
        const __m256d xv = _mm256_loadu_pd(&x[i]);
        const __m256d mask = _mm256_cmp_pd(wv, _mm256_setzero_pd(), _CMP_GT_OQ);
        best = _mm256_min_pd(best, _mm256_blendv_pd(inf, xv, mask));
    }
    double m = std::numeric_limits<double>::infinity();
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, best);
    for (double lane : lanes) {
        if (lane < m) m = lane;
    }
    for (; i < n; ++i) {
        if (w[i] > 0.0 && x[i] < m) m = x[i];
    }
    return m;
}

double exp_dot_avx2(const double* x, const double* w, size_t n, double a, double shift) {
    const __m256d av = _mm256_set1_pd(a);
    const __m256d neg_shift = _mm256_set1_pd(-shift);
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d wv = _mm256_loadu_pd(&w[i]);
        const __m256d xv = _mm256_loadu_pd(&x[i]);
        __m256d arg = _mm256_fnmadd_pd(av, xv, neg_shift);
        // Zero the exponent on unsupported lanes so 0-weight entries cannot
        // produce inf*0.
        const __m256d mask = _mm256_cmp_pd(wv, _mm256_setzero_pd(), _CMP_GT_OQ);
        arg = _mm256_and_pd(arg, mask);
        acc = _mm256_fmadd_pd(wv, exp_pd(arg), acc);
    }
    double tail = 0.0;
    for (; i < n; ++i) {
        if (w[i] == 0.0) continue;
        tail += w[i] * std::exp(-a * x[i] - shift);
    }
    return hsum_pd(acc) + tail;
}

void affine_avx2(double* out, const double* v, size_t n, double scale, double offset) {
    const __m256d sv = _mm256_set1_pd(scale);
    const __m256d ov = _mm256_set1_pd(offset);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(&out[i], _mm256_fmadd_pd(sv, _mm256_loadu_pd(&v[i]), ov));
    }
    for (; i < n; ++i) out[i] = offset + scale * v[i];
}

const Backend avx2{"avx2", dot_avx2, min_supported_avx2, exp_dot_avx2, affine_avx2};

} // namespace

const Backend* avx2_backend_impl() { return &avx2; }

} // namespace rasr::kernels

#else

namespace rasr::kernels {
const Backend* avx2_backend_impl() { return nullptr; }
} // namespace rasr::kernels

#endif
