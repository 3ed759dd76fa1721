#include "rasr/kernels.hpp"

#include <cmath>
#include <limits>

namespace rasr::kernels {
namespace {

double dot_scalar(const double* x, const double* w, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += w[i] * x[i];
    return acc;
}

double min_supported_scalar(const double* x, const double* w, size_t n) {
    double m = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i) {
        if (w[i] > 0.0 && x[i] < m) m = x[i];
    }
    return m;
}

double exp_dot_scalar(const double* x, const double* w, size_t n, double a, double shift) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        if (w[i] == 0.0) continue;
        acc += w[i] * std::exp(-a * x[i] - shift);
    }
    return acc;
}

void affine_scalar(double* out, const double* v, size_t n, double scale, double offset) {
    for (size_t i = 0; i < n; ++i) out[i] = offset + scale * v[i];
}

} // namespace

const Backend& scalar_backend() {
    static const Backend backend{
        "scalar", dot_scalar, min_supported_scalar, exp_dot_scalar, affine_scalar};
    return backend;
}

} // namespace rasr::kernels
