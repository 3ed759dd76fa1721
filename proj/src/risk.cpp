#include "rasr/risk.hpp"

#include "rasr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rasr {

RiskLevel RiskLevel::infinity() {
    return RiskLevel(std::numeric_limits<Real>::infinity());
}

RiskLevel RiskLevel::of(Real value) {
    if (std::isnan(value) || value < 0.0) {
        throw DomainError("risk level must be nonnegative, got " + std::to_string(value));
    }
    return RiskLevel(value);
}

bool RiskLevel::is_infinite() const { return std::isinf(value_); }

ConfidenceLevel ConfidenceLevel::of(Real beta) {
    if (!(beta >= 0.0 && beta < 1.0)) {
        throw DomainError("confidence level must lie in [0, 1), got " +
                          std::to_string(beta));
    }
    return ConfidenceLevel(beta);
}

Real erm_weighted(const Real* outcomes, const Real* probabilities, size_t n,
                  RiskLevel alpha) {
    const kernels::Backend& k = kernels::active();
    if (alpha.is_infinite()) {
        return k.min_supported(outcomes, probabilities, n);
    }
    const Real a = alpha.value();
    if (a == 0.0) {
        return k.dot(outcomes, probabilities, n);
    }
    const Real lo = k.min_supported(outcomes, probabilities, n);
    Real hi = -std::numeric_limits<Real>::infinity();
    for (size_t i = 0; i < n; ++i) {
        if (probabilities[i] > 0.0 && outcomes[i] > hi) hi = outcomes[i];
    }
    if (a * (hi - lo) < kTinyAlphaSpan) {
        return k.dot(outcomes, probabilities, n);
    }
    // Shift by max_i(-a*x_i) = -a*lo; the summand at the supported minimum is
    // exactly 1, so the sum stays in [p_min, 1] and log never sees 0.
    const Real shift = -a * lo;
    const Real sum = k.exp_dot(outcomes, probabilities, n, a, shift);
    return -(shift + std::log(sum)) / a;
}

Real erm(const DiscreteDistribution& dist, RiskLevel alpha) {
    return erm_weighted(dist.outcomes().data(), dist.probabilities().data(), dist.size(),
                        alpha);
}

namespace {

/// h(zeta) = ERM^{1/zeta}[X] + zeta*log(1-beta), continuously extended to
/// zeta = 0 by the essential infimum.
struct EvarObjective {
    const DiscreteDistribution& dist;
    Real log1mbeta;
    Real ess_inf;

    Real operator()(Real zeta) const {
        if (zeta <= 0.0) return ess_inf;
        return erm(dist, RiskLevel::of(1.0 / zeta)) + zeta * log1mbeta;
    }
};

} // namespace

EvarResult evar(const DiscreteDistribution& dist, ConfidenceLevel beta) {
    if (beta.beta() == 0.0) {
        return {dist.mean(), RiskLevel::zero()};
    }
    const Real span = dist.span();
    if (span <= 0.0) {
        // Constant outcome: the supremum is approached as alpha -> inf.
        return {dist.min_supported(), RiskLevel::infinity()};
    }
    const EvarObjective f{dist, std::log1p(-beta.beta()), dist.min_supported()};

    // Upper end: the alpha below which ERM is within ~1e-12*max(1,span) of
    // the mean (Hoeffding gap), where the objective is already decreasing.
    const Real mean_tol = 1e-12 * std::max(Real(1), span);
    const Real zeta_hi = span * span / (8.0 * mean_tol);
    constexpr Real kZetaTol = 1e-10;
    constexpr Real kInvPhi = 0.6180339887498949;

    Real a = 0.0, b = zeta_hi;
    Real c = b - kInvPhi * (b - a);
    Real d = a + kInvPhi * (b - a);
    Real fc = f(c), fd = f(d);
    while (b - a > kZetaTol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    const Real zeta_star = 0.5 * (a + b);
    const Real f_star = f(zeta_star);
    // The maximum can sit on the zeta = 0 boundary (beta -> 1 regime).
    if (f(0.0) >= f_star) {
        return {f(0.0), RiskLevel::infinity()};
    }
    return {f_star, RiskLevel::of(1.0 / zeta_star)};
}

namespace {

std::vector<size_t> sorted_indices(const numvec& values) {
    std::vector<size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](size_t a, size_t b) { return values[a] < values[b]; });
    return idx;
}

} // namespace

Real var(const DiscreteDistribution& dist, ConfidenceLevel beta) {
    const numvec& x = dist.outcomes();
    const numvec& p = dist.probabilities();
    const Real level = 1.0 - beta.beta();
    const std::vector<size_t> order = sorted_indices(x);
    Real cum = 0.0;
    Real comp = 0.0;
    for (size_t i : order) {
        // Neumaier update keeps atom boundaries sharp for large supports.
        const Real t = cum + p[i];
        comp += (std::abs(cum) >= p[i]) ? (cum - t) + p[i] : (p[i] - t) + cum;
        cum = t;
        if (cum + comp > level + 1e-12) return x[i];
    }
    // F never strictly exceeds the level (beta = 0): top of the support.
    return dist.max_supported();
}

Real cvar(const DiscreteDistribution& dist, ConfidenceLevel beta) {
    if (beta.beta() == 0.0) return dist.mean();
    const numvec& x = dist.outcomes();
    const numvec& p = dist.probabilities();
    const Real tail_mass = 1.0 - beta.beta();
    const std::vector<size_t> order = sorted_indices(x);
    Real remaining = tail_mass;
    Real acc = 0.0;
    for (size_t i : order) {
        if (remaining <= 0.0) break;
        const Real take = std::min(p[i], remaining);
        acc += take * x[i];
        remaining -= take;
    }
    return acc / tail_mass;
}

Real hoeffding_gap(RiskLevel alpha, Real span) {
    if (alpha.is_infinite()) throw DomainError("Hoeffding gap needs a finite risk level");
    if (span < 0.0) throw DomainError("span must be nonnegative");
    return alpha.value() * span * span / 8.0;
}

namespace {

void require_finite_positive(RiskLevel alpha) {
    if (!alpha.is_finite() || alpha.is_zero()) {
        throw DomainError("utility transform needs a finite positive risk level");
    }
}

} // namespace

Real certainty_equivalent_utility(Real x, RiskLevel alpha) {
    require_finite_positive(alpha);
    const Real a = alpha.value();
    return -std::expm1(-a * x) / a;
}

Real certainty_equivalent_utility_inv(Real z, RiskLevel alpha) {
    require_finite_positive(alpha);
    const Real a = alpha.value();
    if (1.0 - a * z <= 0.0) {
        throw DomainError("utility inverse undefined: 1 - alpha*z must be positive");
    }
    return -std::log1p(-a * z) / a;
}

} // namespace rasr
