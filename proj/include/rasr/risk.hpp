#pragma once

#include "rasr/common.hpp"
#include "rasr/distribution.hpp"

namespace rasr {

/// Risk-aversion level alpha in [0, inf]. Infinity is a first-class state
/// (the essential-infimum limit), not a large float stand-in.
class RiskLevel {
public:
    static RiskLevel zero() { return RiskLevel(0.0); }
    static RiskLevel infinity();
    /// Validates value >= 0 (infinity allowed); throws DomainError otherwise.
    static RiskLevel of(Real value);

    Real value() const { return value_; }
    bool is_zero() const { return value_ == 0.0; }
    bool is_infinite() const;
    bool is_finite() const { return !is_infinite(); }

private:
    explicit RiskLevel(Real v) : value_(v) {}
    Real value_;
};

/// EVaR/VaR/CVaR confidence level beta in [0, 1).
class ConfidenceLevel {
public:
    static ConfidenceLevel of(Real beta);
    Real beta() const { return beta_; }

private:
    explicit ConfidenceLevel(Real b) : beta_(b) {}
    Real beta_;
};

/// Below this value of alpha*span the log-sum-exp expression for ERM has no
/// significant digits left and the expectation is used instead; the Hoeffding
/// gap bounds the substitution error by alpha*span^2/8 < 1e-9*span.
inline constexpr Real kTinyAlphaSpan = 1e-8;

/// Entropic risk measure -1/a * log E[exp(-a X)], evaluated with a max-shifted
/// exponential sum. Limits: alpha = 0 gives the mean, alpha = inf the smallest
/// supported outcome.
Real erm(const DiscreteDistribution& dist, RiskLevel alpha);

/// Raw ERM over (outcomes, probabilities) assumed already validated; the hot
/// path used by the dynamic-programming backups.
Real erm_weighted(const Real* outcomes, const Real* probabilities, size_t n,
                  RiskLevel alpha);

struct EvarResult {
    Real value;
    RiskLevel argmax_alpha;
};

/// Entropic value-at-risk sup_{a>0} ERM^a[X] + log(1-beta)/a. The search runs
/// over zeta = 1/alpha, where the objective is concave for a fixed
/// distribution, by golden-section to an interval of 1e-10. Returns the value
/// and the maximizing risk level (0 when beta = 0, infinity when the supremum
/// is approached as alpha -> inf).
EvarResult evar(const DiscreteDistribution& dist, ConfidenceLevel beta);

/// Value-at-risk: inf {x : F(x) > 1-beta}. Atom boundaries are resolved with
/// a 1e-12 cushion on the comparison so ties behave like exact arithmetic;
/// beta = 0 returns the largest supported outcome (inf of an empty set).
Real var(const DiscreteDistribution& dist, ConfidenceLevel beta);

/// Conditional value-at-risk: mean of the worst (1-beta) probability mass,
/// computed by the sorted-tail formula.
Real cvar(const DiscreteDistribution& dist, ConfidenceLevel beta);

/// Hoeffding bound on the ERM-to-mean gap: alpha * span^2 / 8.
Real hoeffding_gap(RiskLevel alpha, Real span);

/// Exponential utility u(x) = (1 - exp(-a x))/a and its inverse; ERM equals
/// u^{-1}(E[u(X)]), which the test suite uses as an independent route.
Real certainty_equivalent_utility(Real x, RiskLevel alpha);
Real certainty_equivalent_utility_inv(Real z, RiskLevel alpha);

} // namespace rasr
