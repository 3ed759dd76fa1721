#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rasr/risk.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace rasr;
using testsupport::random_distribution;

namespace {

DiscreteDistribution coin(Real a, Real b) { return {{a, b}, {0.5, 0.5}}; }

DiscreteDistribution uniform_1_to_10() {
    numvec outcomes, probs;
    for (int i = 1; i <= 10; ++i) {
        outcomes.push_back(i);
        probs.push_back(0.1);
    }
    return {std::move(outcomes), std::move(probs)};
}

} // namespace

TEST_CASE("erm frozen values") {
    const DiscreteDistribution constant({7.0}, {1.0});
    CHECK(erm(constant, RiskLevel::of(3.0)) == doctest::Approx(7.0).epsilon(1e-14));

    const DiscreteDistribution flip = coin(0.0, 10.0);
    CHECK(erm(flip, RiskLevel::zero()) == doctest::Approx(5.0).epsilon(1e-14));
    // ln 2 - log1p(exp(-10)) evaluated in 40-digit arithmetic:
    CHECK(erm(flip, RiskLevel::of(1.0)) ==
          doctest::Approx(0.69310178166072844477).epsilon(1e-13));
    CHECK(erm(flip, RiskLevel::infinity()) == 0.0);
}

TEST_CASE("erm input validation") {
    CHECK_THROWS_AS(DiscreteDistribution({1.0, 2.0}, {0.6, 0.6}), ValidationError);
    CHECK_THROWS_AS(DiscreteDistribution({1.0}, {-1.0}), ValidationError);
    CHECK_THROWS_AS(DiscreteDistribution({}, {}), ValidationError);
    CHECK_THROWS_AS(RiskLevel::of(-0.5), DomainError);
}

TEST_CASE("tiny-alpha crossover stays within the hoeffding budget") {
    // A symmetric coin makes the Hoeffding bound exactly tight as alpha -> 0,
    // so this pins the worst case of both branches around the crossover. The
    // 1e-9 slack is the log-sum-exp noise floor at alpha*span ~ 1e-8.
    const DiscreteDistribution flip = coin(-1.0, 3.0);
    const Real mean = flip.mean();
    for (Real alpha : {1e-10, 2.4e-9, 2.6e-9, 1e-8, 1e-7}) {
        const Real v = erm(flip, RiskLevel::of(alpha));
        CHECK(std::abs(v - mean) <=
              hoeffding_gap(RiskLevel::of(alpha), flip.span()) + 1e-9);
    }
}

TEST_CASE("certainty equivalent utility pair") {
    const RiskLevel half = RiskLevel::of(0.5);
    CHECK(certainty_equivalent_utility(0.0, half) == 0.0);
    CHECK(certainty_equivalent_utility_inv(certainty_equivalent_utility(3.7, half), half) ==
          doctest::Approx(3.7).epsilon(1e-14));
    CHECK_THROWS_AS(certainty_equivalent_utility_inv(2.1, half), DomainError);
    CHECK_THROWS_AS(certainty_equivalent_utility(1.0, RiskLevel::infinity()), DomainError);

    // ERM equals the certainty-equivalent route u^{-1}(E[u(X)]).
    const DiscreteDistribution flip = coin(0.0, 10.0);
    const RiskLevel one = RiskLevel::of(1.0);
    Real expected_utility = 0.0;
    for (size_t i = 0; i < flip.size(); ++i) {
        expected_utility +=
            flip.probabilities()[i] * certainty_equivalent_utility(flip.outcomes()[i], one);
    }
    CHECK(certainty_equivalent_utility_inv(expected_utility, one) ==
          doctest::Approx(erm(flip, one)).epsilon(1e-10));
}

TEST_CASE("evar frozen values") {
    const DiscreteDistribution flip = coin(0.0, 10.0);
    CHECK(evar(flip, ConfidenceLevel::of(0.0)).value ==
          doctest::Approx(5.0).epsilon(1e-14));
    CHECK(evar(flip, ConfidenceLevel::of(0.0)).argmax_alpha.is_zero());

    const DiscreteDistribution constant({4.2}, {1.0});
    for (Real beta : {0.1, 0.5, 0.9}) {
        CHECK(evar(constant, ConfidenceLevel::of(beta)).value ==
              doctest::Approx(4.2).epsilon(1e-14));
    }

    // beta -> 1 approaches the essential infimum.
    CHECK(std::abs(evar(flip, ConfidenceLevel::of(0.999)).value - 0.0) <= 1e-6);
    CHECK_THROWS_AS(ConfidenceLevel::of(1.0), DomainError);
    CHECK_THROWS_AS(ConfidenceLevel::of(-0.1), DomainError);
}

TEST_CASE("var frozen values and conventions") {
    const DiscreteDistribution uniform = uniform_1_to_10();
    CHECK(var(uniform, ConfidenceLevel::of(0.9)) == 2.0);
    CHECK(var(uniform, ConfidenceLevel::of(0.0)) == 10.0);
    const DiscreteDistribution constant({3.3}, {1.0});
    for (Real beta : {0.0, 0.4, 0.99}) {
        CHECK(var(constant, ConfidenceLevel::of(beta)) == 3.3);
    }
}

TEST_CASE("cvar frozen values") {
    const DiscreteDistribution uniform = uniform_1_to_10();
    CHECK(cvar(uniform, ConfidenceLevel::of(0.9)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cvar(uniform, ConfidenceLevel::of(0.0)) ==
          doctest::Approx(5.5).epsilon(1e-14));
    const DiscreteDistribution constant({-2.5}, {1.0});
    CHECK(cvar(constant, ConfidenceLevel::of(0.7)) == doctest::Approx(-2.5).epsilon(1e-14));
}

TEST_CASE("hoeffding gap formula") {
    CHECK(hoeffding_gap(RiskLevel::zero(), 5.0) == 0.0);
    CHECK(hoeffding_gap(RiskLevel::of(1.0), 1.0) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(hoeffding_gap(RiskLevel::of(2.0), 4.0) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK_THROWS_AS(hoeffding_gap(RiskLevel::infinity(), 1.0), DomainError);
}

TEST_CASE("risk measure axioms on random distributions") {
    std::mt19937_64 gen(911);
    const numvec alphas{0.0, 0.01, 0.1, 0.5, 1.0, 3.0, 10.0};
    for (int rep = 0; rep < 200; ++rep) {
        const DiscreteDistribution dist = random_distribution(gen);
        const Real mean = dist.mean();
        const Real lo = dist.min_supported();

        // Monotone in alpha, bounded by [min, mean], above mean - gap.
        Real prev = std::numeric_limits<Real>::infinity();
        for (Real a : alphas) {
            const Real v = erm(dist, RiskLevel::of(a));
            CHECK(v <= prev + 1e-10);
            CHECK(v <= mean + 1e-10);
            CHECK(v >= lo - 1e-10);
            CHECK(v >= mean - hoeffding_gap(RiskLevel::of(a), dist.span()) - 1e-10);
            CHECK(v == doctest::Approx(testsupport::erm_reference(dist, a)).epsilon(1e-11));
            prev = v;
        }
        CHECK(erm(dist, RiskLevel::infinity()) == lo);

        // Translation equivariance.
        const Real shift = 3.25;
        numvec shifted = dist.outcomes();
        for (Real& x : shifted) x += shift;
        const DiscreteDistribution shifted_dist(shifted, dist.probabilities());
        CHECK(erm(shifted_dist, RiskLevel::of(1.5)) ==
              doctest::Approx(shift + erm(dist, RiskLevel::of(1.5))).epsilon(1e-10));

        // Positive quasi-homogeneity ERM^a[cX] = c * ERM^{ac}[X].
        for (Real c : {0.0, 0.5, 2.0}) {
            numvec scaled = dist.outcomes();
            for (Real& x : scaled) x *= c;
            const DiscreteDistribution scaled_dist(scaled, dist.probabilities());
            const Real lhs = erm(scaled_dist, RiskLevel::of(1.5));
            const Real rhs = c * erm(dist, RiskLevel::of(1.5 * c));
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
        }

        // Ordering: EVaR <= CVaR <= VaR <= mean, and ess inf <= EVaR.
        for (Real beta : {0.1, 0.5, 0.9, 0.99}) {
            const ConfidenceLevel level = ConfidenceLevel::of(beta);
            const Real e = evar(dist, level).value;
            const Real c = cvar(dist, level);
            const Real v = var(dist, level);
            CHECK(e <= c + 1e-9);
            CHECK(c <= v + 1e-9);
            CHECK(v <= dist.max_supported());
            CHECK(c <= mean + 1e-9);
            CHECK(e >= lo - 1e-9);
            CHECK(e <= mean + 1e-9);
            CHECK(v == testsupport::var_reference(dist, beta));
            CHECK(c == doctest::Approx(testsupport::cvar_reference(dist, beta))
                           .epsilon(1e-11));
        }
    }
}

TEST_CASE("tower property on two-stage constructions") {
    std::mt19937_64 gen(2718);
    std::uniform_real_distribution<Real> unit(0.05, 1.0);
    std::uniform_real_distribution<Real> outcome(-5.0, 5.0);
    for (int rep = 0; rep < 100; ++rep) {
        // Stage 1 picks a branch; stage 2 draws an outcome within the branch.
        const size_t branches = 2 + (rep % 3);
        numvec branch_probs(branches);
        Real total = 0.0;
        for (Real& p : branch_probs) {
            p = unit(gen);
            total += p;
        }
        for (Real& p : branch_probs) p /= total;
        Real drift = -1.0;
        for (Real p : branch_probs) drift += p;
        branch_probs[0] -= drift;

        std::vector<numvec> outcomes(branches), probs(branches);
        for (size_t b = 0; b < branches; ++b) {
            const size_t n = 1 + (gen() % 4);
            outcomes[b].resize(n);
            probs[b].resize(n);
            Real t = 0.0;
            for (size_t i = 0; i < n; ++i) {
                outcomes[b][i] = outcome(gen);
                probs[b][i] = unit(gen);
                t += probs[b][i];
            }
            for (Real& p : probs[b]) p /= t;
            Real d = -1.0;
            for (Real p : probs[b]) d += p;
            probs[b][0] -= d;
        }

        const RiskLevel alpha = RiskLevel::of(0.8);
        // Nested: ERM over branches of the per-branch ERM certainty values.
        numvec branch_values(branches);
        for (size_t b = 0; b < branches; ++b) {
            branch_values[b] =
                erm(DiscreteDistribution(outcomes[b], probs[b]), alpha);
        }
        const Real nested = erm(DiscreteDistribution(branch_values, branch_probs), alpha);

        // Flattened joint distribution.
        numvec joint_x, joint_p;
        for (size_t b = 0; b < branches; ++b) {
            for (size_t i = 0; i < outcomes[b].size(); ++i) {
                joint_x.push_back(outcomes[b][i]);
                joint_p.push_back(branch_probs[b] * probs[b][i]);
            }
        }
        Real d = -1.0;
        for (Real p : joint_p) d += p;
        joint_p[0] -= d;
        const Real flat = erm(DiscreteDistribution(joint_x, joint_p), alpha);

        CHECK(nested == doctest::Approx(flat).epsilon(1e-10));
    }
}

TEST_CASE("erm invariant to merging and zero-probability atoms") {
    const DiscreteDistribution base({1.0, 1.0, 4.0}, {0.25, 0.25, 0.5});
    const DiscreteDistribution merged({1.0, 4.0}, {0.5, 0.5});
    const DiscreteDistribution padded({1.0, 2.5, 4.0, -100.0}, {0.5, 0.0, 0.5, 0.0});
    for (Real a : {0.0, 0.7, 5.0}) {
        const Real reference = erm(merged, RiskLevel::of(a));
        CHECK(erm(base, RiskLevel::of(a)) == doctest::Approx(reference).epsilon(1e-12));
        CHECK(erm(padded, RiskLevel::of(a)) == doctest::Approx(reference).epsilon(1e-12));
    }
    CHECK(erm(padded, RiskLevel::infinity()) == 1.0);
}

TEST_CASE("evar against the dense-grid reference") {
    std::mt19937_64 gen(5150);
    for (int rep = 0; rep < 25; ++rep) {
        const DiscreteDistribution dist = random_distribution(gen, 10);
        for (Real beta : {0.3, 0.9}) {
            const Real mine = evar(dist, ConfidenceLevel::of(beta)).value;
            const Real reference = testsupport::evar_reference(dist, beta);
            // The dense grid is a lower bound on the supremum; the search
            // result must dominate it and stay within its resolution.
            CHECK(mine >= reference - 1e-9);
            CHECK(mine <= reference + 2e-5);
        }
    }
}
