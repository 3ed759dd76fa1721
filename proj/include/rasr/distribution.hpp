#pragma once

#include "rasr/common.hpp"

namespace rasr {

/// A finite distribution over real outcomes; the object every risk measure
/// in this library acts on. Validated on construction and immutable after:
/// equal nonzero lengths, finite outcomes, nonnegative probabilities summing
/// to one within 1e-12 (compensated summation, so large supports validate).
class DiscreteDistribution {
public:
    DiscreteDistribution(numvec outcomes, numvec probabilities);

    /// Equal-weight distribution, e.g. over simulated returns.
    static DiscreteDistribution equal_weights(numvec outcomes);

    const numvec& outcomes() const { return outcomes_; }
    const numvec& probabilities() const { return probabilities_; }
    size_t size() const { return outcomes_.size(); }

    Real mean() const;
    /// Smallest / largest outcome with positive probability.
    Real min_supported() const;
    Real max_supported() const;
    Real span() const { return max_supported() - min_supported(); }

private:
    numvec outcomes_;
    numvec probabilities_;
};

} // namespace rasr
