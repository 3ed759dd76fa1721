#include "rasr/distribution.hpp"

#include "rasr/kernels.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace rasr {

DiscreteDistribution::DiscreteDistribution(numvec outcomes, numvec probabilities)
    : outcomes_(std::move(outcomes)), probabilities_(std::move(probabilities)) {
    if (outcomes_.empty() || outcomes_.size() != probabilities_.size()) {
        throw ValidationError("distribution needs equal, nonzero outcome and "
                              "probability counts");
    }
    for (size_t i = 0; i < outcomes_.size(); ++i) {
        if (!std::isfinite(outcomes_[i])) {
            throw ValidationError("outcome " + std::to_string(i) + " is not finite");
        }
        if (!(probabilities_[i] >= 0.0)) {
            throw ValidationError("probability " + std::to_string(i) + " is negative");
        }
    }
    const Real total = compensated_sum(probabilities_);
    if (std::abs(total - 1.0) > 1e-12) {
        throw ValidationError("probabilities sum to " + std::to_string(total) +
                              ", expected 1 within 1e-12");
    }
}

DiscreteDistribution DiscreteDistribution::equal_weights(numvec outcomes) {
    if (outcomes.empty()) throw ValidationError("empty outcome list");
    numvec probabilities(outcomes.size(), 1.0 / static_cast<Real>(outcomes.size()));
    return DiscreteDistribution(std::move(outcomes), std::move(probabilities));
}

Real DiscreteDistribution::mean() const {
    return kernels::active().dot(outcomes_.data(), probabilities_.data(), size());
}

Real DiscreteDistribution::min_supported() const {
    return kernels::active().min_supported(outcomes_.data(), probabilities_.data(), size());
}

Real DiscreteDistribution::max_supported() const {
    Real m = -std::numeric_limits<Real>::infinity();
    for (size_t i = 0; i < size(); ++i) {
        if (probabilities_[i] > 0.0 && outcomes_[i] > m) m = outcomes_[i];
    }
    return m;
}

} // namespace rasr
