#include "rasr/simulate.hpp"

#include "rasr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

namespace rasr {

namespace {

size_t pick_from_cdf(const Real* probs, size_t n, Real u) {
    Real cum = 0.0;
    for (size_t i = 0; i + 1 < n; ++i) {
        cum += probs[i];
        if (u < cum) return i;
    }
    return n - 1;
}

} // namespace

ReturnSample simulate(const ModelEnsemble& ensemble, const PolicyPlan& plan,
                      size_t episodes, size_t horizon, uint64_t seed,
                      RolloutModel rollout, std::string policy_tag) {
    ensemble.validate();
    if (horizon == 0) throw DomainError("simulation horizon must be at least 1");
    if (episodes == 0) throw DomainError("need at least one episode");
    const Mdp& nominal = ensemble.nominal;
    plan.validate(nominal.n_states, nominal.n_actions);
    if (!plan.covers(horizon)) {
        throw ValidationError("plan does not cover the simulation horizon");
    }

    const Mdp mean = mean_model(ensemble);
    const size_t n_states = nominal.n_states;
    const size_t n_actions = nominal.n_actions;
    const size_t n_models = ensemble.models.size();
    const Real gamma = nominal.discount;

    ReturnSample sample;
    sample.returns.assign(episodes, 0.0);
    sample.episodes = episodes;
    sample.horizon = horizon;
    sample.seed = seed;
    sample.policy_tag = std::move(policy_tag);
    sample.truncation_bias_bound =
        gamma < 1.0 ? std::pow(gamma, static_cast<Real>(horizon)) *
                          nominal.reward_span() / (1.0 - gamma)
                    : std::numeric_limits<Real>::infinity();

    parallel_chunks(0, episodes, 256, [&](size_t lo, size_t hi) {
        for (size_t e = lo; e < hi; ++e) {
            CounterRng rng(seed, e);
            size_t s = nominal.initial_state;
            Real ret = 0.0;
            Real disc = 1.0;
            for (size_t t = 0; t < horizon; ++t) {
                const auto a = static_cast<size_t>(plan.rule_at(t)[s]);
                ret += disc * nominal.reward_at(s, a);
                disc *= gamma;
                // One block per step: first uniform picks the model, second
                // the successor. The model draw is consumed in both rollout
                // modes to keep the streams aligned.
                const Real u_model = rng.next_uniform();
                const Real u_state = rng.next_uniform();
                const Real* row;
                if (rollout == RolloutModel::Ensemble) {
                    const numvec& w = ensemble.weights_at(t);
                    const size_t model = pick_from_cdf(w.data(), n_models, u_model);
                    row = ensemble.models[model].data() +
                          (s * n_actions + a) * n_states;
                } else {
                    row = mean.row(s, a).data();
                }
                s = pick_from_cdf(row, n_states, u_state);
            }
            sample.returns[e] = ret;
        }
    });
    return sample;
}

RiskReport risk_report(const ReturnSample& sample,
                       const std::vector<ConfidenceLevel>& levels) {
    if (sample.returns.empty()) throw ValidationError("empty return sample");
    const DiscreteDistribution dist = DiscreteDistribution::equal_weights(sample.returns);

    RiskReport report;
    report.mean = dist.mean();
    report.episodes = sample.episodes;
    report.horizon = sample.horizon;
    report.seed = sample.seed;
    report.policy_tag = sample.policy_tag;
    report.truncation_bias_bound = sample.truncation_bias_bound;
    report.small_sample_warning = sample.returns.size() < 100;
    for (ConfidenceLevel level : levels) {
        report.rows.push_back({"var", level.beta(), var(dist, level)});
        report.rows.push_back({"cvar", level.beta(), cvar(dist, level)});
        report.rows.push_back({"evar", level.beta(), evar(dist, level).value});
    }
    return report;
}

DiscreteDistribution exact_return_distribution(const Mdp& mdp, const PolicyPlan& plan,
                                               size_t T) {
    plan.validate(mdp.n_states, mdp.n_actions);
    if (!plan.covers(T)) throw ValidationError("plan does not cover the horizon");

    struct Node {
        size_t state;
        Real probability;
        Real ret;
    };
    std::vector<Node> frontier{{mdp.initial_state, 1.0, 0.0}};
    Real disc = 1.0;
    constexpr size_t kLeafGuard = 200'000;
    for (size_t t = 0; t < T; ++t) {
        std::vector<Node> next;
        next.reserve(frontier.size() * mdp.n_states);
        for (const Node& node : frontier) {
            const auto a = static_cast<size_t>(plan.rule_at(t)[node.state]);
            const Real ret = node.ret + disc * mdp.reward_at(node.state, a);
            const auto row = mdp.row(node.state, a);
            for (size_t sn = 0; sn < mdp.n_states; ++sn) {
                if (row[sn] == 0.0) continue;
                next.push_back({sn, node.probability * row[sn], ret});
            }
        }
        if (next.size() > kLeafGuard) {
            throw SizeGuardError("trajectory enumeration exceeds " +
                                 std::to_string(kLeafGuard) + " leaves");
        }
        frontier = std::move(next);
        disc *= mdp.discount;
    }

    // Merge exactly equal returns; the drift of the leaf-probability sum from
    // 1 is float dust, removed by exact division.
    std::map<Real, Real> merged;
    for (const Node& node : frontier) merged[node.ret] += node.probability;
    numvec outcomes, probabilities;
    outcomes.reserve(merged.size());
    probabilities.reserve(merged.size());
    for (const auto& [ret, prob] : merged) {
        outcomes.push_back(ret);
        probabilities.push_back(prob);
    }
    const Real total = compensated_sum(probabilities);
    if (std::abs(total - 1.0) > 1e-9) {
        throw ValidationError("enumerated leaf probabilities sum to " +
                              std::to_string(total));
    }
    if (total != 1.0) {
        for (Real& p : probabilities) p /= total;
    }
    return DiscreteDistribution(std::move(outcomes), std::move(probabilities));
}

OracleResult brute_force_oracle(const ModelEnsemble& ensemble, RiskLevel alpha, size_t T) {
    ensemble.validate();
    if (T < 1) throw DomainError("oracle horizon must be at least 1");
    const Mdp mean = mean_model(ensemble);
    const size_t S = mean.n_states;
    const size_t A = mean.n_actions;

    // Combined size guard: |A|^(S*T) plans times |S|^T trajectories.
    Real plans_est = 1.0;
    for (size_t i = 0; i < S * T; ++i) plans_est *= static_cast<Real>(A);
    Real trajs_est = 1.0;
    for (size_t t = 0; t < T; ++t) trajs_est *= static_cast<Real>(S);
    if (plans_est * trajs_est > 1e6) {
        throw SizeGuardError("brute-force oracle refused: ~" +
                             std::to_string(plans_est * trajs_est) +
                             " plan-trajectory combinations exceed 1e6");
    }
    const auto n_plans = static_cast<size_t>(plans_est);

    OracleResult best{-std::numeric_limits<Real>::infinity(), {}};
    // Mixed-radix odometer over all T*S action choices.
    std::vector<int32_t> digits(S * T, 0);
    for (size_t index = 0; index < n_plans; ++index) {
        PolicyPlan plan;
        plan.rules.assign(T, DecisionRule(S, 0));
        for (size_t t = 0; t < T; ++t) {
            for (size_t s = 0; s < S; ++s) plan.rules[t][s] = digits[t * S + s];
        }
        const DiscreteDistribution returns = exact_return_distribution(mean, plan, T);
        const Real objective = erm(returns, alpha);
        if (objective > best.objective) {
            best.objective = objective;
            best.plan = std::move(plan);
        }
        for (size_t d = 0; d < digits.size(); ++d) {
            if (++digits[d] < static_cast<int32_t>(A)) break;
            digits[d] = 0;
        }
    }
    return best;
}

} // namespace rasr
