#pragma once

#include "rasr/common.hpp"

#include <optional>
#include <span>
#include <string>

namespace rasr {

/// Tabular MDP (S, A, r, p, s0, gamma). Rewards depend on (state, action)
/// only; transition rows are validated stochastic within 1e-9. gamma = 1 is
/// accepted and rejected later by the infinite-horizon solvers.
struct Mdp {
    size_t n_states = 0;
    size_t n_actions = 0;
    numvec reward;     // r[s*A + a]
    numvec transition; // p[(s*A + a)*S + s']
    Real discount = 1.0;
    size_t initial_state = 0;

    Real reward_at(size_t s, size_t a) const { return reward[s * n_actions + a]; }
    std::span<const Real> row(size_t s, size_t a) const {
        return {transition.data() + (s * n_actions + a) * n_states, n_states};
    }
    Real reward_span() const;

    /// Throws ValidationError on any structural violation.
    void validate() const;
};

/// Decision rule: state index -> action index.
using DecisionRule = indvec;

/// Time-indexed deterministic Markov policy with an optional stationary tail
/// used for every step beyond the explicit rules.
struct PolicyPlan {
    std::vector<DecisionRule> rules;
    std::optional<DecisionRule> tail_rule;

    /// Rule for step t; requires coverage (tail rule when t is beyond rules).
    const DecisionRule& rule_at(size_t t) const;
    bool covers(size_t horizon) const {
        return tail_rule.has_value() || rules.size() >= horizon;
    }
    void validate(size_t n_states, size_t n_actions) const;

    bool operator==(const PolicyPlan&) const = default;
};

/// Finite set of candidate transition models with posterior weights; the
/// random transition function P with law f. Rewards, discount and initial
/// state live in `nominal`, whose transition table doubles as model 0's
/// default when convenient.
struct ModelEnsemble {
    Mdp nominal;
    std::vector<numvec> models; // each laid out like Mdp::transition
    numvec weights;
    bool stationary = true;
    /// Optional per-step weights f_t for finite-horizon solves; empty means
    /// the stationary weights apply at every step.
    std::vector<numvec> step_weights;

    void validate() const;
    const numvec& weights_at(size_t t) const {
        return (!step_weights.empty() && t < step_weights.size()) ? step_weights[t]
                                                                  : weights;
    }

    /// Ensemble concentrated on a single model.
    static ModelEnsemble point_mass(Mdp mdp);
};

/// Posterior-mean transition model p_bar(s'|s,a) = sum_w f(w) P_w(s'|s,a),
/// returned as a full Mdp sharing the nominal rewards/discount/initial state.
/// Rows are renormalized only when their sum drifts beyond 1e-12.
Mdp mean_model(const ModelEnsemble& ensemble);
/// Same with the step-t weights of a nonstationary ensemble.
Mdp mean_model_at(const ModelEnsemble& ensemble, size_t t);

struct LoadOptions {
    std::optional<Real> discount;       // overrides file metadata
    std::optional<size_t> initial_state;
};

/// CSV ingestion. MDP rows: id_state,id_action,id_next_state,probability,reward.
/// Ensemble rows prepend id_model,weight. '#' lines may carry
/// "# gamma = 0.95" / "# initial_state = 0" metadata; missing transitions are
/// implicit zeros; the reward for a (state, action) pair must agree across
/// its rows. Errors name the offending line.
Mdp load_mdp(const std::string& path, const LoadOptions& options = {});
ModelEnsemble load_ensemble(const std::string& path, const LoadOptions& options = {});

void save_mdp(const Mdp& mdp, const std::string& path);
void save_ensemble(const ModelEnsemble& ensemble, const std::string& path);

/// The 4-state, 2-action finite-horizon MDP on which the EVaR objective
/// h(alpha) is provably not quasi-concave. Rewards are earned on arrival:
/// r(s1)=-2, r(s2)=0, r(s3)=1, encoded as state-action rewards with absorbing
/// terminal states. Meant to be solved with gamma = 1 and T = 2.
Mdp builtin_counterexample();

struct ChainParams {
    size_t n_states = 6;   // home, gauntlet states, goal
    Real slip = 0.1;       // chance an advance throws the agent back home
    size_t n_models = 5;
    Real perturb = 0.0;    // Dirichlet spread; 0 reproduces the nominal chain
    uint64_t seed = 1;
    Real discount = 0.9;
    Real safe_reward = 0.6;   // action SAFE at home
    Real goal_reward = 3.0;   // action SAFE at the goal, risk-free
    Real bold_reward = 12.0;  // action RISKY at the goal; slips home 4x as often
};

/// Chain domain with a safe low-reward action and a risky high-reward
/// traverse, plus n_models Dirichlet-perturbed posterior samples. Fully
/// deterministic given the seed.
ModelEnsemble builtin_chain(const ChainParams& params);

} // namespace rasr
