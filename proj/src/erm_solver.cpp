#include "rasr/erm_solver.hpp"

#include "rasr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rasr {

namespace {

/// Backup for one state: materialize the outcome vector r + gamma*v_next and
/// apply ERM under each action's successor row.
void backup_state(const Mdp& mdp, const numvec& v_next, RiskLevel alpha_t, size_t s,
                  numvec& scratch, Real& value_out, int32_t& action_out) {
    const kernels::Backend& k = kernels::active();
    Real best = -std::numeric_limits<Real>::infinity();
    int32_t best_action = 0;
    for (size_t a = 0; a < mdp.n_actions; ++a) {
        k.affine(scratch.data(), v_next.data(), v_next.size(), mdp.discount,
                 mdp.reward_at(s, a));
        const auto probs = mdp.row(s, a);
        const Real value =
            erm_weighted(scratch.data(), probs.data(), probs.size(), alpha_t);
        if (value > best) {
            best = value;
            best_action = static_cast<int32_t>(a);
        }
    }
    value_out = best;
    action_out = best_action;
}

std::pair<numvec, DecisionRule> backup_all(const Mdp& mdp, const numvec& v_next,
                                           RiskLevel alpha_t) {
    numvec values(mdp.n_states);
    DecisionRule rule(mdp.n_states);
    parallel_chunks(0, mdp.n_states, 64, [&](size_t lo, size_t hi) {
        numvec scratch(mdp.n_states);
        for (size_t s = lo; s < hi; ++s) {
            backup_state(mdp, v_next, alpha_t, s, scratch, values[s], rule[s]);
        }
    });
    return {std::move(values), std::move(rule)};
}

/// alpha * gamma^t for t = 0..T-1 as an iterated product, so consecutive
/// levels satisfy the exact recurrence levels[t+1] = gamma * levels[t].
numvec decayed_levels(RiskLevel alpha, Real gamma, size_t T) {
    numvec levels(T);
    Real level = alpha.value();
    for (size_t t = 0; t < T; ++t) {
        levels[t] = level;
        level *= gamma;
    }
    return levels;
}

void check_alpha(RiskLevel alpha) {
    if (std::isnan(alpha.value()) || alpha.value() < 0.0) {
        throw DomainError("risk level must be nonnegative");
    }
}

struct FiniteSolveInput {
    std::vector<Mdp> mean_per_step; // size 1 when stationary
    const Mdp& at(size_t t) const {
        return mean_per_step.size() == 1 ? mean_per_step[0]
                                         : mean_per_step[std::min(t, mean_per_step.size() - 1)];
    }
};

FiniteSolveInput mean_models_for(const ModelEnsemble& ensemble, size_t T) {
    FiniteSolveInput input;
    if (ensemble.step_weights.empty()) {
        input.mean_per_step.push_back(mean_model(ensemble));
    } else {
        input.mean_per_step.reserve(T);
        for (size_t t = 0; t < T; ++t) {
            input.mean_per_step.push_back(mean_model_at(ensemble, t));
        }
    }
    return input;
}

ErmSolveReport finite_backward_induction(const FiniteSolveInput& input, RiskLevel alpha,
                                         size_t T, const numvec& terminal,
                                         TerminalKind terminal_kind) {
    const Mdp& any = input.at(0);
    ErmSolveReport report;
    report.values.terminal = terminal_kind;
    report.values.risk_levels = decayed_levels(alpha, any.discount, T);
    report.values.values.assign(T + 1, numvec());
    report.values.values[T] = terminal;
    report.plan.rules.assign(T, DecisionRule());
    for (size_t t = T; t-- > 0;) {
        auto [v, rule] = backup_all(input.at(t), report.values.values[t + 1],
                                    RiskLevel::of(report.values.risk_levels[t]));
        report.values.values[t] = std::move(v);
        report.plan.rules[t] = std::move(rule);
    }
    report.objective = report.values.values[0][any.initial_state];
    report.loss_bound = 0.0;
    report.horizon_used = T;
    return report;
}

} // namespace

std::pair<numvec, DecisionRule> erm_backup(const numvec& v_next, const Mdp& mdp_bar,
                                           RiskLevel alpha_t) {
    check_alpha(alpha_t);
    if (v_next.size() != mdp_bar.n_states) {
        throw ValidationError("value vector length does not match the state count");
    }
    return backup_all(mdp_bar, v_next, alpha_t);
}

ErmSolveReport solve_finite(const ModelEnsemble& ensemble, RiskLevel alpha, size_t T,
                            const numvec* terminal) {
    check_alpha(alpha);
    if (T < 1) throw DomainError("finite horizon must be at least 1");
    if (T > kMaxBackups) {
        throw HorizonCapError("horizon " + std::to_string(T) + " exceeds the backup cap");
    }
    ensemble.validate();
    const FiniteSolveInput input = mean_models_for(ensemble, T);
    numvec term = terminal != nullptr ? *terminal
                                      : numvec(ensemble.nominal.n_states, 0.0);
    if (term.size() != ensemble.nominal.n_states) {
        throw ValidationError("terminal vector length does not match the state count");
    }
    return finite_backward_induction(input, alpha, T, term,
                                     terminal != nullptr ? TerminalKind::UserSupplied
                                                         : TerminalKind::Zero);
}

std::pair<numvec, DecisionRule> risk_neutral_vi(const Mdp& mdp, Real residual) {
    if (mdp.discount >= 1.0) {
        throw DomainError("risk-neutral value iteration needs discount < 1");
    }
    if (!(residual > 0.0)) throw DomainError("residual must be positive");
    numvec v(mdp.n_states, 0.0);
    DecisionRule rule(mdp.n_states, 0);
    for (size_t iter = 0; iter < kMaxBackups; ++iter) {
        auto [next, greedy] = backup_all(mdp, v, RiskLevel::zero());
        Real gap = 0.0;
        for (size_t s = 0; s < mdp.n_states; ++s) {
            gap = std::max(gap, std::abs(next[s] - v[s]));
        }
        v = std::move(next);
        rule = std::move(greedy);
        if (gap <= residual) return {std::move(v), std::move(rule)};
    }
    throw HorizonCapError("risk-neutral value iteration failed to reach the residual");
}

namespace {

/// Stationary dynamic program for a constant risk level (alpha = inf gives the
/// worst-case-successor backup). The operator is a gamma-contraction in the
/// sup norm, so plain fixed-point iteration applies.
ErmSolveReport stationary_constant_level(const ModelEnsemble& ensemble, RiskLevel alpha,
                                         Real tolerance) {
    const Mdp mean = mean_model(ensemble);
    if (mean.discount >= 1.0) {
        throw DomainError("infinite-horizon solves need discount < 1; "
                          "use solve_finite for gamma = 1");
    }
    const Real gamma = mean.discount;
    const Real stop = tolerance * (1.0 - gamma) / (2.0 * gamma);
    numvec v(mean.n_states, 0.0);
    DecisionRule rule(mean.n_states, 0);
    for (size_t iter = 0; iter < kMaxBackups; ++iter) {
        auto [next, greedy] = backup_all(mean, v, alpha);
        Real gap = 0.0;
        for (size_t s = 0; s < mean.n_states; ++s) {
            gap = std::max(gap, std::abs(next[s] - v[s]));
        }
        v = std::move(next);
        rule = std::move(greedy);
        if (gap <= stop) break;
        if (iter + 1 == kMaxBackups) {
            throw HorizonCapError("stationary solve failed to converge under the cap");
        }
    }
    ErmSolveReport report;
    report.objective = v[mean.initial_state];
    report.values.values.push_back(std::move(v));
    report.values.risk_levels.push_back(alpha.value());
    report.values.terminal = TerminalKind::RiskNeutralTail;
    report.plan.tail_rule = std::move(rule);
    report.loss_bound = tolerance;
    report.horizon_used = 0;
    return report;
}

} // namespace

namespace {

void require_stationary(const ModelEnsemble& ensemble) {
    if (!ensemble.step_weights.empty()) {
        throw ValidationError("per-step weights are a finite-horizon feature; "
                              "infinite-horizon solves need a stationary ensemble");
    }
}

} // namespace

ErmSolveReport solve_infinite_with_horizon(const ModelEnsemble& ensemble, RiskLevel alpha,
                                           size_t t_prime, Real inner_residual) {
    check_alpha(alpha);
    ensemble.validate();
    require_stationary(ensemble);
    const Mdp mean = mean_model(ensemble);
    if (mean.discount >= 1.0) {
        throw DomainError("infinite-horizon solves need discount < 1; "
                          "use solve_finite for gamma = 1");
    }
    auto [v_inf, pi_inf] = risk_neutral_vi(mean, inner_residual);

    const Real span = mean.reward_span();
    const Real c = alpha.value() * span * span /
                   (8.0 * (1.0 - mean.discount) * (1.0 - mean.discount));

    if (t_prime == 0) {
        ErmSolveReport report;
        report.objective = v_inf[mean.initial_state];
        report.values.values.push_back(std::move(v_inf));
        report.values.terminal = TerminalKind::RiskNeutralTail;
        report.plan.tail_rule = std::move(pi_inf);
        report.loss_bound = c; // c * gamma^0
        report.horizon_used = 0;
        return report;
    }

    FiniteSolveInput input;
    input.mean_per_step.push_back(mean);
    ErmSolveReport report = finite_backward_induction(input, alpha, t_prime, v_inf,
                                                      TerminalKind::RiskNeutralTail);
    report.plan.tail_rule = std::move(pi_inf);
    report.loss_bound = c * std::pow(mean.discount, 2.0 * static_cast<Real>(t_prime));
    return report;
}

ErmSolveReport solve_infinite(const ModelEnsemble& ensemble, RiskLevel alpha,
                              Real tolerance) {
    check_alpha(alpha);
    if (!(tolerance > 0.0)) throw DomainError("tolerance must be positive");
    ensemble.validate();
    require_stationary(ensemble);
    if (alpha.is_infinite()) {
        return stationary_constant_level(ensemble, alpha, tolerance);
    }
    const Mdp mean = mean_model(ensemble);
    if (mean.discount >= 1.0) {
        throw DomainError("infinite-horizon solves need discount < 1; "
                          "use solve_finite for gamma = 1");
    }
    const Real gamma = mean.discount;
    const Real span = mean.reward_span();
    const Real c =
        alpha.value() * span * span / (8.0 * (1.0 - gamma) * (1.0 - gamma));

    // Smallest T' with c * gamma^(2T') <= tolerance.
    size_t t_prime = 0;
    if (c > tolerance) {
        const Real exact = std::log(tolerance / c) / (2.0 * std::log(gamma));
        if (exact > static_cast<Real>(kMaxBackups)) {
            throw HorizonCapError("tolerance needs " + std::to_string(exact) +
                                  " backups, above the cap of " +
                                  std::to_string(kMaxBackups));
        }
        t_prime = static_cast<size_t>(std::ceil(exact));
        while (c * std::pow(gamma, 2.0 * static_cast<Real>(t_prime)) > tolerance) {
            ++t_prime; // guard the ceil against rounding at the boundary
            if (t_prime > kMaxBackups) {
                throw HorizonCapError("tolerance demands more backups than the cap");
            }
        }
    }
    const Real inner_residual = tolerance * (1.0 - gamma) / 10.0;
    return solve_infinite_with_horizon(ensemble, alpha, t_prime, inner_residual);
}

ValueSeries evaluate_policy_erm(const ModelEnsemble& ensemble, const PolicyPlan& plan,
                                RiskLevel alpha, size_t T) {
    check_alpha(alpha);
    if (T < 1) throw DomainError("evaluation horizon must be at least 1");
    ensemble.validate();
    const FiniteSolveInput input = mean_models_for(ensemble, T);
    const Mdp& any = input.at(0);
    plan.validate(any.n_states, any.n_actions);
    if (!plan.covers(T)) {
        throw ValidationError("plan does not cover the evaluation horizon");
    }
    const kernels::Backend& k = kernels::active();

    ValueSeries series;
    series.terminal = TerminalKind::Zero;
    series.risk_levels = decayed_levels(alpha, any.discount, T);
    series.values.assign(T + 1, numvec());
    series.values[T] = numvec(any.n_states, 0.0);
    for (size_t t = T; t-- > 0;) {
        const Mdp& mean = input.at(t);
        const DecisionRule& rule = plan.rule_at(t);
        const numvec& v_next = series.values[t + 1];
        numvec v(mean.n_states);
        const RiskLevel level = RiskLevel::of(series.risk_levels[t]);
        parallel_chunks(0, mean.n_states, 64, [&](size_t lo, size_t hi) {
            numvec scratch(mean.n_states);
            for (size_t s = lo; s < hi; ++s) {
                const auto a = static_cast<size_t>(rule[s]);
                k.affine(scratch.data(), v_next.data(), v_next.size(), mean.discount,
                         mean.reward_at(s, a));
                const auto probs = mean.row(s, a);
                v[s] = erm_weighted(scratch.data(), probs.data(), probs.size(), level);
            }
        });
        series.values[t] = std::move(v);
    }
    return series;
}

ErmSolveReport naive_baseline(const ModelEnsemble& ensemble, RiskLevel alpha,
                              Real tolerance) {
    check_alpha(alpha);
    if (!(tolerance > 0.0)) throw DomainError("tolerance must be positive");
    ensemble.validate();
    require_stationary(ensemble);
    if (alpha.is_infinite()) {
        ErmSolveReport report = stationary_constant_level(ensemble, alpha, tolerance);
        report.loss_bound.reset();
        return report;
    }
    const Mdp mean = mean_model(ensemble);
    if (mean.discount >= 1.0) {
        throw DomainError("infinite-horizon solves need discount < 1; "
                          "use solve_finite for gamma = 1");
    }
    const Real gamma = mean.discount;
    const Real span = mean.reward_span();
    const Real c =
        alpha.value() * span * span / (8.0 * (1.0 - gamma) * (1.0 - gamma));
    size_t t_prime = 0;
    if (c > tolerance) {
        const Real exact = std::log(tolerance / c) / (2.0 * std::log(gamma));
        if (exact > static_cast<Real>(kMaxBackups)) {
            throw HorizonCapError("tolerance demands more backups than the cap");
        }
        t_prime = static_cast<size_t>(std::ceil(exact));
    }
    const Real inner_residual = tolerance * (1.0 - gamma) / 10.0;
    auto [v_inf, pi_inf] = risk_neutral_vi(mean, inner_residual);

    ErmSolveReport report;
    if (t_prime == 0) {
        report.objective = v_inf[mean.initial_state];
        report.values.values.push_back(std::move(v_inf));
        report.values.terminal = TerminalKind::RiskNeutralTail;
        report.plan.tail_rule = std::move(pi_inf);
        report.horizon_used = 0;
        return report;
    }

    report.values.terminal = TerminalKind::RiskNeutralTail;
    report.values.risk_levels.assign(t_prime, alpha.value()); // constant, no decay
    report.values.values.assign(t_prime + 1, numvec());
    report.values.values[t_prime] = v_inf;
    report.plan.rules.assign(t_prime, DecisionRule());
    for (size_t t = t_prime; t-- > 0;) {
        auto [v, rule] = backup_all(mean, report.values.values[t + 1], alpha);
        report.values.values[t] = std::move(v);
        report.plan.rules[t] = std::move(rule);
    }
    report.plan.tail_rule = std::move(pi_inf);
    report.objective = report.values.values[0][mean.initial_state];
    report.horizon_used = t_prime;
    return report;
}

} // namespace rasr
