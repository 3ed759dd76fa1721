#pragma once

#include "rasr/mdp.hpp"
#include "rasr/risk.hpp"

namespace rasr {

enum class TerminalKind { Zero, RiskNeutralTail, UserSupplied };

/// Value vectors v_t for t = 0..T' together with the risk level each backup
/// used. The decaying solvers emit alpha*gamma^t as an iterated product, so
/// consecutive levels satisfy risk_levels[t+1] = gamma * risk_levels[t]
/// exactly; the constant-level baseline emits alpha throughout.
struct ValueSeries {
    std::vector<numvec> values; // one more entry than backup steps
    numvec risk_levels;         // one per backup step
    TerminalKind terminal = TerminalKind::Zero;
};

struct ErmSolveReport {
    PolicyPlan plan;
    ValueSeries values;
    Real objective = 0.0;                 // v_0(s0)
    std::optional<Real> loss_bound;       // absent when no guarantee is claimed
    size_t horizon_used = 0;              // number of risk-averse backup steps
};

/// Hard ceiling on backup steps; tolerances that would demand more raise
/// HorizonCapError.
inline constexpr size_t kMaxBackups = 1'000'000;

/// One Bellman backup at risk level alpha_t on the mean-posterior MDP:
/// v(s) = max_a ERM^{alpha_t}[ r(s,a) + gamma * v_next(S') ], S' ~ p_bar(.|s,a).
/// Ties break toward the lowest action index.
std::pair<numvec, DecisionRule> erm_backup(const numvec& v_next, const Mdp& mdp_bar,
                                           RiskLevel alpha_t);

/// Finite-horizon value iteration with the time-decaying levels alpha*gamma^t,
/// backwards from the terminal vector (zero when omitted). Exact: the report's
/// loss bound is 0.
ErmSolveReport solve_finite(const ModelEnsemble& ensemble, RiskLevel alpha, size_t T,
                            const numvec* terminal = nullptr);

/// Infinite-horizon approximation: risk-neutral value iteration on the mean
/// model supplies the tail policy and terminal values, then T' risk-averse
/// backups refine the head, with T' chosen so the performance-loss bound
/// c * gamma^(2T'), c = alpha*(span r)^2 / (8*(1-gamma)^2), is below the
/// tolerance. alpha = inf falls back to the stationary worst-case-successor
/// dynamic program, whose fixed-point iteration needs no horizon.
ErmSolveReport solve_infinite(const ModelEnsemble& ensemble, RiskLevel alpha,
                              Real tolerance);

/// solve_infinite with the head horizon pinned by the caller; used to study
/// how the loss bound decays in T'.
ErmSolveReport solve_infinite_with_horizon(const ModelEnsemble& ensemble, RiskLevel alpha,
                                           size_t t_prime, Real inner_residual);

/// Policy evaluation under the mean model: the Bellman recursion with the
/// plan's (deterministic) action substituted, risk level alpha*gamma^t.
ValueSeries evaluate_policy_erm(const ModelEnsemble& ensemble, const PolicyPlan& plan,
                                RiskLevel alpha, size_t T);

/// Standard risk-neutral value iteration to the given sup-norm residual.
std::pair<numvec, DecisionRule> risk_neutral_vi(const Mdp& mdp, Real residual);

/// The constant-risk baseline: the same pipeline as solve_infinite but every
/// backup uses level alpha with no gamma^t decay. No loss bound is reported.
ErmSolveReport naive_baseline(const ModelEnsemble& ensemble, RiskLevel alpha,
                              Real tolerance);

} // namespace rasr
