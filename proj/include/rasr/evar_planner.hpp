#pragma once

#include "rasr/erm_solver.hpp"

namespace rasr {

/// Descending risk levels alpha_0 = inf > alpha_1 > ... > alpha_K > 0 with
/// alpha_k = -log(1-beta) / (k*delta), so consecutive finite levels satisfy
/// log(1-beta) * (1/alpha_k - 1/alpha_{k+1}) = delta. beta = 0 degenerates to
/// the single level alpha = 0 (risk-neutral).
struct AlphaGrid {
    std::vector<RiskLevel> levels;
    Real delta = 0.0;
    Real beta = 0.0;
    size_t K = 0;
};

/// Grid points beyond this count are refused; shrink delta/gamma demands.
inline constexpr size_t kMaxGridPoints = 100'000;

/// K = ceil( sqrt(-log(1-beta)/8) * span / ((1-gamma)*delta) ).
AlphaGrid build_grid(ConfidenceLevel beta, Real delta, Real reward_span, Real gamma);

/// Finite-horizon variant: the 1/(1-gamma) return-span factor is replaced by
/// min(T, 1/(1-gamma)), which keeps K finite at gamma = 1.
AlphaGrid build_grid_finite(ConfidenceLevel beta, Real delta, Real reward_span, Real gamma,
                            size_t T);

struct HPoint {
    Real alpha; // +inf representable
    Real h;
    bool valid; // false when the inner solve hit its backup cap
};

struct EvarSolveReport {
    PolicyPlan plan;
    RiskLevel best_alpha = RiskLevel::zero();
    std::vector<HPoint> h_values;
    Real objective = 0.0; // max over valid h values
    Real guarantee = 0.0; // the delta the grid spacing was built for
};

/// RASR-EVaR by reduction: solve the ERM problem at every grid level, score
/// h(alpha_k) = v_0^k(s0) + log(1-beta)/alpha_k (zero penalty at alpha = inf)
/// and return the argmax plan. Ties break toward the larger (more
/// conservative) level. Grid points whose inner solve exceeds the backup cap
/// are flagged invalid and skipped.
EvarSolveReport solve_evar(const ModelEnsemble& ensemble, ConfidenceLevel beta, Real delta,
                           Real tolerance);
EvarSolveReport solve_evar_finite(const ModelEnsemble& ensemble, ConfidenceLevel beta,
                                  Real delta, size_t T);

/// h(alpha): the ERM solve objective at alpha plus the EVaR penalty.
/// alpha = 0 with beta > 0 is rejected (the penalty diverges).
Real h_of_alpha(const ModelEnsemble& ensemble, RiskLevel alpha, ConfidenceLevel beta,
                Real tolerance);
Real h_of_alpha_finite(const ModelEnsemble& ensemble, RiskLevel alpha, ConfidenceLevel beta,
                       size_t T);

} // namespace rasr
