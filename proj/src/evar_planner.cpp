#include "rasr/evar_planner.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>

namespace rasr {

namespace {

AlphaGrid grid_with_horizon_factor(ConfidenceLevel beta, Real delta, Real reward_span,
                                   Real horizon_factor) {
    if (!(delta > 0.0)) throw DomainError("grid spacing delta must be positive");
    AlphaGrid grid;
    grid.delta = delta;
    grid.beta = beta.beta();
    if (beta.beta() == 0.0) {
        // EVaR^0 = E: a single risk-neutral level.
        grid.levels.push_back(RiskLevel::zero());
        grid.K = 0;
        return grid;
    }
    if (!(reward_span >= 0.0)) throw DomainError("reward span must be nonnegative");
    const Real neg_log = -std::log1p(-beta.beta()); // -log(1-beta) > 0
    const Real k_bound = std::sqrt(neg_log / 8.0) * reward_span * horizon_factor / delta;
    const auto K = static_cast<size_t>(std::max(Real(1), std::ceil(k_bound)));
    if (K > kMaxGridPoints) {
        throw DomainError("grid would need " + std::to_string(K) +
                          " levels, above the cap of " + std::to_string(kMaxGridPoints));
    }
    grid.K = K;
    grid.levels.reserve(K + 1);
    grid.levels.push_back(RiskLevel::infinity());
    for (size_t k = 1; k <= K; ++k) {
        grid.levels.push_back(RiskLevel::of(neg_log / (static_cast<Real>(k) * delta)));
    }
    return grid;
}

} // namespace

AlphaGrid build_grid(ConfidenceLevel beta, Real delta, Real reward_span, Real gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw DomainError("grid construction needs gamma in (0, 1); "
                          "use the finite-horizon variant otherwise");
    }
    return grid_with_horizon_factor(beta, delta, reward_span, 1.0 / (1.0 - gamma));
}

AlphaGrid build_grid_finite(ConfidenceLevel beta, Real delta, Real reward_span, Real gamma,
                            size_t T) {
    if (T < 1) throw DomainError("finite horizon must be at least 1");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in (0, 1]");
    const Real effective = gamma < 1.0
        ? std::min(static_cast<Real>(T), 1.0 / (1.0 - gamma))
        : static_cast<Real>(T);
    return grid_with_horizon_factor(beta, delta, reward_span, effective);
}

namespace {

Real penalty(Real alpha, Real beta) {
    if (beta == 0.0 || std::isinf(alpha)) return 0.0; // log(1 - beta) vanishes
    return std::log1p(-beta) / alpha;
}

template <typename SolveFn>
EvarSolveReport run_grid(const ModelEnsemble& ensemble, ConfidenceLevel beta,
                         const AlphaGrid& grid, const SolveFn& solve) {
    if (grid.levels.empty()) throw std::logic_error("empty risk-level grid");

    struct PointResult {
        Real h = -std::numeric_limits<Real>::infinity();
        bool valid = false;
        ErmSolveReport solve;
    };
    std::vector<PointResult> results(grid.levels.size());
    std::atomic<bool> failed{false};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    // Grid points are independent solves; scoring below is order-free, so
    // parallel evaluation matches the sequential result.
    parallel_chunks(0, grid.levels.size(), 1, [&](size_t lo, size_t hi) {
        for (size_t k = lo; k < hi; ++k) {
            try {
                results[k].solve = solve(ensemble, grid.levels[k]);
                results[k].h =
                    results[k].solve.objective + penalty(grid.levels[k].value(), beta.beta());
                results[k].valid = true;
            } catch (const HorizonCapError&) {
                results[k].valid = false; // reported, not silently used
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failed.exchange(true)) failure = std::current_exception();
            }
        }
    });
    if (failed.load()) std::rethrow_exception(failure);

    // Argmax with ties toward the larger alpha: levels descend, so a strict
    // improvement test keeps the earliest (most conservative) winner.
    size_t best = grid.levels.size();
    for (size_t k = 0; k < grid.levels.size(); ++k) {
        if (!results[k].valid) continue;
        if (best == grid.levels.size() || results[k].h > results[best].h) best = k;
    }
    if (best == grid.levels.size()) {
        throw HorizonCapError("every grid point exceeded the solver's backup cap");
    }

    EvarSolveReport report;
    report.guarantee = grid.delta;
    report.best_alpha = grid.levels[best];
    report.objective = results[best].h;
    report.plan = std::move(results[best].solve.plan);
    report.h_values.reserve(grid.levels.size());
    for (size_t k = 0; k < grid.levels.size(); ++k) {
        report.h_values.push_back(
            {grid.levels[k].value(), results[k].valid ? results[k].h : 0.0,
             results[k].valid});
    }
    return report;
}

} // namespace

EvarSolveReport solve_evar(const ModelEnsemble& ensemble, ConfidenceLevel beta, Real delta,
                           Real tolerance) {
    ensemble.validate();
    const Mdp& nominal = ensemble.nominal;
    if (beta.beta() == 0.0) {
        AlphaGrid grid;
        grid.delta = delta;
        grid.levels.push_back(RiskLevel::zero());
        return run_grid(ensemble, beta, grid,
                        [&](const ModelEnsemble& e, RiskLevel a) {
                            return solve_infinite(e, a, tolerance);
                        });
    }
    const AlphaGrid grid = build_grid(beta, delta, nominal.reward_span(), nominal.discount);
    return run_grid(ensemble, beta, grid, [&](const ModelEnsemble& e, RiskLevel a) {
        return solve_infinite(e, a, tolerance);
    });
}

EvarSolveReport solve_evar_finite(const ModelEnsemble& ensemble, ConfidenceLevel beta,
                                  Real delta, size_t T) {
    ensemble.validate();
    const Mdp& nominal = ensemble.nominal;
    if (beta.beta() == 0.0) {
        AlphaGrid grid;
        grid.delta = delta;
        grid.levels.push_back(RiskLevel::zero());
        return run_grid(ensemble, beta, grid,
                        [&](const ModelEnsemble& e, RiskLevel a) {
                            return solve_finite(e, a, T);
                        });
    }
    const AlphaGrid grid =
        build_grid_finite(beta, delta, nominal.reward_span(), nominal.discount, T);
    return run_grid(ensemble, beta, grid, [&](const ModelEnsemble& e, RiskLevel a) {
        return solve_finite(e, a, T);
    });
}

namespace {

void check_h_domain(RiskLevel alpha, ConfidenceLevel beta) {
    if (alpha.is_zero() && beta.beta() > 0.0) {
        throw DomainError("h(0) is undefined for beta > 0: the penalty diverges");
    }
}

} // namespace

Real h_of_alpha(const ModelEnsemble& ensemble, RiskLevel alpha, ConfidenceLevel beta,
                Real tolerance) {
    check_h_domain(alpha, beta);
    const ErmSolveReport report = solve_infinite(ensemble, alpha, tolerance);
    return report.objective + penalty(alpha.value(), beta.beta());
}

Real h_of_alpha_finite(const ModelEnsemble& ensemble, RiskLevel alpha, ConfidenceLevel beta,
                       size_t T) {
    check_h_domain(alpha, beta);
    const ErmSolveReport report = solve_finite(ensemble, alpha, T);
    return report.objective + penalty(alpha.value(), beta.beta());
}

} // namespace rasr
