#pragma once

#include "rasr/distribution.hpp"
#include "rasr/mdp.hpp"
#include "rasr/risk.hpp"

#include <string>

namespace rasr {

/// Whether rollouts redraw a model from the posterior at every step (the
/// dynamic uncertainty model) or follow the mean model throughout. Under
/// time-independent redraws the two give the same trajectory law; both are
/// kept selectable for diagnostics.
enum class RolloutModel { Ensemble, Mean };

struct ReturnSample {
    numvec returns;
    size_t episodes = 0;
    size_t horizon = 0;
    uint64_t seed = 0;
    std::string policy_tag;
    /// gamma^horizon * span(r) / (1 - gamma): what truncating the discounted
    /// sum at the horizon can cost. Infinite when gamma = 1.
    Real truncation_bias_bound = 0.0;
};

/// Rolls out a plan for the given number of episodes. Episode e draws from
/// Philox substream e: one block per step supplies the model draw and the
/// successor draw, so results are bit-identical for any thread count.
ReturnSample simulate(const ModelEnsemble& ensemble, const PolicyPlan& plan,
                      size_t episodes, size_t horizon, uint64_t seed,
                      RolloutModel rollout = RolloutModel::Ensemble,
                      std::string policy_tag = {});

struct RiskReportRow {
    std::string measure; // "var" | "cvar" | "evar"
    Real beta;
    Real value;
};

struct RiskReport {
    std::vector<RiskReportRow> rows;
    Real mean = 0.0;
    size_t episodes = 0;
    size_t horizon = 0;
    uint64_t seed = 0;
    std::string policy_tag;
    Real truncation_bias_bound = 0.0;
    /// Set for samples below 100 episodes; tail measures carry wide
    /// confidence bands there.
    bool small_sample_warning = false;
};

/// Treats the returns as an equal-weight discrete distribution and reports
/// VaR/CVaR/EVaR at each requested level plus the mean.
RiskReport risk_report(const ReturnSample& sample,
                       const std::vector<ConfidenceLevel>& levels);

struct OracleResult {
    Real objective;
    PolicyPlan plan;
};

/// Independent check for the dynamic-programming solvers: enumerates every
/// Markov deterministic plan, materializes its exact return distribution
/// under the mean model, and maximizes the ERM directly. Refuses instances
/// whose plan count times trajectory count exceeds one million.
OracleResult brute_force_oracle(const ModelEnsemble& ensemble, RiskLevel alpha, size_t T);

/// Exact distribution of the T-step return of a plan under the given MDP,
/// obtained by full trajectory enumeration (equal outcomes merged).
DiscreteDistribution exact_return_distribution(const Mdp& mdp, const PolicyPlan& plan,
                                               size_t T);

} // namespace rasr
