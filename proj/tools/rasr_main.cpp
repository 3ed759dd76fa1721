// rasr: risk-averse soft-robust MDP planning from the command line.
//
// Subcommands: solve-erm, solve-evar, evaluate, report, demo. Artifacts are
// canonical JSON (plus CSV projections); identical configs and seeds produce
// byte-identical files. Exit codes: 0 success, 3 parse, 4 validation,
// 5 domain, 6 resource guard, 7 internal.

#include "rasr/io_json.hpp"
#include "rasr/kernels.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

namespace {

using namespace rasr;

struct CommonInputs {
    std::string mdp_path;
    std::string ensemble_path;
    Real gamma = -1.0; // <0: keep file/builtin value
    int64_t initial_state = -1;
    size_t chain_n = 6;
    Real chain_slip = 0.1;
    size_t chain_models = 5;
    Real chain_perturb = 0.05;
    uint64_t seed = 1;
};

void add_model_options(CLI::App* cmd, CommonInputs& in) {
    cmd->add_option("--mdp", in.mdp_path,
                    "MDP CSV path, or builtin name: counterexample | chain");
    cmd->add_option("--ensemble", in.ensemble_path,
                    "ensemble CSV path, or builtin name: chain");
    cmd->add_option("--gamma", in.gamma, "discount override");
    cmd->add_option("--initial-state", in.initial_state, "initial state override");
    cmd->add_option("--chain-n", in.chain_n, "chain builtin: number of states")
        ->capture_default_str();
    cmd->add_option("--chain-slip", in.chain_slip, "chain builtin: slip probability")
        ->capture_default_str();
    cmd->add_option("--chain-models", in.chain_models, "chain builtin: ensemble size")
        ->capture_default_str();
    cmd->add_option("--chain-perturb", in.chain_perturb,
                    "chain builtin: Dirichlet perturbation")
        ->capture_default_str();
    cmd->add_option("--seed", in.seed, "random seed")->capture_default_str();
}

LoadOptions load_options(const CommonInputs& in) {
    LoadOptions opts;
    if (in.gamma > 0.0) opts.discount = in.gamma;
    if (in.initial_state >= 0) opts.initial_state = static_cast<size_t>(in.initial_state);
    return opts;
}

ModelEnsemble resolve_ensemble(const CommonInputs& in) {
    const std::string& source = !in.ensemble_path.empty() ? in.ensemble_path : in.mdp_path;
    if (source.empty()) {
        throw ValidationError("provide --ensemble or --mdp (path or builtin name)");
    }
    if (source == "chain") {
        ChainParams params;
        params.n_states = in.chain_n;
        params.slip = in.chain_slip;
        params.n_models = in.chain_models;
        params.perturb = in.chain_perturb;
        params.seed = in.seed;
        if (in.gamma > 0.0) params.discount = in.gamma;
        return builtin_chain(params);
    }
    if (source == "counterexample") {
        Mdp mdp = builtin_counterexample();
        if (in.gamma > 0.0) mdp.discount = in.gamma;
        return ModelEnsemble::point_mass(std::move(mdp));
    }
    if (!in.ensemble_path.empty()) {
        return load_ensemble(in.ensemble_path, load_options(in));
    }
    return ModelEnsemble::point_mass(load_mdp(in.mdp_path, load_options(in)));
}

RiskLevel parse_alpha(const std::string& text) {
    if (text == "inf" || text == "infinity") return RiskLevel::infinity();
    try {
        return RiskLevel::of(std::stod(text));
    } catch (const std::invalid_argument&) {
        throw DomainError("cannot parse --alpha value '" + text + "'");
    }
}

std::vector<ConfidenceLevel> parse_levels(const std::string& text) {
    std::vector<ConfidenceLevel> levels;
    size_t start = 0;
    while (start <= text.size()) {
        const size_t comma = text.find(',', start);
        const std::string field =
            text.substr(start, comma == std::string::npos ? std::string::npos
                                                          : comma - start);
        if (!field.empty()) levels.push_back(ConfidenceLevel::of(std::stod(field)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (levels.empty()) throw DomainError("no confidence levels given");
    return levels;
}

void emit(const std::string& out_dir, const std::string& name, const std::string& body) {
    std::filesystem::create_directories(out_dir);
    write_file((std::filesystem::path(out_dir) / name).string(), body);
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start)
            .count();
    }
};

int run_solve_erm(const CommonInputs& in, const std::string& alpha_text,
                  std::optional<size_t> horizon, Real tolerance,
                  const std::string& out_dir) {
    Timer timer;
    const ModelEnsemble ensemble = resolve_ensemble(in);
    const RiskLevel alpha = parse_alpha(alpha_text);
    const ErmSolveReport report = horizon ? solve_finite(ensemble, alpha, *horizon)
                                          : solve_infinite(ensemble, alpha, tolerance);
    emit(out_dir, "erm_solution.json", to_json(report));
    std::printf("solve-erm: objective=%.12g loss_bound=%s horizon=%zu wall_ms=%.1f\n",
                report.objective,
                report.loss_bound ? std::to_string(*report.loss_bound).c_str() : "n/a",
                report.horizon_used, timer.ms());
    return 0;
}

int run_solve_evar(const CommonInputs& in, Real beta, Real delta,
                   std::optional<size_t> horizon, Real tolerance,
                   const std::string& out_dir) {
    Timer timer;
    const ModelEnsemble ensemble = resolve_ensemble(in);
    const ConfidenceLevel level = ConfidenceLevel::of(beta);
    const EvarSolveReport report = horizon
        ? solve_evar_finite(ensemble, level, delta, *horizon)
        : solve_evar(ensemble, level, delta, tolerance);
    emit(out_dir, "evar_solution.json", to_json(report));
    std::printf("solve-evar: objective=%.12g best_alpha=%g guarantee=%g grid=%zu "
                "wall_ms=%.1f\n",
                report.objective, report.best_alpha.value(), report.guarantee,
                report.h_values.size(), timer.ms());
    return 0;
}

int run_evaluate(const CommonInputs& in, const std::string& plan_path, size_t episodes,
                 size_t horizon, const std::string& rollout, const std::string& levels_text,
                 const std::string& out_dir, const std::string& format) {
    Timer timer;
    const ModelEnsemble ensemble = resolve_ensemble(in);
    const PolicyPlan plan = plan_from_json(read_file(plan_path));
    const RolloutModel mode =
        rollout == "mean" ? RolloutModel::Mean : RolloutModel::Ensemble;
    const ReturnSample sample =
        simulate(ensemble, plan, episodes, horizon, in.seed, mode, plan_path);
    const RiskReport report = risk_report(sample, parse_levels(levels_text));
    if (format == "csv") {
        emit(out_dir, "returns.csv", to_csv(sample));
        emit(out_dir, "risk_report.csv", to_csv(report));
    } else {
        emit(out_dir, "returns.json", to_json(sample));
        emit(out_dir, "risk_report.json", to_json(report));
    }
    std::printf("evaluate: episodes=%zu mean=%.12g wall_ms=%.1f\n", sample.episodes,
                report.mean, timer.ms());
    return 0;
}

int run_report(const std::string& sample_path, const std::string& levels_text,
               const std::string& out_dir, const std::string& format) {
    Timer timer;
    const ReturnSample sample = sample_from_json(read_file(sample_path));
    const RiskReport report = risk_report(sample, parse_levels(levels_text));
    if (format == "csv") {
        emit(out_dir, "risk_report.csv", to_csv(report));
    } else {
        emit(out_dir, "risk_report.json", to_json(report));
    }
    std::printf("report: episodes=%zu mean=%.12g wall_ms=%.1f\n", sample.episodes,
                report.mean, timer.ms());
    return 0;
}

int run_demo(const CommonInputs& in, size_t episodes, size_t horizon, Real beta, Real delta,
             Real tolerance, const std::string& out_dir) {
    Timer timer;
    CommonInputs chain_in = in;
    chain_in.ensemble_path = "chain";
    const ModelEnsemble ensemble = resolve_ensemble(chain_in);
    const EvarSolveReport solved =
        solve_evar(ensemble, ConfidenceLevel::of(beta), delta, tolerance);
    const ReturnSample sample = simulate(ensemble, solved.plan, episodes, horizon, in.seed,
                                         RolloutModel::Ensemble, "rasr-evar");
    const RiskReport report = risk_report(
        sample, {ConfidenceLevel::of(0.9), ConfidenceLevel::of(0.95),
                 ConfidenceLevel::of(0.99)});
    emit(out_dir, "evar_solution.json", to_json(solved));
    emit(out_dir, "returns.json", to_json(sample));
    emit(out_dir, "risk_report.json", to_json(report));
    std::printf("demo: objective=%.12g best_alpha=%g mean_return=%.12g wall_ms=%.1f\n",
                solved.objective, solved.best_alpha.value(), report.mean, timer.ms());
    for (const RiskReportRow& row : report.rows) {
        std::printf("  %s[%.2f] = %.12g\n", row.measure.c_str(), row.beta, row.value);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Risk-averse soft-robust MDP planning (ERM / EVaR dynamic programming)"};
    app.require_subcommand(1);

    CommonInputs in;
    std::string alpha_text = "1";
    Real beta = 0.9;
    Real delta = 0.05;
    Real tolerance = 1e-6;
    std::optional<size_t> horizon;
    size_t episodes = 10000;
    size_t sim_horizon = 200;
    std::string rollout = "ensemble";
    std::string out_dir = ".";
    std::string format = "json";
    std::string plan_path;
    std::string sample_path;
    std::string levels_text = "0.9,0.95,0.99";

    auto* solve_erm = app.add_subcommand("solve-erm", "ERM dynamic program");
    add_model_options(solve_erm, in);
    solve_erm->add_option("--alpha", alpha_text, "risk level (number or 'inf')")
        ->capture_default_str();
    solve_erm->add_option("--horizon", horizon, "finite horizon (omit for discounted)");
    solve_erm->add_option("--tolerance", tolerance, "infinite-horizon loss tolerance")
        ->capture_default_str();
    solve_erm->add_option("--out", out_dir, "output directory")->capture_default_str();

    auto* solve_evar_cmd = app.add_subcommand("solve-evar", "EVaR planner (grid of ERM solves)");
    add_model_options(solve_evar_cmd, in);
    solve_evar_cmd->add_option("--beta", beta, "EVaR confidence level")
        ->capture_default_str();
    solve_evar_cmd->add_option("--delta", delta, "grid suboptimality target")
        ->capture_default_str();
    solve_evar_cmd->add_option("--horizon", horizon, "finite horizon (omit for discounted)");
    solve_evar_cmd->add_option("--tolerance", tolerance, "inner solver tolerance")
        ->capture_default_str();
    solve_evar_cmd->add_option("--out", out_dir, "output directory")->capture_default_str();

    auto* evaluate = app.add_subcommand("evaluate", "Monte-Carlo policy evaluation");
    add_model_options(evaluate, in);
    evaluate->add_option("--plan", plan_path, "policy plan JSON (solver artifact)")
        ->required();
    evaluate->add_option("--episodes", episodes, "episode count")->capture_default_str();
    evaluate->add_option("--horizon", sim_horizon, "rollout horizon")->capture_default_str();
    evaluate
        ->add_option("--rollout-model", rollout,
                     "draw dynamics from the ensemble or the mean model")
        ->check(CLI::IsMember({"ensemble", "mean"}))
        ->capture_default_str();
    evaluate->add_option("--levels", levels_text, "confidence levels, comma separated")
        ->capture_default_str();
    evaluate->add_option("--out", out_dir, "output directory")->capture_default_str();
    evaluate->add_option("--format", format, "artifact format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();

    auto* report_cmd = app.add_subcommand("report", "risk measures of a saved sample");
    report_cmd->add_option("--sample", sample_path, "ReturnSample JSON artifact")
        ->required();
    report_cmd->add_option("--levels", levels_text, "confidence levels, comma separated")
        ->capture_default_str();
    report_cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
    report_cmd->add_option("--format", format, "artifact format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();

    auto* demo = app.add_subcommand(
        "demo", "chain ensemble: solve EVaR at beta=0.9, simulate, report");
    add_model_options(demo, in);
    demo->add_option("--beta", beta, "EVaR confidence level")->capture_default_str();
    demo->add_option("--delta", delta, "grid suboptimality target")->capture_default_str();
    demo->add_option("--tolerance", tolerance, "inner solver tolerance")
        ->capture_default_str();
    demo->add_option("--episodes", episodes, "episode count")->capture_default_str();
    demo->add_option("--horizon", sim_horizon, "rollout horizon")->capture_default_str();
    demo->add_option("--out", out_dir, "output directory")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve_erm->parsed()) {
            return run_solve_erm(in, alpha_text, horizon, tolerance, out_dir);
        }
        if (solve_evar_cmd->parsed()) {
            return run_solve_evar(in, beta, delta, horizon, tolerance, out_dir);
        }
        if (evaluate->parsed()) {
            return run_evaluate(in, plan_path, episodes, sim_horizon, rollout, levels_text,
                                out_dir, format);
        }
        if (report_cmd->parsed()) {
            return run_report(sample_path, levels_text, out_dir, format);
        }
        if (demo->parsed()) {
            return run_demo(in, episodes, sim_horizon, beta, delta, tolerance, out_dir);
        }
    } catch (const ParseError& e) {
        std::cerr << "{\"error\":{\"code\":3,\"type\":\"parse\",\"message\":\"" << e.what()
                  << "\"}}\n";
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "{\"error\":{\"code\":4,\"type\":\"validation\",\"message\":\""
                  << e.what() << "\"}}\n";
        return 4;
    } catch (const DomainError& e) {
        std::cerr << "{\"error\":{\"code\":5,\"type\":\"domain\",\"message\":\"" << e.what()
                  << "\"}}\n";
        return 5;
    } catch (const SizeGuardError& e) {
        std::cerr << "{\"error\":{\"code\":6,\"type\":\"size_guard\",\"message\":\""
                  << e.what() << "\"}}\n";
        return 6;
    } catch (const HorizonCapError& e) {
        std::cerr << "{\"error\":{\"code\":6,\"type\":\"horizon_cap\",\"message\":\""
                  << e.what() << "\"}}\n";
        return 6;
    } catch (const std::exception& e) {
        std::cerr << "{\"error\":{\"code\":7,\"type\":\"internal\",\"message\":\""
                  << e.what() << "\"}}\n";
        return 7;
    }
    return 0;
}
