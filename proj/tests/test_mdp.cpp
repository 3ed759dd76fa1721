#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rasr/mdp.hpp"
#include "test_support.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace rasr;

namespace {

std::string write_temp(const std::string& name, const std::string& body) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << body;
    return path.string();
}

Mdp two_state_mdp() {
    Mdp mdp;
    mdp.n_states = 2;
    mdp.n_actions = 1;
    mdp.discount = 0.9;
    mdp.initial_state = 0;
    mdp.reward = {1.0, 0.0};
    mdp.transition = {1.0, 0.0, 0.0, 1.0};
    mdp.validate();
    return mdp;
}

} // namespace

TEST_CASE("mean model of identical models is that model") {
    const Mdp base = two_state_mdp();
    ModelEnsemble ensemble;
    ensemble.nominal = base;
    ensemble.models = {base.transition, base.transition};
    ensemble.weights = {0.3, 0.7};
    const Mdp mean = mean_model(ensemble);
    CHECK(mean.transition == base.transition);
}

TEST_CASE("mean model averages elementwise") {
    std::mt19937_64 gen(77);
    const Mdp a = testsupport::random_mdp(gen, 3, 2, 0.9);
    const Mdp b = testsupport::random_mdp(gen, 3, 2, 0.9);
    ModelEnsemble ensemble;
    ensemble.nominal = a;
    ensemble.models = {a.transition, b.transition};
    ensemble.weights = {0.5, 0.5};
    const Mdp mean = mean_model(ensemble);
    for (size_t i = 0; i < mean.transition.size(); ++i) {
        CHECK(mean.transition[i] ==
              doctest::Approx((a.transition[i] + b.transition[i]) / 2).epsilon(1e-15));
    }

    // Three models, fixed weights, rows re-stochastic.
    const Mdp c = testsupport::random_mdp(gen, 3, 2, 0.9);
    ensemble.models = {a.transition, b.transition, c.transition};
    ensemble.weights = {0.2, 0.3, 0.5};
    const Mdp mean3 = mean_model(ensemble);
    for (size_t i = 0; i < mean3.transition.size(); ++i) {
        const Real direct = 0.2 * a.transition[i] + 0.3 * b.transition[i] +
                            0.5 * c.transition[i];
        CHECK(mean3.transition[i] == doctest::Approx(direct).epsilon(1e-13));
    }
    for (size_t s = 0; s < 3; ++s) {
        for (size_t act = 0; act < 2; ++act) {
            const auto row = mean3.row(s, act);
            CHECK(compensated_sum(row.data(), row.size()) ==
                  doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("mean model is linear in the weights") {
    std::mt19937_64 gen(31);
    ModelEnsemble e = testsupport::random_ensemble(gen, 3, 2, 3, 0.9);
    ModelEnsemble f = e;
    f.weights = {0.6, 0.1, 0.3};
    const Real lambda = 0.25;

    ModelEnsemble mixed = e;
    for (size_t m = 0; m < 3; ++m) {
        mixed.weights[m] = lambda * e.weights[m] + (1 - lambda) * f.weights[m];
    }
    const Mdp mean_e = mean_model(e);
    const Mdp mean_f = mean_model(f);
    const Mdp mean_mixed = mean_model(mixed);
    for (size_t i = 0; i < mean_mixed.transition.size(); ++i) {
        const Real expect = lambda * mean_e.transition[i] + (1 - lambda) * mean_f.transition[i];
        CHECK(mean_mixed.transition[i] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("mean model of a point mass is exact") {
    const Mdp base = two_state_mdp();
    const ModelEnsemble point = ModelEnsemble::point_mass(base);
    CHECK(mean_model(point).transition == base.transition);
    ModelEnsemble empty;
    empty.nominal = base;
    CHECK_THROWS_AS(mean_model(empty), ValidationError);
}

TEST_CASE("mdp csv loader") {
    const std::string good = "# gamma = 0.5\n# initial_state = 1\n"
                             "id_state,id_action,id_next_state,probability,reward\n"
                             "0,0,0,1,1\n"
                             "1,0,1,1,0\n";
    const Mdp mdp = load_mdp(write_temp("rasr_good.csv", good));
    CHECK(mdp.n_states == 2);
    CHECK(mdp.n_actions == 1);
    CHECK(mdp.discount == 0.5);
    CHECK(mdp.initial_state == 1);
    CHECK(mdp.reward_at(0, 0) == 1.0);

    LoadOptions override_opts;
    override_opts.discount = 0.75;
    override_opts.initial_state = 0;
    const Mdp overridden = load_mdp(write_temp("rasr_good.csv", good), override_opts);
    CHECK(overridden.discount == 0.75);
    CHECK(overridden.initial_state == 0);
}

TEST_CASE("loader rejects a non-stochastic row and names the problem") {
    const std::string bad = "id_state,id_action,id_next_state,probability,reward\n"
                            "0,0,0,1.5,1\n";
    try {
        load_mdp(write_temp("rasr_bad_prob.csv", bad));
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("row-stochastic") != std::string::npos);
    }
}

TEST_CASE("loader rejects conflicting rewards on one state-action pair") {
    const std::string bad = "id_state,id_action,id_next_state,probability,reward\n"
                            "0,0,0,0.5,1\n"
                            "0,0,1,0.5,2\n"
                            "1,0,1,1,0\n";
    try {
        load_mdp(write_temp("rasr_bad_reward.csv", bad));
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("reward") != std::string::npos);
    }
}

TEST_CASE("loader reports the line of a malformed field") {
    const std::string bad = "id_state,id_action,id_next_state,probability,reward\n"
                            "0,0,0,1,1\n"
                            "0,zzz,1,0.5,1\n";
    try {
        load_mdp(write_temp("rasr_bad_field.csv", bad));
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("ensemble csv loader") {
    const std::string body = "# gamma = 0.8\n"
                             "id_model,weight,id_state,id_action,id_next_state,probability,reward\n"
                             "0,0.25,0,0,0,1,1\n"
                             "0,0.25,1,0,1,1,0\n"
                             "1,0.75,0,0,1,1,1\n"
                             "1,0.75,1,0,1,1,0\n";
    const ModelEnsemble ensemble = load_ensemble(write_temp("rasr_ens.csv", body));
    CHECK(ensemble.models.size() == 2);
    CHECK(ensemble.weights == numvec{0.25, 0.75});
    CHECK(ensemble.nominal.discount == 0.8);
    CHECK(ensemble.nominal.n_states == 2);
}

TEST_CASE("save and load round-trips bit-exactly") {
    std::mt19937_64 gen(123);
    const Mdp mdp = testsupport::random_mdp(gen, 4, 3, 0.95);
    const std::string path =
        (std::filesystem::temp_directory_path() / "rasr_roundtrip.csv").string();
    save_mdp(mdp, path);
    const Mdp loaded = load_mdp(path);
    CHECK(loaded.n_states == mdp.n_states);
    CHECK(loaded.n_actions == mdp.n_actions);
    CHECK(loaded.discount == mdp.discount);
    CHECK(loaded.initial_state == mdp.initial_state);
    CHECK(loaded.reward == mdp.reward);
    CHECK(loaded.transition == mdp.transition);

    ModelEnsemble ensemble = testsupport::random_ensemble(gen, 3, 2, 3, 0.9);
    const std::string epath =
        (std::filesystem::temp_directory_path() / "rasr_roundtrip_ens.csv").string();
    save_ensemble(ensemble, epath);
    const ModelEnsemble eloaded = load_ensemble(epath);
    CHECK(eloaded.models == ensemble.models);
    CHECK(eloaded.weights == ensemble.weights);
}

TEST_CASE("builtin counterexample matches its published structure") {
    const Mdp mdp = builtin_counterexample();
    CHECK(mdp.n_states == 4);
    CHECK(mdp.n_actions == 2);
    CHECK(mdp.discount == 1.0);
    CHECK(mdp.initial_state == 0);
    CHECK(mdp.row(0, 1)[3] == 0.98);
    CHECK(mdp.row(0, 1)[1] == 0.02);
    CHECK(mdp.row(0, 0)[2] == 1.0);
    for (size_t s = 0; s < 4; ++s) {
        for (size_t a = 0; a < 2; ++a) {
            const auto row = mdp.row(s, a);
            CHECK(compensated_sum(row.data(), row.size()) == doctest::Approx(1.0));
        }
    }
    CHECK(mdp.reward_at(1, 0) == -2.0);
    CHECK(mdp.reward_at(2, 1) == 0.0);
    CHECK(mdp.reward_at(3, 0) == 1.0);
}

TEST_CASE("builtin chain") {
    ChainParams params;
    params.n_states = 5;
    params.slip = 0.2;
    params.n_models = 3;

    SUBCASE("zero perturbation copies the nominal chain") {
        params.perturb = 0.0;
        const ModelEnsemble ensemble = builtin_chain(params);
        CHECK(ensemble.models.size() == 3);
        for (const numvec& model : ensemble.models) {
            CHECK(model == ensemble.nominal.transition);
        }
    }

    SUBCASE("same seed gives bit-identical ensembles") {
        params.perturb = 0.1;
        params.seed = 99;
        const ModelEnsemble first = builtin_chain(params);
        const ModelEnsemble second = builtin_chain(params);
        CHECK(first.models == second.models);
        CHECK(first.weights == second.weights);
        params.seed = 100;
        const ModelEnsemble third = builtin_chain(params);
        CHECK(first.models != third.models);
    }

    SUBCASE("structure: n states, two actions, stochastic rows") {
        params.perturb = 0.05;
        const ModelEnsemble ensemble = builtin_chain(params);
        CHECK(ensemble.nominal.n_states == 5);
        CHECK(ensemble.nominal.n_actions == 2);
        ensemble.validate();
        // risky action from home advances with probability 1 - slip
        CHECK(ensemble.nominal.row(0, 1)[1] == doctest::Approx(0.8));
    }

    SUBCASE("parameter validation") {
        params.slip = 1.0;
        CHECK_THROWS_AS(builtin_chain(params), DomainError);
        params.slip = 0.2;
        params.n_states = 1;
        CHECK_THROWS_AS(builtin_chain(params), DomainError);
    }
}

TEST_CASE("policy plan coverage and validation") {
    PolicyPlan plan;
    plan.rules = {DecisionRule{0, 1}, DecisionRule{1, 0}};
    CHECK_FALSE(plan.covers(3));
    CHECK_THROWS_AS(plan.rule_at(2), ValidationError);
    plan.tail_rule = DecisionRule{0, 0};
    CHECK(plan.covers(100));
    CHECK(plan.rule_at(7) == *plan.tail_rule);
    plan.validate(2, 2);
    PolicyPlan bad = plan;
    bad.rules[0][1] = 5;
    CHECK_THROWS_AS(bad.validate(2, 2), ValidationError);
}

TEST_CASE("ensemble loader rejects conflicting model weights") {
    const std::string bad = "id_model,weight,id_state,id_action,id_next_state,probability,reward\n"
                            "0,0.5,0,0,0,1,1\n"
                            "0,0.6,1,0,1,1,0\n";
    try {
        load_ensemble(write_temp("rasr_bad_weight.csv", bad));
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("weight") != std::string::npos);
    }
}
