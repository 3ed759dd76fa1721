#include "rasr/mdp.hpp"

#include "rasr/rng.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <utility>

namespace rasr {

namespace {

constexpr Real kRowSumTolerance = 1e-9;
constexpr Real kMeanDriftTolerance = 1e-12;

std::string sa_label(size_t s, size_t a) {
    return "state " + std::to_string(s) + " action " + std::to_string(a);
}

} // namespace

Real Mdp::reward_span() const {
    const auto [lo, hi] = std::minmax_element(reward.begin(), reward.end());
    return *hi - *lo;
}

void Mdp::validate() const {
    if (n_states == 0 || n_actions == 0) {
        throw ValidationError("MDP needs at least one state and one action");
    }
    if (reward.size() != n_states * n_actions) {
        throw ValidationError("reward table size mismatch");
    }
    if (transition.size() != n_states * n_actions * n_states) {
        throw ValidationError("transition table size mismatch");
    }
    for (Real r : reward) {
        if (!std::isfinite(r)) throw ValidationError("reward table contains non-finite value");
    }
    for (size_t s = 0; s < n_states; ++s) {
        for (size_t a = 0; a < n_actions; ++a) {
            const auto probs = row(s, a);
            for (Real p : probs) {
                if (!(p >= 0.0)) {
                    throw ValidationError("negative transition probability at " +
                                          sa_label(s, a));
                }
            }
            const Real sum = compensated_sum(probs.data(), probs.size());
            if (std::abs(sum - 1.0) > kRowSumTolerance) {
                throw ValidationError("transition row at " + sa_label(s, a) +
                                      " sums to " + std::to_string(sum) +
                                      ", violating row-stochasticity");
            }
        }
    }
    if (!(discount > 0.0 && discount <= 1.0)) {
        throw ValidationError("discount must lie in (0, 1]");
    }
    if (initial_state >= n_states) {
        throw ValidationError("initial state out of range");
    }
}

const DecisionRule& PolicyPlan::rule_at(size_t t) const {
    if (t < rules.size()) return rules[t];
    if (tail_rule) return *tail_rule;
    throw ValidationError("policy plan does not cover time step " + std::to_string(t));
}

void PolicyPlan::validate(size_t n_states, size_t n_actions) const {
    auto check = [&](const DecisionRule& rule) {
        if (rule.size() != n_states) {
            throw ValidationError("decision rule covers " + std::to_string(rule.size()) +
                                  " states, expected " + std::to_string(n_states));
        }
        for (int32_t a : rule) {
            if (a < 0 || static_cast<size_t>(a) >= n_actions) {
                throw ValidationError("decision rule uses invalid action index " +
                                      std::to_string(a));
            }
        }
    };
    for (const DecisionRule& rule : rules) check(rule);
    if (tail_rule) check(*tail_rule);
}

void ModelEnsemble::validate() const {
    nominal.validate();
    if (models.empty()) throw ValidationError("ensemble has no models");
    if (weights.size() != models.size()) {
        throw ValidationError("ensemble weight count does not match model count");
    }
    const size_t table = nominal.n_states * nominal.n_actions * nominal.n_states;
    for (size_t m = 0; m < models.size(); ++m) {
        if (models[m].size() != table) {
            throw ValidationError("model " + std::to_string(m) +
                                  " transition table size mismatch");
        }
        for (size_t s = 0; s < nominal.n_states; ++s) {
            for (size_t a = 0; a < nominal.n_actions; ++a) {
                const Real* first = models[m].data() +
                                    (s * nominal.n_actions + a) * nominal.n_states;
                for (size_t i = 0; i < nominal.n_states; ++i) {
                    if (!(first[i] >= 0.0)) {
                        throw ValidationError("model " + std::to_string(m) +
                                              " has a negative probability at " +
                                              sa_label(s, a));
                    }
                }
                const Real sum = compensated_sum(first, nominal.n_states);
                if (std::abs(sum - 1.0) > kRowSumTolerance) {
                    throw ValidationError("model " + std::to_string(m) + " row at " +
                                          sa_label(s, a) + " is not stochastic");
                }
            }
        }
    }
    auto check_weights = [](const numvec& w) {
        for (Real v : w) {
            if (!(v >= 0.0)) throw ValidationError("ensemble weight is negative");
        }
        const Real sum = compensated_sum(w);
        if (std::abs(sum - 1.0) > kRowSumTolerance) {
            throw ValidationError("ensemble weights sum to " + std::to_string(sum) +
                                  ", expected 1");
        }
    };
    check_weights(weights);
    for (const numvec& w : step_weights) {
        if (w.size() != models.size()) {
            throw ValidationError("per-step weights do not match model count");
        }
        check_weights(w);
    }
    if (!step_weights.empty() && stationary) {
        throw ValidationError("per-step weights require the nonstationary flag");
    }
}

ModelEnsemble ModelEnsemble::point_mass(Mdp mdp) {
    mdp.validate();
    ModelEnsemble ensemble;
    ensemble.models.push_back(mdp.transition);
    ensemble.weights = {1.0};
    ensemble.nominal = std::move(mdp);
    return ensemble;
}

namespace {

Mdp mean_with_weights(const ModelEnsemble& ensemble, const numvec& weights) {
    Mdp out = ensemble.nominal;
    const size_t table = out.n_states * out.n_actions * out.n_states;
    numvec mixed(table, 0.0);
    for (size_t m = 0; m < ensemble.models.size(); ++m) {
        const Real w = weights[m];
        if (w == 0.0) continue;
        const Real* src = ensemble.models[m].data();
        for (size_t i = 0; i < table; ++i) mixed[i] += w * src[i];
    }
    for (size_t s = 0; s < out.n_states; ++s) {
        for (size_t a = 0; a < out.n_actions; ++a) {
            Real* first = mixed.data() + (s * out.n_actions + a) * out.n_states;
            const Real sum = compensated_sum(first, out.n_states);
            if (std::abs(sum - 1.0) > kMeanDriftTolerance) {
                for (size_t i = 0; i < out.n_states; ++i) first[i] /= sum;
            }
        }
    }
    out.transition = std::move(mixed);
    return out;
}

} // namespace

Mdp mean_model(const ModelEnsemble& ensemble) {
    ensemble.validate();
    return mean_with_weights(ensemble, ensemble.weights);
}

Mdp mean_model_at(const ModelEnsemble& ensemble, size_t t) {
    ensemble.validate();
    return mean_with_weights(ensemble, ensemble.weights_at(t));
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

namespace {

struct Metadata {
    std::optional<Real> gamma;
    std::optional<size_t> initial_state;
};

std::string_view trim(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t' ||
                             text.front() == '\r')) {
        text.remove_prefix(1);
    }
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' ||
                             text.back() == '\r')) {
        text.remove_suffix(1);
    }
    return text;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    size_t start = 0;
    while (true) {
        const size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

Real parse_real(std::string_view field, const std::string& path, size_t line) {
    Real value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ParseError(path, line, "cannot parse number '" + std::string(field) + "'");
    }
    return value;
}

size_t parse_index(std::string_view field, const std::string& path, size_t line) {
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size() || value < 0) {
        throw ParseError(path, line, "cannot parse index '" + std::string(field) + "'");
    }
    return static_cast<size_t>(value);
}

void parse_metadata_line(std::string_view body, Metadata& meta, const std::string& path,
                         size_t line) {
    const size_t eq = body.find('=');
    if (eq == std::string_view::npos) return; // plain comment
    const std::string_view key = trim(body.substr(0, eq));
    const std::string_view value = trim(body.substr(eq + 1));
    if (key == "gamma") {
        meta.gamma = parse_real(value, path, line);
    } else if (key == "initial_state") {
        meta.initial_state = parse_index(value, path, line);
    }
}

struct TransitionRow {
    size_t model = 0;
    Real weight = 1.0;
    size_t state;
    size_t action;
    size_t next_state;
    Real probability;
    Real reward;
    size_t line;
};

struct CsvContents {
    std::vector<TransitionRow> rows;
    Metadata meta;
    size_t n_models = 1;
};

CsvContents read_csv(const std::string& path, bool with_model_columns) {
    std::ifstream input(path);
    if (!input) throw ParseError(path, 0, "cannot open file");

    const char* expected_header = with_model_columns
        ? "id_model,weight,id_state,id_action,id_next_state,probability,reward"
        : "id_state,id_action,id_next_state,probability,reward";
    const size_t n_fields = with_model_columns ? 7 : 5;

    CsvContents out;
    std::string line;
    size_t line_no = 0;
    bool header_seen = false;
    size_t max_model = 0;
    while (std::getline(input, line)) {
        ++line_no;
        const std::string_view stripped = trim(line);
        if (stripped.empty()) continue;
        if (stripped.front() == '#') {
            parse_metadata_line(stripped.substr(1), out.meta, path, line_no);
            continue;
        }
        if (!header_seen) {
            std::string normalized;
            for (auto field : split_csv(stripped)) {
                if (!normalized.empty()) normalized += ',';
                normalized += std::string(field);
            }
            if (normalized != expected_header) {
                throw ParseError(path, line_no,
                                 "unexpected header, expected '" +
                                     std::string(expected_header) + "'");
            }
            header_seen = true;
            continue;
        }
        const auto fields = split_csv(stripped);
        if (fields.size() != n_fields) {
            throw ParseError(path, line_no,
                             "expected " + std::to_string(n_fields) + " fields, found " +
                                 std::to_string(fields.size()));
        }
        TransitionRow row;
        size_t f = 0;
        if (with_model_columns) {
            row.model = parse_index(fields[f++], path, line_no);
            row.weight = parse_real(fields[f++], path, line_no);
        }
        row.state = parse_index(fields[f++], path, line_no);
        row.action = parse_index(fields[f++], path, line_no);
        row.next_state = parse_index(fields[f++], path, line_no);
        row.probability = parse_real(fields[f++], path, line_no);
        row.reward = parse_real(fields[f++], path, line_no);
        row.line = line_no;
        max_model = std::max(max_model, row.model);
        out.rows.push_back(row);
    }
    if (!header_seen) throw ParseError(path, line_no, "missing header row");
    if (out.rows.empty()) throw ParseError(path, line_no, "no transition rows");
    out.n_models = max_model + 1;
    return out;
}

struct AssembledTables {
    size_t n_states;
    size_t n_actions;
    numvec reward;
    std::vector<numvec> transitions; // one per model
    numvec weights;
};

AssembledTables assemble(const CsvContents& csv, const std::string& path, size_t n_models) {
    size_t n_states = 0;
    size_t n_actions = 0;
    for (const TransitionRow& row : csv.rows) {
        n_states = std::max({n_states, row.state + 1, row.next_state + 1});
        n_actions = std::max(n_actions, row.action + 1);
    }

    AssembledTables tables;
    tables.n_states = n_states;
    tables.n_actions = n_actions;
    tables.reward.assign(n_states * n_actions, 0.0);
    tables.transitions.assign(n_models, numvec(n_states * n_actions * n_states, 0.0));
    tables.weights.assign(n_models, std::numeric_limits<Real>::quiet_NaN());
    std::vector<char> reward_seen(n_states * n_actions, 0);

    for (const TransitionRow& row : csv.rows) {
        if (row.model >= n_models) {
            throw ParseError(path, row.line, "model index out of range");
        }
        numvec& table = tables.transitions[row.model];
        Real& slot = table[(row.state * n_actions + row.action) * n_states + row.next_state];
        if (slot != 0.0) {
            throw ParseError(path, row.line, "duplicate transition entry");
        }
        if (!(row.probability >= 0.0) || !std::isfinite(row.probability)) {
            throw ParseError(path, row.line, "probability must be finite and nonnegative");
        }
        slot = row.probability;

        const size_t ra = row.state * n_actions + row.action;
        if (reward_seen[ra] && tables.reward[ra] != row.reward) {
            throw ParseError(path, row.line,
                             "conflicting reward for " + sa_label(row.state, row.action) +
                                 ": rewards attach to (state, action) and must agree");
        }
        tables.reward[ra] = row.reward;
        reward_seen[ra] = 1;

        Real& weight = tables.weights[row.model];
        if (std::isnan(weight)) {
            weight = row.weight;
        } else if (weight != row.weight) {
            throw ParseError(path, row.line,
                             "conflicting weight for model " + std::to_string(row.model));
        }
    }

    for (size_t m = 0; m < n_models; ++m) {
        for (size_t s = 0; s < n_states; ++s) {
            for (size_t a = 0; a < n_actions; ++a) {
                const Real* first =
                    tables.transitions[m].data() + (s * n_actions + a) * n_states;
                const Real sum = compensated_sum(first, n_states);
                if (std::abs(sum - 1.0) > kRowSumTolerance) {
                    throw ParseError(path, 0,
                                     (n_models > 1 ? "model " + std::to_string(m) + ", " : "") +
                                         sa_label(s, a) + ": outgoing probabilities sum to " +
                                         std::to_string(sum) +
                                         ", violating row-stochasticity");
                }
            }
        }
    }
    return tables;
}

Mdp finish_mdp(const AssembledTables& tables, const Metadata& meta,
               const LoadOptions& options, numvec transition) {
    Mdp mdp;
    mdp.n_states = tables.n_states;
    mdp.n_actions = tables.n_actions;
    mdp.reward = tables.reward;
    mdp.transition = std::move(transition);
    mdp.discount = options.discount.value_or(meta.gamma.value_or(0.9));
    mdp.initial_state = options.initial_state.value_or(meta.initial_state.value_or(0));
    mdp.validate();
    return mdp;
}

} // namespace

Mdp load_mdp(const std::string& path, const LoadOptions& options) {
    const CsvContents csv = read_csv(path, /*with_model_columns=*/false);
    AssembledTables tables = assemble(csv, path, 1);
    return finish_mdp(tables, csv.meta, options, std::move(tables.transitions[0]));
}

ModelEnsemble load_ensemble(const std::string& path, const LoadOptions& options) {
    const CsvContents csv = read_csv(path, /*with_model_columns=*/true);
    AssembledTables tables = assemble(csv, path, csv.n_models);

    ModelEnsemble ensemble;
    ensemble.weights = tables.weights;
    ensemble.models = std::move(tables.transitions);
    ensemble.nominal = finish_mdp(tables, csv.meta, options, ensemble.models[0]);
    ensemble.validate();
    return ensemble;
}

namespace {

void write_value(std::FILE* f, Real v) {
    // 17 significant digits round-trip binary64 exactly.
    std::fprintf(f, "%.17g", v);
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};

using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_for_write(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw ValidationError("cannot open '" + path + "' for writing");
    return f;
}

void save_rows(std::FILE* f, const Mdp& mdp, const numvec& table,
               const std::optional<std::pair<size_t, Real>>& model_prefix) {
    for (size_t s = 0; s < mdp.n_states; ++s) {
        for (size_t a = 0; a < mdp.n_actions; ++a) {
            for (size_t sn = 0; sn < mdp.n_states; ++sn) {
                const Real p = table[(s * mdp.n_actions + a) * mdp.n_states + sn];
                if (p == 0.0) continue;
                if (model_prefix) {
                    std::fprintf(f, "%zu,", model_prefix->first);
                    write_value(f, model_prefix->second);
                    std::fputc(',', f);
                }
                std::fprintf(f, "%zu,%zu,%zu,", s, a, sn);
                write_value(f, p);
                std::fputc(',', f);
                write_value(f, mdp.reward_at(s, a));
                std::fputc('\n', f);
            }
        }
    }
}

void save_header(std::FILE* f, const Mdp& mdp, bool with_model_columns) {
    std::fprintf(f, "# gamma = ");
    write_value(f, mdp.discount);
    std::fprintf(f, "\n# initial_state = %zu\n", mdp.initial_state);
    std::fprintf(f, "%s\n",
                 with_model_columns
                     ? "id_model,weight,id_state,id_action,id_next_state,probability,reward"
                     : "id_state,id_action,id_next_state,probability,reward");
}

} // namespace

void save_mdp(const Mdp& mdp, const std::string& path) {
    mdp.validate();
    FilePtr f = open_for_write(path);
    save_header(f.get(), mdp, false);
    save_rows(f.get(), mdp, mdp.transition, std::nullopt);
}

void save_ensemble(const ModelEnsemble& ensemble, const std::string& path) {
    ensemble.validate();
    FilePtr f = open_for_write(path);
    save_header(f.get(), ensemble.nominal, true);
    for (size_t m = 0; m < ensemble.models.size(); ++m) {
        save_rows(f.get(), ensemble.nominal, ensemble.models[m],
                  std::make_pair(m, ensemble.weights[m]));
    }
}

// ---------------------------------------------------------------------------
// Built-in domains
// ---------------------------------------------------------------------------

Mdp builtin_counterexample() {
    Mdp mdp;
    mdp.n_states = 4;
    mdp.n_actions = 2;
    mdp.discount = 1.0;
    mdp.initial_state = 0;
    mdp.reward.assign(mdp.n_states * mdp.n_actions, 0.0);
    // Arrival rewards for s1, s2, s3; identical across actions.
    for (size_t a = 0; a < 2; ++a) {
        mdp.reward[1 * 2 + a] = -2.0;
        mdp.reward[2 * 2 + a] = 0.0;
        mdp.reward[3 * 2 + a] = 1.0;
    }
    mdp.transition.assign(mdp.n_states * mdp.n_actions * mdp.n_states, 0.0);
    auto set = [&](size_t s, size_t a, size_t sn, Real p) {
        mdp.transition[(s * 2 + a) * 4 + sn] = p;
    };
    set(0, 0, 2, 1.0);
    set(0, 1, 1, 0.02);
    set(0, 1, 3, 0.98);
    for (size_t s = 1; s < 4; ++s) {
        set(s, 0, s, 1.0);
        set(s, 1, s, 1.0);
    }
    mdp.validate();
    return mdp;
}

namespace {

double gamma_draw(CounterRng& rng, double shape);

double standard_normal(CounterRng& rng) {
    double u1 = rng.next_uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = rng.next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

// Marsaglia-Tsang; shapes below one are boosted through gamma(shape+1).
double gamma_draw(CounterRng& rng, double shape) {
    if (shape == 0.0) return 0.0;
    if (shape < 1.0) {
        double u = rng.next_uniform();
        if (u <= 0.0) u = 0x1.0p-53;
        return gamma_draw(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        const double z = standard_normal(rng);
        const double t = 1.0 + c * z;
        if (t <= 0.0) continue;
        const double v = t * t * t;
        double u = rng.next_uniform();
        if (u <= 0.0) u = 0x1.0p-53;
        if (std::log(u) < 0.5 * z * z + d - d * v + d * std::log(v)) {
            return d * v;
        }
    }
}

} // namespace

ModelEnsemble builtin_chain(const ChainParams& params) {
    const size_t n = params.n_states;
    if (n < 2) throw DomainError("chain needs at least two states");
    if (!(params.slip >= 0.0 && params.slip < 1.0)) {
        throw DomainError("slip must lie in [0, 1)");
    }
    if (params.n_models == 0) throw DomainError("chain needs at least one model");
    if (!(params.perturb >= 0.0 && params.perturb < 1.0)) {
        throw DomainError("perturb must lie in [0, 1)");
    }

    constexpr size_t kSafe = 0;
    constexpr size_t kRisky = 1;
    const size_t home = 0;
    const size_t goal = n - 1;
    const Real bold_slip = std::min(0.5, 4.0 * params.slip);

    Mdp nominal;
    nominal.n_states = n;
    nominal.n_actions = 2;
    nominal.discount = params.discount;
    nominal.initial_state = home;
    nominal.reward.assign(n * 2, 0.0);
    nominal.transition.assign(n * 2 * n, 0.0);
    auto set = [&](size_t s, size_t a, size_t sn, Real p) {
        nominal.transition[(s * 2 + a) * n + sn] = p;
    };

    // SAFE: collect at home or at the goal, retreat home from the gauntlet.
    nominal.reward[home * 2 + kSafe] = params.safe_reward;
    set(home, kSafe, home, 1.0);
    for (size_t s = 1; s < goal; ++s) set(s, kSafe, home, 1.0);
    nominal.reward[goal * 2 + kSafe] = params.goal_reward;
    set(goal, kSafe, goal, 1.0);

    // RISKY: advance along the chain, slipping back home; at the goal the
    // bold collection pays more but may throw the agent back as well.
    for (size_t s = 0; s < goal; ++s) {
        set(s, kRisky, s + 1, 1.0 - params.slip);
        set(s, kRisky, home, nominal.transition[(s * 2 + kRisky) * n + home] + params.slip);
    }
    nominal.reward[goal * 2 + kRisky] = params.bold_reward;
    set(goal, kRisky, goal, 1.0 - bold_slip);
    set(goal, kRisky, home, bold_slip);

    nominal.validate();

    ModelEnsemble ensemble;
    ensemble.weights.assign(params.n_models, 1.0 / static_cast<Real>(params.n_models));
    if (params.perturb == 0.0) {
        ensemble.models.assign(params.n_models, nominal.transition);
    } else {
        // Row-wise Dirichlet(kappa * p_nominal); structural zeros stay zero
        // and the posterior mean matches the nominal row.
        const double kappa = 1.0 / params.perturb;
        for (size_t m = 0; m < params.n_models; ++m) {
            numvec table(nominal.transition.size(), 0.0);
            for (size_t s = 0; s < n; ++s) {
                for (size_t a = 0; a < 2; ++a) {
                    const size_t base = (s * 2 + a) * n;
                    const uint64_t stream =
                        (uint64_t{1} << 48) | ((m * n + s) * 2 + a);
                    CounterRng rng(params.seed, stream);
                    Real total = 0.0;
                    size_t positive = 0;
                    size_t last_positive = 0;
                    for (size_t sn = 0; sn < n; ++sn) {
                        const Real p = nominal.transition[base + sn];
                        if (p == 0.0) continue;
                        const double g = gamma_draw(rng, kappa * p);
                        table[base + sn] = g;
                        total += g;
                        ++positive;
                        last_positive = sn;
                    }
                    if (total <= 0.0) {
                        // Degenerate draw; fall back to the nominal row.
                        for (size_t sn = 0; sn < n; ++sn) {
                            table[base + sn] = nominal.transition[base + sn];
                        }
                        continue;
                    }
                    if (positive == 1) {
                        table[base + last_positive] = 1.0;
                        continue;
                    }
                    for (size_t sn = 0; sn < n; ++sn) table[base + sn] /= total;
                }
            }
            ensemble.models.push_back(std::move(table));
        }
    }
    ensemble.nominal = std::move(nominal);
    ensemble.validate();
    return ensemble;
}

} // namespace rasr
