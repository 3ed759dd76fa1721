#include "rasr/io_json.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rasr {

namespace {

/// Minimal emitter with deliberate formatting: 17-significant-digit floats
/// and caller-controlled key order, so artifacts are byte-stable.
class JsonWriter {
public:
    std::string take() { return std::move(out_); }

    void begin_object() { open('{'); }
    void end_object() { close('}'); }
    void begin_array() { open('['); }
    void end_array() { close(']'); }

    void key(const char* name) {
        comma();
        quote(name);
        out_ += ':';
        just_keyed_ = true;
    }

    void value(Real v) {
        comma();
        if (std::isinf(v)) {
            out_ += v > 0 ? "\"inf\"" : "\"-inf\"";
        } else {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out_ += buf;
        }
    }
    void value(size_t v) {
        comma();
        out_ += std::to_string(v);
    }
    void value(int32_t v) {
        comma();
        out_ += std::to_string(v);
    }
    void value(bool v) {
        comma();
        out_ += v ? "true" : "false";
    }
    void value(const std::string& v) {
        comma();
        quote(v.c_str());
    }
    void null() {
        comma();
        out_ += "null";
    }

    void value(const numvec& v) {
        begin_array();
        for (Real x : v) value(x);
        end_array();
    }
    void value(const indvec& v) {
        begin_array();
        for (int32_t x : v) value(x);
        end_array();
    }

private:
    void open(char c) {
        comma();
        out_ += c;
        needs_comma_ = false;
        just_keyed_ = false;
    }
    void close(char c) {
        out_ += c;
        needs_comma_ = true;
    }
    void comma() {
        if (just_keyed_) {
            just_keyed_ = false;
            return;
        }
        if (needs_comma_) out_ += ',';
        needs_comma_ = true;
    }
    void quote(const char* text) {
        out_ += '"';
        for (const char* p = text; *p; ++p) {
            switch (*p) {
            case '"': out_ += "\\\""; break;
            case '\\': out_ += "\\\\"; break;
            case '\n': out_ += "\\n"; break;
            case '\t': out_ += "\\t"; break;
            default: out_ += *p;
            }
        }
        out_ += '"';
    }

    std::string out_;
    bool needs_comma_ = false;
    bool just_keyed_ = true;
};

const char* terminal_name(TerminalKind kind) {
    switch (kind) {
    case TerminalKind::Zero: return "zero";
    case TerminalKind::RiskNeutralTail: return "risk_neutral_tail";
    case TerminalKind::UserSupplied: return "user_supplied";
    }
    return "zero";
}

void write_plan(JsonWriter& w, const PolicyPlan& plan) {
    w.begin_object();
    w.key("rules");
    w.begin_array();
    for (const DecisionRule& rule : plan.rules) w.value(rule);
    w.end_array();
    w.key("tail_rule");
    if (plan.tail_rule) {
        w.value(*plan.tail_rule);
    } else {
        w.null();
    }
    w.end_object();
}

void write_value_series(JsonWriter& w, const ValueSeries& series) {
    w.begin_object();
    w.key("terminal");
    w.value(std::string(terminal_name(series.terminal)));
    w.key("risk_levels");
    w.value(series.risk_levels);
    w.key("values");
    w.begin_array();
    for (const numvec& v : series.values) w.value(v);
    w.end_array();
    w.end_object();
}

void write_erm_report(JsonWriter& w, const ErmSolveReport& report) {
    w.begin_object();
    w.key("objective");
    w.value(report.objective);
    if (report.loss_bound) {
        w.key("loss_bound");
        w.value(*report.loss_bound);
    }
    w.key("horizon_used");
    w.value(report.horizon_used);
    w.key("plan");
    write_plan(w, report.plan);
    w.key("values");
    write_value_series(w, report.values);
    w.end_object();
}

} // namespace

std::string to_json(const Mdp& mdp) {
    JsonWriter w;
    w.begin_object();
    w.key("n_states");
    w.value(mdp.n_states);
    w.key("n_actions");
    w.value(mdp.n_actions);
    w.key("discount");
    w.value(mdp.discount);
    w.key("initial_state");
    w.value(mdp.initial_state);
    w.key("reward");
    w.value(mdp.reward);
    w.key("transition");
    w.value(mdp.transition);
    w.end_object();
    return w.take();
}

std::string to_json(const PolicyPlan& plan) {
    JsonWriter w;
    write_plan(w, plan);
    return w.take();
}

std::string to_json(const ErmSolveReport& report) {
    JsonWriter w;
    write_erm_report(w, report);
    return w.take();
}

std::string to_json(const EvarSolveReport& report) {
    JsonWriter w;
    w.begin_object();
    w.key("objective");
    w.value(report.objective);
    w.key("best_alpha");
    w.value(report.best_alpha.value());
    w.key("guarantee");
    w.value(report.guarantee);
    w.key("h_curve");
    w.begin_array();
    for (const HPoint& point : report.h_values) {
        w.begin_object();
        w.key("alpha");
        w.value(point.alpha);
        w.key("h");
        w.value(point.h);
        w.key("valid");
        w.value(point.valid);
        w.end_object();
    }
    w.end_array();
    w.key("plan");
    write_plan(w, report.plan);
    w.end_object();
    return w.take();
}

std::string to_json(const ReturnSample& sample) {
    JsonWriter w;
    w.begin_object();
    w.key("episodes");
    w.value(sample.episodes);
    w.key("horizon");
    w.value(sample.horizon);
    w.key("seed");
    w.value(sample.seed);
    w.key("policy");
    w.value(sample.policy_tag);
    w.key("truncation_bias_bound");
    w.value(sample.truncation_bias_bound);
    w.key("returns");
    w.value(sample.returns);
    w.end_object();
    return w.take();
}

std::string to_json(const RiskReport& report) {
    JsonWriter w;
    w.begin_object();
    w.key("mean");
    w.value(report.mean);
    w.key("measures");
    w.begin_array();
    for (const RiskReportRow& row : report.rows) {
        w.begin_object();
        w.key("measure");
        w.value(row.measure);
        w.key("beta");
        w.value(row.beta);
        w.key("value");
        w.value(row.value);
        w.end_object();
    }
    w.end_array();
    w.key("episodes");
    w.value(report.episodes);
    w.key("horizon");
    w.value(report.horizon);
    w.key("seed");
    w.value(report.seed);
    w.key("policy");
    w.value(report.policy_tag);
    w.key("truncation_bias_bound");
    w.value(report.truncation_bias_bound);
    w.key("small_sample_warning");
    w.value(report.small_sample_warning);
    w.end_object();
    return w.take();
}

std::string to_csv(const ReturnSample& sample) {
    std::string out = "episode,return\n";
    char buf[64];
    for (size_t e = 0; e < sample.returns.size(); ++e) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", e, sample.returns[e]);
        out += buf;
    }
    return out;
}

std::string to_csv(const RiskReport& report) {
    std::string out = "measure,beta,value\n";
    char buf[96];
    std::snprintf(buf, sizeof(buf), "mean,,%.17g\n", report.mean);
    out += buf;
    for (const RiskReportRow& row : report.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g\n", row.measure.c_str(), row.beta,
                      row.value);
        out += buf;
    }
    return out;
}

PolicyPlan plan_from_json(const std::string& text) {
    const nlohmann::json parsed = nlohmann::json::parse(text);
    const nlohmann::json& plan_node = parsed.contains("plan") ? parsed.at("plan") : parsed;
    PolicyPlan plan;
    for (const auto& rule : plan_node.at("rules")) {
        plan.rules.push_back(rule.get<DecisionRule>());
    }
    if (plan_node.contains("tail_rule") && plan_node.at("tail_rule").is_array()) {
        plan.tail_rule = plan_node.at("tail_rule").get<DecisionRule>();
    }
    return plan;
}

ReturnSample sample_from_json(const std::string& text) {
    const nlohmann::json parsed = nlohmann::json::parse(text);
    ReturnSample sample;
    sample.episodes = parsed.at("episodes").get<size_t>();
    sample.horizon = parsed.at("horizon").get<size_t>();
    sample.seed = parsed.at("seed").get<uint64_t>();
    sample.policy_tag = parsed.value("policy", std::string{});
    if (parsed.contains("truncation_bias_bound") &&
        parsed.at("truncation_bias_bound").is_number()) {
        sample.truncation_bias_bound = parsed.at("truncation_bias_bound").get<Real>();
    } else {
        sample.truncation_bias_bound = std::numeric_limits<Real>::infinity();
    }
    sample.returns = parsed.at("returns").get<numvec>();
    if (sample.returns.size() != sample.episodes) {
        throw ValidationError("return sample length disagrees with episode count");
    }
    return sample;
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw ValidationError("failed writing '" + path + "'");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path, 0, "cannot open file");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace rasr
