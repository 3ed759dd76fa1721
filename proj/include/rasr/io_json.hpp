#pragma once

#include "rasr/erm_solver.hpp"
#include "rasr/evar_planner.hpp"
#include "rasr/simulate.hpp"

#include <string>

namespace rasr {

/// Canonical JSON emission: keys appear in a fixed order, floats print with
/// 17 significant digits (exact binary64 round-trip), infinities as the
/// string "inf". Identical inputs therefore serialize to identical bytes.
std::string to_json(const Mdp& mdp);
std::string to_json(const PolicyPlan& plan);
std::string to_json(const ErmSolveReport& report);
std::string to_json(const EvarSolveReport& report);
std::string to_json(const ReturnSample& sample);
std::string to_json(const RiskReport& report);

/// CSV projections: one row per episode / per (measure, level).
std::string to_csv(const ReturnSample& sample);
std::string to_csv(const RiskReport& report);

/// Parse back the artifacts downstream commands consume.
PolicyPlan plan_from_json(const std::string& text);
ReturnSample sample_from_json(const std::string& text);

void write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

} // namespace rasr
