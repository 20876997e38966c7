#pragma once

#include "conekit/constants.hpp"
#include "conekit/index.hpp"
#include "conekit/problem.hpp"
#include "conekit/solver.hpp"

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace conekit {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kReportSchema = "report.v1";

/// Hex SHA-256 of the problem's canonical serialization.
std::string problem_digest(const ProblemDef& p);

/// Everything one run produced.  Serializes to the report.v1 layout; two
/// runs on the same inputs differ only in `wall_time`.
struct RunReport {
    std::string digest;
    std::optional<TheoryConstants> constants;
    std::vector<RhoCondition> conditions;
    std::optional<MultiplicityVerdict> verdict;
    std::vector<SolveResult> solutions;
    std::optional<MultistartResult> search;  // counters of the multistart run, solutions moved out
    double wall_time = 0.0;                  // seconds

    explicit RunReport(const ProblemDef& p) : digest(problem_digest(p)) {}
};

nlohmann::json to_json(const RunReport& r);

/// "t,u,v" rows at the solution's nodes.
std::string solution_csv(const SolveResult& r);

}  // namespace conekit
