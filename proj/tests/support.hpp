#pragma once

#include "conekit/problem.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace testing {

inline std::string source_path(const std::string& rel) { return std::string(CONEKIT_SOURCE_DIR) + "/" + rel; }

inline nlohmann::json read_json(const std::string& rel) {
    std::ifstream in(source_path(rel));
    std::stringstream ss;
    ss << in.rdbuf();
    return nlohmann::json::parse(ss.str());
}

inline const conekit::ProblemDef& example() {
    static const conekit::ProblemDef p = conekit::load(source_path("problems/example.json"));
    return p;
}

inline conekit::ProblemDef toy() { return conekit::load(source_path("problems/linear_toy.json")); }

/// Exact rational from "p/q".
inline conekit::Rational q(const char* s) { return *conekit::parse_rational(s); }

}  // namespace testing
