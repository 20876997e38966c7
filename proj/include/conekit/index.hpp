#pragma once

#include "conekit/constants.hpp"
#include "conekit/polynomial.hpp"
#include "conekit/problem.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace conekit {

/// t-interval x u-interval x v-interval.
struct Box {
    std::array<Scalar, 2> t, u, v;
};

/// Search box an index condition uses for equation i at radius rho.
///   index1:      [0,1] x [0,rho] x [0,rho]
///   index0:      [a,b] x [rho,rho/c] x [0,rho/c]  (i = 0), u and v swapped for i = 1
///   index0_star: [a,b] x [0,rho/c] x [0,rho/c]
Box condition_box(const ProblemDef& p, const TheoryConstants& k, int i, ConditionKind kind, const Scalar& rho);

struct BoxExtremum {
    int equation = 0;
    Box box;
    ExtremumMode mode = ExtremumMode::max;
    Scalar rho;
    Scalar f_value;  // extremum of f itself
    Scalar value;    // f_value / rho
    std::array<double, 3> arg{};  // (t, u, v) of the incumbent; meaningless for user values
    std::string source;           // "sampled" or "user-exact"
    int grid = 0;
    int refinement = 0;  // local refinement passes applied
};

/// Samples f_i on a grid^3 lattice of the box, then once more at three
/// times the density in the cells around the incumbent.  Rows of the
/// lattice are distributed over OpenMP threads; ties are broken by the
/// lowest lattice index so the result does not depend on the thread count.
/// A sup found this way is a lower estimate of the true sup and an inf an
/// upper estimate.  Throws DomainError when f cannot be evaluated.
BoxExtremum f_extremum(const ProblemDef& p, int i, const Box& box, ExtremumMode mode, const Scalar& rho, int grid);
/// Single-threaded reference of f_extremum; must agree bit for bit.
BoxExtremum f_extremum_serial(const ProblemDef& p, int i, const Box& box, ExtremumMode mode, const Scalar& rho,
                              int grid);

/// Per-equation evaluation of an index condition.
struct EquationCheck {
    BoxExtremum f;
    Scalar bracket;    // multiplier of the f-extremum
    Scalar offset;     // f-independent part (index1 only; 0 otherwise)
    Scalar lhs;        // f * bracket + offset
    Scalar threshold;  // value of the f-extremum at which lhs crosses 1
    Scalar margin;     // 1 - lhs (index1) or lhs - 1 (index0 variants)
    bool satisfied = false;
};

struct RhoCondition {
    ConditionKind kind = ConditionKind::index1;
    Scalar rho;
    std::array<EquationCheck, 2> eq;
    bool satisfied = false;  // both i (index1, index0) or some i (index0_star)
};

/// The f-extremum condition `kind` needs at rho for equation i: a matching
/// f_bounds entry when present, the sampled value otherwise.
BoxExtremum condition_extremum(const ProblemDef& p, const TheoryConstants& k, int i, ConditionKind kind,
                               const Scalar& rho);

/// Multiplier of f^{0,rho} and the f-independent part of the index-1
/// inequality for equation i.
std::pair<Scalar, Scalar> index1_coefficients(const TheoryConstants& k, int i);
/// Multiplier of the f-infimum in the index-0 inequality (same for star).
Scalar index0_coefficient(const TheoryConstants& k, int i);

/// lhs < 1 for both equations.
RhoCondition check_index1(const ProblemDef& p, const TheoryConstants& k, const Scalar& rho);
/// lhs > 1 for both equations (star = false) or for at least one (star = true).
RhoCondition check_index0(const ProblemDef& p, const TheoryConstants& k, const Scalar& rho, bool star);
RhoCondition check_condition(const ProblemDef& p, const TheoryConstants& k, const Scalar& rho, ConditionKind kind);

struct LadderEntry {
    Scalar rho;
    ConditionKind kind = ConditionKind::index1;
};

/// "0.125:star,1:one,11:zero".  Throws LadderError on malformed text.
std::vector<LadderEntry> parse_ladder(const std::string& text);

struct GapCheck {
    std::string constraint;  // e.g. "rho_1/c < rho_2"
    bool satisfied = false;
};

struct MultiplicityVerdict {
    std::string clause = "none";  // S1..S6, extended(k) or none
    std::vector<LadderEntry> ladder;     // as requested
    std::vector<RhoCondition> conditions;  // one per requested entry
    std::vector<std::size_t> used;       // entries forming the certified sub-ladder
    std::vector<GapCheck> gap_checks;    // gaps of the certified sub-ladder
    int guaranteed_count = 0;
    /// True when an index0_star condition sits anywhere but the first rung.
    bool star_beyond_first = false;
    /// True when some certified rung relies on a sampled (not user-exact) extremum.
    bool sampled_extrema = false;
};

/// Checks every rung, then certifies the longest alternating sub-ladder of
/// satisfied rungs whose gaps hold: zero -> one needs rho_k/c < rho_{k+1},
/// one -> zero needs rho_k < rho_{k+1}.  A certified ladder of length L
/// guarantees L - 1 positive solutions.  Throws LadderError when the ladder
/// is empty, not strictly increasing or not alternating.
MultiplicityVerdict multiplicity(const ProblemDef& p, const TheoryConstants& k, const std::vector<LadderEntry>& ladder);

/// Scans rho over `points` log-spaced radii in [rho_lo, rho_hi], proposes the
/// longest certifiable ladder and re-verifies it with `multiplicity`.
MultiplicityVerdict auto_ladder(const ProblemDef& p, const TheoryConstants& k, double rho_lo, double rho_hi,
                                int points);

nlohmann::json to_json(const BoxExtremum& b);
nlohmann::json to_json(const RhoCondition& c);
nlohmann::json to_json(const MultiplicityVerdict& v);

}  // namespace conekit
