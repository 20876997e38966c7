#pragma once

#include "conekit/error.hpp"
#include "conekit/expr.hpp"
#include "conekit/kernels.hpp"
#include "conekit/quadrature.hpp"
#include "conekit/rational.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace conekit {

/// Which index condition a radius is checked against.
enum class ConditionKind { index1, index0, index0_star };

std::string to_string(ConditionKind k);
/// Accepts index1|one, index0|zero, index0_star|star.
std::optional<ConditionKind> parse_condition_kind(std::string_view s);

struct EquationDef {
    KernelSpec kernel = KernelSpec::builtin2();
    Expression g;  // weight, in t
    Expression f;  // nonlinearity, in (t, u, v)
    Scalar a, b;   // [a_i, b_i]
    Scalar c;      // kernel constant c_i on [a_i, b_i]
};

/// Boundary term (i, j): gamma_ij (H_ij(beta_ij[.]) + L_ij(delta_ij[.])).
struct BoundaryDef {
    GammaTerm gamma;
    Measure beta;   // dB_ij
    Measure delta;  // dC_ij
    Scalar h_lo, h_hi, l_hi;
    std::optional<Expression> H, L;  // in w; only the solver needs them
};

struct Options {
    double quad_tol = kDefaultTol;
    int f_grid = 64;
    int nodes = 257;
    int sample_grid = 201;
    double hl_wmax = 1e3;
    int hl_samples = 10000;
    double damping = 0.5;
    int max_iter = 5000;
    double solve_tol = 1e-13;
    double divergence_ceiling = 1e8;
};

/// User-supplied exact value of an f-extremum over the box that condition
/// `kind` at radius `rho` uses for equation `equation` (0-based).  The value
/// is the extremum of f itself, not divided by rho.
struct FBound {
    int equation = 0;
    ConditionKind kind = ConditionKind::index1;
    Scalar rho;
    Scalar value;
};

/// A validated system of two perturbed Hammerstein equations.  Immutable
/// after load; indices are 0-based (equation i, boundary term j).
struct ProblemDef {
    std::array<EquationDef, 2> eq;
    std::array<std::array<BoundaryDef, 2>, 2> bc;
    Options options;
    std::vector<FBound> f_bounds;
    std::string source;  // canonical serialization the digest is taken over

    const BoundaryDef& boundary(int i, int j) const { return bc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }
    const EquationDef& equation(int i) const { return eq[static_cast<std::size_t>(i)]; }
    bool has_HL() const;
};

/// beta_ij[gamma_il]: exact when the measure and gamma allow it.
Scalar beta_of_gamma(const ProblemDef& p, int i, int j, int l);
/// delta_ij[1].
Scalar delta_of_one(const ProblemDef& p, int i, int j);

/// Parses and validates a problem document.  Throws SchemaError on
/// structural problems, ParseError on expression errors and ValidationError
/// listing every breached standing assumption.
ProblemDef load_json(const nlohmann::json& doc);
ProblemDef load_string(const std::string& text);
/// Throws IoError when the file cannot be read.
ProblemDef load(const std::string& path);

/// Round-trippable JSON form of a problem (all numbers as exact strings
/// where exact).
nlohmann::json to_json(const ProblemDef& p);

struct HLCheck {
    int i = 0, j = 0;
    std::string which;  // "H" or "L"
    double worst_margin = 0.0;
    double worst_w = 0.0;
    bool ok = true;
};

/// Samples h_lo w <= H(w) <= h_hi w and L(w) <= l_hi w at n log-spaced
/// points of (0, w_max].  Violations are reported, not thrown.
std::vector<HLCheck> validate_HL_consistency(const ProblemDef& p, double w_max, int n);

}  // namespace conekit
