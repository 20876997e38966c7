#pragma once

#include "conekit/problem.hpp"
#include "conekit/rational.hpp"

#include <array>
#include <utility>

#include <json.hpp>

namespace conekit {

/// General 2x2 matrix [[m00, m01], [m10, m11]].
struct Matrix2 {
    Scalar m00, m01, m10, m11;

    /// [[a, -b], [-c, d]], the sign pattern whose inverse preserves order.
    static Matrix2 pattern(const Scalar& a, const Scalar& b, const Scalar& c, const Scalar& d) {
        return {a, -b, -c, d};
    }
    static Matrix2 identity() { return {Scalar(Rational(1)), Scalar(Rational(0)), Scalar(Rational(0)), Scalar(Rational(1))}; }

    Scalar det() const { return m00 * m11 - m01 * m10; }
    std::pair<Scalar, Scalar> apply(const Scalar& p, const Scalar& q) const {
        return {m00 * p + m01 * q, m10 * p + m11 * q};
    }
    /// Diagonal >= 0, off-diagonal <= 0, det > 0.
    bool has_order_pattern() const;
};

/// Inverse of a `pattern` matrix with positive
/// determinant; all entries of the result are >= 0.  Throws HypothesisError
/// when the pattern or the determinant condition fails.
Matrix2 inverse_order_preserving(const Matrix2& m);

/// Checks N_mu^{-1}(p,q) <= N^{-1}(p,q) componentwise, N_mu = N + (mu-1) I.
/// Requires mu > 1, p, q >= 0 and N of `pattern` form; throws
/// HypothesisError otherwise.  Inexact comparisons allow a few ulps.
bool mu_monotonicity_check(const Matrix2& n, const Scalar& mu, const Scalar& p, const Scalar& q);

/// int_lo^hi K_ij(s) g_i(s) ds with K_ij(s) = int_0^1 k_i(t,s) dB_ij(t).
/// Exact when kernel, g and the measure are polynomial/rational.
Scalar kernel_functional(const ProblemDef& p, int i, int j, const Scalar& lo, const Scalar& hi);

/// sup over t in [0,1] of int_0^1 k_i(t,s) g_i(s) ds (this is 1/m_i).
Scalar inverse_m(const ProblemDef& p, int i);
/// inf over t in [a_i,b_i] of int_{a_i}^{b_i} k_i(t,s) g_i(s) ds (this is 1/M_i).
Scalar inverse_M(const ProblemDef& p, int i);

struct BoundaryConstants {
    std::array<Scalar, 2> beta_gamma;  // beta_ij[gamma_il], l = 1, 2
    Scalar delta_one;                  // delta_ij[1]
    Scalar kernel_full;                // int_0^1 K_ij g_i
    Scalar kernel_ab;                  // int_{a_i}^{b_i} K_ij g_i
    Scalar gamma_norm;                 // ||gamma_ij||
    Scalar gamma_min;                  // min of gamma_ij on [a_i,b_i] (= c_ij ||gamma_ij||)
    Scalar c_gamma;                    // c_ij
    Scalar h_lo, h_hi, l_hi;
};

struct EquationConstants {
    Scalar c;        // kernel constant c_i
    Scalar c_tilde;  // min{c_i, c_i1, c_i2}
    Scalar inv_m, m, inv_M, M;
    Scalar D, D_under;
    std::array<Scalar, 4> theta;
    Scalar Q, S;
    Matrix2 D_matrix, D_under_matrix;
    std::array<BoundaryConstants, 2> bc;
};

struct TheoryConstants {
    std::array<EquationConstants, 2> eq;
    Scalar c;  // min{c~_1, c~_2}

    const EquationConstants& equation(int i) const { return eq[static_cast<std::size_t>(i)]; }
    const BoundaryConstants& boundary(int i, int j) const {
        return eq[static_cast<std::size_t>(i)].bc[static_cast<std::size_t>(j)];
    }
};

/// Every derived scalar of the theory.  Independent integrals run in
/// parallel.  Throws HypothesisError naming the first constant that breaks
/// its invariant (D > 0, D_under > 0, theta >= 0, c in (0,1], m > 0, M >= m).
TheoryConstants compute_all(const ProblemDef& p);

/// {"value": double, "exact": "p/q"?}
nlohmann::json scalar_to_json(const Scalar& s);
nlohmann::json to_json(const TheoryConstants& k);
/// Aligned human-readable table.
std::string to_table(const TheoryConstants& k);

}  // namespace conekit
