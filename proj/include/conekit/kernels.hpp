#pragma once

#include "conekit/error.hpp"
#include "conekit/expr.hpp"
#include "conekit/polynomial.hpp"
#include "conekit/rational.hpp"

#include <optional>
#include <string>
#include <vector>

namespace conekit {

/// A Green's kernel k(t, s) on [0,1]^2 given by two pieces, `lower` for
/// s <= t and `upper` for s > t, together with a majorant phi(s) and an
/// optional concentration function c(t) with k(t,s) >= c(t) phi(s).
class KernelSpec {
public:
    enum class Kind { builtin2, builtin4, custom };

    /// Dirichlet kernel of -u'' on [0,1].
    static KernelSpec builtin2();
    /// Simply supported beam kernel of v'''' on [0,1].
    static KernelSpec builtin4();
    /// Pieces in (t, s), phi in s, conc in t (optional).
    static KernelSpec custom(Expression lower, Expression upper, Expression phi,
                             std::optional<Expression> conc = std::nullopt);

    Kind kind() const noexcept { return kind_; }
    std::string name() const;

    /// Throws std::domain_error outside [0,1]^2.
    double operator()(double t, double s) const;
    double phi(double s) const;
    const Expression& lower() const noexcept { return lower_; }
    const Expression& upper() const noexcept { return upper_; }
    const Expression& phi_expr() const noexcept { return phi_; }
    const std::optional<Expression>& conc() const noexcept { return conc_; }

    /// Pieces as polynomials in (t, s) when both pieces are polynomial.
    const std::optional<Polynomial>& lower_poly() const noexcept { return lower_poly_; }
    const std::optional<Polynomial>& upper_poly() const noexcept { return upper_poly_; }
    bool polynomial() const noexcept { return lower_poly_ && upper_poly_; }

    /// Breakpoints of phi in s (Phi_2 switches branch at 1/2).
    std::vector<double> phi_breakpoints() const { return phi_.breakpoints(0); }

private:
    KernelSpec(Kind kind, Expression lower, Expression upper, Expression phi, std::optional<Expression> conc);

    Kind kind_;
    Expression lower_, upper_, phi_;
    std::optional<Expression> conc_;
    std::optional<Polynomial> lower_poly_, upper_poly_;
};

inline double eval_kernel(const KernelSpec& k, double t, double s) { return k(t, s); }

/// Constant c with k(t,s) >= c phi(s) for t in [a,b].
///   builtin2: min{1-b, a} (exact when a, b are);
///   builtin4: min of c_2(t) over [a,b];
///   custom:   min of conc over [a,b] if given, else the infimum of k/phi over
///             a 201x201 sample of [a,b]x[0,1], clamped to (0,1].
/// Requires 0 <= a < b <= 1.  Throws ValidationError when the derived
/// constant is not positive.
Scalar derive_c(const KernelSpec& k, const Scalar& a, const Scalar& b);

/// Sampled check of 0 <= k <= phi on [0,1]^2 and k >= c phi for t in [a,b].
std::vector<Violation> check_kernel_bounds(const KernelSpec& k, double a, double b, double c,
                                           int grid = 201);

/// gamma(t) >= 0 with its sup norm and the ratio min_[a,b] gamma / ||gamma||.
struct GammaTerm {
    Expression expr;
    Scalar sup_norm;
    Scalar c_gamma;
};

class DegenerateGammaError : public Error {
public:
    using Error::Error;
};

/// Throws DegenerateGammaError when gamma vanishes identically on [0,1].
GammaTerm derive_gamma_constants(const Expression& g, const Scalar& a, const Scalar& b);

}  // namespace conekit
