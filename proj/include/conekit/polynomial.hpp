#pragma once

#include "conekit/rational.hpp"

#include <cstddef>
#include <map>
#include <span>
#include <vector>

namespace conekit {

/// Sparse multivariate polynomial with exact rational coefficients over a
/// fixed number of variables (indexed 0..nvars-1).  Backs the exact
/// integration path for polynomial kernels, weights and boundary terms.
class Polynomial {
public:
    using Exponents = std::vector<unsigned>;

    explicit Polynomial(std::size_t nvars = 1) : nvars_(nvars) {}

    static Polynomial constant(std::size_t nvars, const Rational& c);
    static Polynomial variable(std::size_t nvars, std::size_t index);

    std::size_t nvars() const noexcept { return nvars_; }
    const std::map<Exponents, Rational>& terms() const noexcept { return terms_; }
    bool is_zero() const noexcept { return terms_.empty(); }
    unsigned degree(std::size_t var) const;

    Polynomial& operator+=(const Polynomial& o);
    Polynomial& operator-=(const Polynomial& o);
    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    Polynomial operator-() const;
    Polynomial scaled(const Rational& c) const;
    Polynomial pow(unsigned n) const;

    Rational eval(std::span<const Rational> x) const;
    double eval(std::span<const double> x) const;

    Polynomial derivative(std::size_t var) const;
    /// Antiderivative in `var` vanishing at var = 0.
    Polynomial antiderivative(std::size_t var) const;
    /// Replace variable `var` by `p` (which has the same variable count).
    Polynomial substitute(std::size_t var, const Polynomial& p) const;
    Polynomial substitute(std::size_t var, const Rational& value) const;
    /// Definite integral in `var` between polynomial limits.
    Polynomial integrate(std::size_t var, const Polynomial& lo, const Polynomial& hi) const;

    /// Ascending coefficients in `var`; every other variable must be absent.
    std::vector<Rational> univariate_coefficients(std::size_t var) const;

    friend bool operator==(const Polynomial& a, const Polynomial& b) {
        return a.nvars_ == b.nvars_ && a.terms_ == b.terms_;
    }

private:
    void add_term(const Exponents& e, const Rational& c);

    std::size_t nvars_;
    std::map<Exponents, Rational> terms_;
};

enum class ExtremumMode { min, max };

struct PolyExtremum {
    double arg = 0.0;
    Scalar value;  // exact when the optimum sits at a rational point
};

/// Extremum of a univariate polynomial (variable `var`) on [lo, hi].  The
/// candidates are the endpoints and the sign changes of the derivative that
/// match `mode`; each interior candidate is located numerically and then
/// promoted to an exact rational when a small-denominator rational is an
/// exact root of the derivative.  The value is exact iff the winner is.
PolyExtremum polynomial_extremum(const Polynomial& p, std::size_t var, const Rational& lo,
                                 const Rational& hi, ExtremumMode mode);

}  // namespace conekit
