#pragma once

#include "conekit/polynomial.hpp"
#include "conekit/rational.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace conekit {

/// A parsed expression over a declared, ordered set of variables.
///
/// Grammar (see docs/grammar.md): `+ -` < `* /` < unary minus < `^`
/// (right associative), all binary levels left associative.  Functions:
/// sqrt sin cos exp log abs min max; constant `pi`; piecewise definitions
///
///     piecewise(w in [0,1]: w/2; w in (1,inf): w/6 + 1/3)
///
/// whose guards must tile an interval without gaps or overlaps.
///
/// Numeric literals are kept as exact rationals, so `eval_exact` and
/// `to_polynomial` can reproduce rational constants without rounding.
/// Instances are immutable; evaluation is reentrant.
class Expression {
public:
    enum class Op { literal, variable, pi, neg, add, sub, mul, div, pow, call, piecewise };

    struct Bound {
        Scalar value;
        bool closed = true;
        bool infinite = false;
        int node = -1;  // constant sub-expression, for printing
    };

    struct Branch {
        Bound lo, hi;
        int body = -1;
    };

    struct Node {
        Op op = Op::literal;
        double number = 0.0;
        std::optional<Rational> exact;  // literals only
        std::string text;                // literal spelling or function name
        std::size_t var = 0;             // variable / piecewise guard variable
        std::vector<int> args;
        std::vector<Branch> branches;
    };

    Expression() = default;

    /// Throws ParseError (with line:column) on syntax errors, unknown
    /// identifiers, wrong arity and malformed piecewise guards.
    static Expression parse(std::string_view source, std::vector<std::string> variables);
    /// Constant expression `value` over `variables`.
    static Expression constant(const Rational& value, std::vector<std::string> variables);

    const std::string& source() const noexcept { return source_; }
    const std::vector<std::string>& variables() const noexcept { return variables_; }
    bool empty() const noexcept { return nodes_.empty(); }

    /// Values in declared-variable order.  Throws DomainError.
    double eval(std::span<const double> values) const;
    double eval(const std::map<std::string, double>& bindings) const;

    /// Exact value when every step stays rational, else nullopt.  Throws
    /// DomainError if a piecewise guard does not contain the point.
    std::optional<Rational> eval_exact(std::span<const Rational> values) const;

    /// Polynomial in the declared variables (same order) when the expression
    /// is built from +, -, *, division by constants and non-negative integer
    /// powers only.
    std::optional<Polynomial> to_polynomial() const;

    /// Canonical text; parse(to_string()) yields an equal tree.
    std::string to_string() const;

    /// Finite piecewise guard endpoints on variable `var`.
    std::vector<double> breakpoints(std::size_t var) const;

    /// True if variable `var` occurs anywhere in the tree.
    bool uses(std::size_t var) const;

    /// Structural equality of the trees (literal spellings included).
    friend bool operator==(const Expression& a, const Expression& b);

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    int root() const noexcept { return root_; }

private:
    friend class ExpressionParser;

    double eval_node(int n, std::span<const double> x) const;
    std::optional<Rational> exact_node(int n, std::span<const Rational> x) const;
    std::optional<Polynomial> poly_node(int n) const;
    std::string print_node(int n) const;
    bool equal_node(int a, const Expression& other, int b) const;

    std::string source_;
    std::vector<std::string> variables_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace conekit
