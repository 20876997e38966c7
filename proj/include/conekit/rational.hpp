#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace conekit {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Parses "p", "p/q", "-p/q" and decimal literals such as "0.25" or "1.5e-3"
/// into an exact rational.  Returns nullopt on anything else.
std::optional<Rational> parse_rational(std::string_view text);

/// "p" or "p/q" in lowest terms.
std::string to_string(const Rational& r);

double to_double(const Rational& r);

/// Exact rational value of a finite double (every double is dyadic).
Rational from_double(double x);

/// Continued-fraction approximation of x with denominator <= max_den.
Rational best_rational(double x, long long max_den);

/// A real quantity carried as a double plus, when every input that produced
/// it was rational and every step was a field operation, its exact value.
struct Scalar {
    double value = 0.0;
    std::optional<Rational> exact;

    Scalar() = default;
    Scalar(double v) : value(v) {}  // NOLINT: implicit on purpose for formulas
    Scalar(const Rational& r) : value(to_double(r)), exact(r) {}
    Scalar(double v, std::optional<Rational> e) : value(v), exact(std::move(e)) {}

    static Scalar integer(long long n) { return Scalar(Rational(n)); }

    bool is_exact() const noexcept { return exact.has_value(); }
    /// Exact rendering when available, else %.17g.
    std::string str() const;
};

Scalar operator+(const Scalar& a, const Scalar& b);
Scalar operator-(const Scalar& a, const Scalar& b);
Scalar operator*(const Scalar& a, const Scalar& b);
/// Division by an exact zero drops the exact part and yields +-inf / nan.
Scalar operator/(const Scalar& a, const Scalar& b);
Scalar operator-(const Scalar& a);
Scalar min(const Scalar& a, const Scalar& b);

/// Comparison on the exact values when both present, doubles otherwise.
bool less(const Scalar& a, const Scalar& b);

}  // namespace conekit
