#include "conekit/rational.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>

namespace conekit {

namespace {

std::optional<BigInt> parse_integer(std::string_view s) {
    if (s.empty()) return std::nullopt;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    // cpp_int reads a leading 0 as an octal prefix.
    s.remove_prefix(std::min(s.find_first_not_of('0'), s.size()));
    if (s.empty()) return BigInt(0);
    return BigInt(std::string(s));
}

BigInt pow10(long n) {
    BigInt r = 1;
    for (long i = 0; i < n; ++i) r *= 10;
    return r;
}

// Unsigned decimal: digits[.digits][e[+-]digits]
std::optional<Rational> parse_decimal(std::string_view s) {
    std::size_t e = s.find_first_of("eE");
    std::string_view mant = s.substr(0, e);
    long exp10 = 0;
    if (e != std::string_view::npos) {
        std::string_view ex = s.substr(e + 1);
        bool neg = false;
        if (!ex.empty() && (ex[0] == '+' || ex[0] == '-')) {
            neg = ex[0] == '-';
            ex.remove_prefix(1);
        }
        if (ex.empty() || ex.size() > 6) return std::nullopt;
        for (char c : ex)
            if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
        exp10 = std::stol(std::string(ex));
        if (neg) exp10 = -exp10;
    }
    std::size_t dot = mant.find('.');
    std::string digits(mant.substr(0, dot));
    if (dot != std::string_view::npos) {
        std::string_view frac = mant.substr(dot + 1);
        digits += frac;
        exp10 -= static_cast<long>(frac.size());
    }
    if (digits.empty()) return std::nullopt;
    auto n = parse_integer(digits);
    if (!n) return std::nullopt;
    if (exp10 >= 0) return Rational(*n * pow10(exp10));
    return Rational(*n, pow10(-exp10));
}

}  // namespace

std::optional<Rational> parse_rational(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    bool neg = false;
    if (!text.empty() && (text[0] == '-' || text[0] == '+')) {
        neg = text[0] == '-';
        text.remove_prefix(1);
    }
    if (text.empty()) return std::nullopt;
    std::optional<Rational> r;
    std::size_t slash = text.find('/');
    if (slash == std::string_view::npos) {
        r = parse_decimal(text);
    } else {
        auto p = parse_decimal(text.substr(0, slash));
        auto q = parse_decimal(text.substr(slash + 1));
        if (!p || !q || *q == 0) return std::nullopt;
        r = *p / *q;
    }
    if (r && neg) *r = -*r;
    return r;
}

std::string to_string(const Rational& r) {
    BigInt n = boost::multiprecision::numerator(r);
    BigInt d = boost::multiprecision::denominator(r);
    if (d == 1) return n.str();
    return n.str() + "/" + d.str();
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

Rational from_double(double x) {
    if (!std::isfinite(x)) throw std::domain_error("from_double: non-finite value");
    int exp = 0;
    double m = std::frexp(x, &exp);
    // m in [0.5, 1): scale to a 53-bit integer.
    auto mant = static_cast<long long>(std::ldexp(m, 53));
    exp -= 53;
    Rational r(mant);
    if (exp > 0) {
        r *= Rational(BigInt(1) << exp);
    } else if (exp < 0) {
        r /= Rational(BigInt(1) << -exp);
    }
    return r;
}

Rational best_rational(double x, long long max_den) {
    // Convergents of the continued fraction of x.
    BigInt h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double rem = x;
    for (int it = 0; it < 64; ++it) {
        double a = std::floor(rem);
        if (std::fabs(a) > 9e15) break;
        auto ai = static_cast<long long>(a);
        BigInt h2 = BigInt(ai) * h1 + h0;
        BigInt k2 = BigInt(ai) * k1 + k0;
        if (k2 > max_den) break;
        h0 = h1; h1 = h2; k0 = k1; k1 = k2;
        double frac = rem - a;
        if (frac < 1e-300) break;
        rem = 1.0 / frac;
    }
    if (k1 == 0) return Rational(static_cast<long long>(std::llround(x)));
    return Rational(h1, k1);
}

std::string Scalar::str() const {
    if (exact) return to_string(*exact);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

namespace {
template <class Op>
std::optional<Rational> both(const Scalar& a, const Scalar& b, Op op) {
    if (a.exact && b.exact) return op(*a.exact, *b.exact);
    return std::nullopt;
}
}  // namespace

Scalar operator+(const Scalar& a, const Scalar& b) {
    return {a.value + b.value, both(a, b, [](auto& x, auto& y) { return Rational(x + y); })};
}
Scalar operator-(const Scalar& a, const Scalar& b) {
    return {a.value - b.value, both(a, b, [](auto& x, auto& y) { return Rational(x - y); })};
}
Scalar operator*(const Scalar& a, const Scalar& b) {
    // An exact zero annihilates even an inexact factor.
    if ((a.exact && *a.exact == 0) || (b.exact && *b.exact == 0)) return Scalar(Rational(0));
    return {a.value * b.value, both(a, b, [](auto& x, auto& y) { return Rational(x * y); })};
}
Scalar operator/(const Scalar& a, const Scalar& b) {
    if (b.exact && *b.exact == 0) return Scalar(a.value / 0.0);
    if (a.exact && *a.exact == 0 && b.value != 0.0) return Scalar(Rational(0));
    return {a.value / b.value, both(a, b, [](auto& x, auto& y) { return Rational(x / y); })};
}
Scalar operator-(const Scalar& a) {
    return {-a.value, a.exact ? std::optional<Rational>(Rational(-*a.exact)) : std::nullopt};
}
Scalar min(const Scalar& a, const Scalar& b) { return less(b, a) ? b : a; }

bool less(const Scalar& a, const Scalar& b) {
    if (a.exact && b.exact) return *a.exact < *b.exact;
    return a.value < b.value;
}

}  // namespace conekit
