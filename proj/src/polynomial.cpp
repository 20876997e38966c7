#include "conekit/polynomial.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace conekit {

Polynomial Polynomial::constant(std::size_t nvars, const Rational& c) {
    Polynomial p(nvars);
    p.add_term(Exponents(nvars, 0), c);
    return p;
}

Polynomial Polynomial::variable(std::size_t nvars, std::size_t index) {
    assert(index < nvars);
    Polynomial p(nvars);
    Exponents e(nvars, 0);
    e[index] = 1;
    p.add_term(e, Rational(1));
    return p;
}

void Polynomial::add_term(const Exponents& e, const Rational& c) {
    if (c == 0) return;
    auto [it, inserted] = terms_.try_emplace(e, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0) terms_.erase(it);
    }
}

unsigned Polynomial::degree(std::size_t var) const {
    unsigned d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, e[var]);
    return d;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
    if (o.nvars_ != nvars_) throw std::invalid_argument("polynomial variable count mismatch");
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
    if (o.nvars_ != nvars_) throw std::invalid_argument("polynomial variable count mismatch");
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.nvars_ != b.nvars_) throw std::invalid_argument("polynomial variable count mismatch");
    Polynomial r(a.nvars_);
    for (const auto& [ea, ca] : a.terms_) {
        for (const auto& [eb, cb] : b.terms_) {
            Polynomial::Exponents e(a.nvars_);
            for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
            r.add_term(e, ca * cb);
        }
    }
    return r;
}

Polynomial Polynomial::operator-() const { return scaled(Rational(-1)); }

Polynomial Polynomial::scaled(const Rational& c) const {
    Polynomial r(nvars_);
    for (const auto& [e, x] : terms_) r.add_term(e, x * c);
    return r;
}

Polynomial Polynomial::pow(unsigned n) const {
    Polynomial result = constant(nvars_, Rational(1));
    Polynomial base = *this;
    while (n) {
        if (n & 1u) result = result * base;
        n >>= 1u;
        if (n) base = base * base;
    }
    return result;
}

Rational Polynomial::eval(std::span<const Rational> x) const {
    assert(x.size() >= nvars_);
    Rational sum = 0;
    for (const auto& [e, c] : terms_) {
        Rational t = c;
        for (std::size_t i = 0; i < nvars_; ++i)
            for (unsigned k = 0; k < e[i]; ++k) t *= x[i];
        sum += t;
    }
    return sum;
}

double Polynomial::eval(std::span<const double> x) const {
    assert(x.size() >= nvars_);
    double sum = 0.0;
    for (const auto& [e, c] : terms_) {
        double t = to_double(c);
        for (std::size_t i = 0; i < nvars_; ++i)
            if (e[i]) t *= std::pow(x[i], static_cast<double>(e[i]));
        sum += t;
    }
    return sum;
}

Polynomial Polynomial::derivative(std::size_t var) const {
    Polynomial r(nvars_);
    for (const auto& [e, c] : terms_) {
        if (e[var] == 0) continue;
        Exponents d = e;
        d[var] -= 1;
        r.add_term(d, c * e[var]);
    }
    return r;
}

Polynomial Polynomial::antiderivative(std::size_t var) const {
    Polynomial r(nvars_);
    for (const auto& [e, c] : terms_) {
        Exponents a = e;
        a[var] += 1;
        r.add_term(a, c / a[var]);
    }
    return r;
}

Polynomial Polynomial::substitute(std::size_t var, const Polynomial& p) const {
    if (p.nvars_ != nvars_) throw std::invalid_argument("polynomial variable count mismatch");
    Polynomial r(nvars_);
    std::vector<Polynomial> powers{constant(nvars_, Rational(1))};
    for (const auto& [e, c] : terms_) {
        while (powers.size() <= e[var]) powers.push_back(powers.back() * p);
        Exponents rest = e;
        rest[var] = 0;
        Polynomial mono(nvars_);
        mono.add_term(rest, c);
        r += mono * powers[e[var]];
    }
    return r;
}

Polynomial Polynomial::substitute(std::size_t var, const Rational& value) const {
    Polynomial r(nvars_);
    for (const auto& [e, c] : terms_) {
        Exponents rest = e;
        rest[var] = 0;
        Rational f = c;
        for (unsigned k = 0; k < e[var]; ++k) f *= value;
        r.add_term(rest, f);
    }
    return r;
}

Polynomial Polynomial::integrate(std::size_t var, const Polynomial& lo, const Polynomial& hi) const {
    Polynomial a = antiderivative(var);
    return a.substitute(var, hi) - a.substitute(var, lo);
}

std::vector<Rational> Polynomial::univariate_coefficients(std::size_t var) const {
    std::vector<Rational> out(degree(var) + 1, Rational(0));
    for (const auto& [e, c] : terms_) {
        for (std::size_t i = 0; i < nvars_; ++i)
            if (i != var && e[i] != 0) throw std::invalid_argument("polynomial is not univariate");
        out[e[var]] += c;
    }
    return out;
}

namespace {

Rational horner(const std::vector<Rational>& a, const Rational& x) {
    Rational r = 0;
    for (auto it = a.rbegin(); it != a.rend(); ++it) r = r * x + *it;
    return r;
}

double horner(const std::vector<double>& a, double x) {
    double r = 0.0;
    for (auto it = a.rbegin(); it != a.rend(); ++it) r = r * x + *it;
    return r;
}

int sign(double v) { return (v > 0) - (v < 0); }

// Rational r in (lo, hi) with small denominator and dp(r) == 0 exactly.
std::optional<Rational> recover_root(const std::vector<Rational>& dp, double x, const Rational& lo,
                                     const Rational& hi) {
    BigInt h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double rem = x;
    for (int it = 0; it < 40; ++it) {
        double a = std::floor(rem);
        auto ai = static_cast<long long>(a);
        BigInt h2 = BigInt(ai) * h1 + h0;
        BigInt k2 = BigInt(ai) * k1 + k0;
        if (k2 > 1000000) break;
        h0 = h1; h1 = h2; k0 = k1; k1 = k2;
        Rational r(h1, k1);
        if (r > lo && r < hi && horner(dp, r) == 0) return r;
        double frac = rem - a;
        if (frac < 1e-14) break;
        rem = 1.0 / frac;
    }
    return std::nullopt;
}

}  // namespace

PolyExtremum polynomial_extremum(const Polynomial& p, std::size_t var, const Rational& lo,
                                 const Rational& hi, ExtremumMode mode) {
    if (hi < lo) throw std::invalid_argument("polynomial_extremum: empty interval");
    const std::vector<Rational> a = p.univariate_coefficients(var);
    std::vector<Rational> da;
    for (std::size_t k = 1; k < a.size(); ++k) da.push_back(a[k] * k);
    std::vector<double> dd;
    for (const auto& c : da) dd.push_back(to_double(c));

    const bool want_max = mode == ExtremumMode::max;
    auto better = [&](double cand, double incumbent) {
        return want_max ? cand > incumbent : cand < incumbent;
    };

    PolyExtremum best{to_double(lo), Scalar(horner(a, lo))};
    {
        Scalar vhi(horner(a, hi));
        if (better(vhi.value, best.value.value)) best = {to_double(hi), vhi};
    }
    if (da.empty() || lo == hi) return best;

    // Interior extrema of the requested kind are sign changes of p' going
    // + -> - (max) or - -> + (min).
    const double xl = to_double(lo), xh = to_double(hi);
    constexpr int kScan = 4096;
    double prev_x = xl;
    int prev_s = sign(horner(dd, xl));
    for (int k = 1; k <= kScan; ++k) {
        double x = xl + (xh - xl) * k / kScan;
        int s = sign(horner(dd, x));
        if (s == 0) continue;
        if (prev_s != 0 && s != prev_s && ((want_max && prev_s > 0) || (!want_max && prev_s < 0))) {
            double left = prev_x, right = x;
            for (int it = 0; it < 200 && right - left > 0; ++it) {
                double mid = 0.5 * (left + right);
                if (mid <= left || mid >= right) break;
                if (sign(horner(dd, mid)) == prev_s) left = mid; else right = mid;
            }
            double root = 0.5 * (left + right);
            PolyExtremum cand;
            if (auto r = recover_root(da, root, lo, hi)) {
                cand = {to_double(*r), Scalar(horner(a, *r))};
            } else {
                std::vector<double> ad;
                for (const auto& c : a) ad.push_back(to_double(c));
                cand = {root, Scalar(horner(ad, root))};
            }
            if (better(cand.value.value, best.value.value)) best = cand;
        }
        prev_s = s;
        prev_x = x;
    }
    return best;
}

}  // namespace conekit
