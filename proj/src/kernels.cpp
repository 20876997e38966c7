#include "conekit/kernels.hpp"

#include "conekit/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace conekit {

namespace {

const std::vector<std::string> kTS{"t", "s"};
const std::vector<std::string> kS{"s"};
const std::vector<std::string> kT{"t"};

constexpr const char* kPhi2 =
    "piecewise(s in [0, 1/2]: sqrt(3)/27*s*(1 - s^2)^(3/2); "
    "s in (1/2, 1]: sqrt(3)/27*(1 - s)*s^(3/2)*(2 - s)^(3/2))";
constexpr const char* kConc2 =
    "piecewise(t in [0, 1/2]: 3*sqrt(3)/2*t*(1 - t^2); t in (1/2, 1]: 3*sqrt(3)/2*t*(1 - t)*(2 - t))";

Rational exact_or_dyadic(const Scalar& x) { return x.exact ? *x.exact : from_double(x.value); }

}  // namespace

KernelSpec::KernelSpec(Kind kind, Expression lower, Expression upper, Expression phi, std::optional<Expression> conc)
    : kind_(kind), lower_(std::move(lower)), upper_(std::move(upper)), phi_(std::move(phi)), conc_(std::move(conc)) {
    lower_poly_ = lower_.to_polynomial();
    upper_poly_ = upper_.to_polynomial();
}

KernelSpec KernelSpec::builtin2() {
    return KernelSpec(Kind::builtin2, Expression::parse("s*(1 - t)", kTS), Expression::parse("t*(1 - s)", kTS),
                      Expression::parse("s*(1 - s)", kS), std::nullopt);
}

KernelSpec KernelSpec::builtin4() {
    return KernelSpec(Kind::builtin4, Expression::parse("1/6*s*(1 - t)*(2*t - s^2 - t^2)", kTS),
                      Expression::parse("1/6*t*(1 - s)*(2*s - t^2 - s^2)", kTS), Expression::parse(kPhi2, kS),
                      Expression::parse(kConc2, kT));
}

KernelSpec KernelSpec::custom(Expression lower, Expression upper, Expression phi, std::optional<Expression> conc) {
    if (lower.variables() != kTS || upper.variables() != kTS)
        throw std::invalid_argument("custom kernel pieces must be declared over (t, s)");
    if (phi.variables() != kS) throw std::invalid_argument("kernel phi must be declared over (s)");
    if (conc && conc->variables() != kT) throw std::invalid_argument("kernel conc must be declared over (t)");
    return KernelSpec(Kind::custom, std::move(lower), std::move(upper), std::move(phi), std::move(conc));
}

std::string KernelSpec::name() const {
    switch (kind_) {
        case Kind::builtin2: return "builtin2";
        case Kind::builtin4: return "builtin4";
        case Kind::custom: return "custom";
    }
    return "custom";
}

double KernelSpec::operator()(double t, double s) const {
    if (!(t >= 0.0 && t <= 1.0 && s >= 0.0 && s <= 1.0)) {
        std::ostringstream os;
        os << "kernel argument outside [0,1]^2: (" << t << ", " << s << ")";
        throw std::domain_error(os.str());
    }
    switch (kind_) {
        case Kind::builtin2: return s <= t ? s * (1.0 - t) : t * (1.0 - s);
        case Kind::builtin4:
            return s <= t ? s * (1.0 - t) * (2.0 * t - s * s - t * t) / 6.0
                          : t * (1.0 - s) * (2.0 * s - t * t - s * s) / 6.0;
        case Kind::custom: break;
    }
    const double x[2] = {t, s};
    return s <= t ? lower_.eval(x) : upper_.eval(x);
}

double KernelSpec::phi(double s) const {
    if (kind_ == Kind::builtin2) return s * (1.0 - s);
    return phi_.eval(std::span<const double>(&s, 1));
}

Scalar derive_c(const KernelSpec& k, const Scalar& a, const Scalar& b) {
    if (!(0.0 <= a.value && a.value < b.value && b.value <= 1.0))
        throw std::invalid_argument("derive_c: need 0 <= a < b <= 1");
    Scalar c;
    switch (k.kind()) {
        case KernelSpec::Kind::builtin2:
            c = min(Scalar(Rational(1)) - b, a);
            break;
        case KernelSpec::Kind::builtin4: {
            // c_2(t) = (3 sqrt(3)/2) p(t) with p piecewise polynomial; minimise p exactly.
            const Rational lo = exact_or_dyadic(a), hi = exact_or_dyadic(b), half(1, 2);
            Polynomial t = Polynomial::variable(1, 0);
            Polynomial one = Polynomial::constant(1, 1);
            Polynomial left = t * (one - t * t);
            Polynomial right = t * (one - t) * (Polynomial::constant(1, 2) - t);
            std::optional<Scalar> best;
            auto consider = [&](const Polynomial& p, const Rational& l, const Rational& h) {
                if (h < l) return;
                auto e = polynomial_extremum(p, 0, l, h, ExtremumMode::min);
                if (!best || less(e.value, *best)) best = e.value;
            };
            consider(left, lo, std::min(hi, half));
            consider(right, std::max(lo, half), hi);
            c = Scalar(1.5 * std::sqrt(3.0) * best->value);
            break;
        }
        case KernelSpec::Kind::custom: {
            if (k.conc()) {
                const Expression& conc = *k.conc();
                auto e = extremum_on_interval([&](double t) { return conc.eval(std::span<const double>(&t, 1)); },
                                              a.value, b.value, ExtremumMode::min, conc.breakpoints(0));
                c = Scalar(e.value);
            } else {
                constexpr int n = 201;
                double inf = std::numeric_limits<double>::infinity();
                for (int i = 0; i < n; ++i) {
                    double t = a.value + (b.value - a.value) * i / (n - 1);
                    for (int j = 0; j < n; ++j) {
                        double s = static_cast<double>(j) / (n - 1);
                        double ph = k.phi(s);
                        if (ph > 0) inf = std::min(inf, k(t, s) / ph);
                    }
                }
                c = Scalar(std::min(inf, 1.0));
            }
            break;
        }
    }
    if (!(c.value > 0.0)) {
        std::ostringstream os;
        os << "derived kernel constant c = " << c.value << " on [" << a.value << ", " << b.value << "]";
        throw ValidationError({{"k_i(t,s) >= c_i Phi_i(s) with c_i in (0,1]", os.str()}});
    }
    return c;
}

std::vector<Violation> check_kernel_bounds(const KernelSpec& k, double a, double b, double c, int grid) {
    std::vector<double> ts, ss;
    for (int i = 0; i < grid; ++i) ts.push_back(static_cast<double>(i) / (grid - 1));
    ss = ts;
    for (double x : k.phi_breakpoints()) ss.push_back(x);
    ts.push_back(a);
    ts.push_back(b);

    std::vector<Violation> out;
    auto report = [&](const std::string& which, double t, double s, double lhs, double rhs) {
        std::ostringstream os;
        os << which << " fails at (t, s) = (" << t << ", " << s << "): " << lhs << " vs " << rhs;
        out.push_back({"k_i(t,s) bounds: 0 <= k_i <= Phi_i, k_i >= c_i Phi_i on [a_i,b_i]", os.str()});
    };
    for (double t : ts) {
        for (double s : ss) {
            double kv = k(t, s), ph = k.phi(s);
            double slack = 1e-12 + 1e-9 * std::fabs(ph);
            if (kv < -slack) {
                report("k >= 0", t, s, kv, 0.0);
                return out;
            }
            if (kv > ph + slack) {
                report("k <= phi", t, s, kv, ph);
                return out;
            }
            if (t >= a && t <= b && kv < c * ph - slack) {
                report("k >= c*phi", t, s, kv, c * ph);
                return out;
            }
        }
    }
    return out;
}

GammaTerm derive_gamma_constants(const Expression& g, const Scalar& a, const Scalar& b) {
    GammaTerm out{g, {}, {}};
    if (auto p = g.to_polynomial(); p && p->nvars() == 1) {
        auto sup = polynomial_extremum(*p, 0, Rational(0), Rational(1), ExtremumMode::max);
        auto low = polynomial_extremum(*p, 0, exact_or_dyadic(a), exact_or_dyadic(b), ExtremumMode::min);
        if (sup.value.value <= 0.0) throw DegenerateGammaError("gamma '" + g.source() + "' vanishes on [0,1]");
        out.sup_norm = sup.value;
        out.c_gamma = low.value / sup.value;
        return out;
    }
    auto f = [&](double t) { return g.eval(std::span<const double>(&t, 1)); };
    auto bp = g.breakpoints(0);
    auto sup = extremum_on_interval(f, 0.0, 1.0, ExtremumMode::max, bp);
    if (sup.value <= 0.0) throw DegenerateGammaError("gamma '" + g.source() + "' vanishes on [0,1]");
    auto low = extremum_on_interval(f, a.value, b.value, ExtremumMode::min, bp);
    out.sup_norm = Scalar(sup.value);
    out.c_gamma = Scalar(low.value / sup.value);
    return out;
}

}  // namespace conekit
