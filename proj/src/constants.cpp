#include "conekit/constants.hpp"

#include "conekit/polynomial.hpp"
#include "conekit/quadrature.hpp"

#include <cmath>
#include <exception>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>

namespace conekit {

using nlohmann::json;

namespace {

const Scalar kZero(Rational(0));
const Scalar kOne(Rational(1));

bool nonneg(const Scalar& x) { return !less(x, kZero); }
bool positive(const Scalar& x) { return less(kZero, x); }

/// p(x) in one variable as a polynomial in `nvars` variables using variable `idx`.
Polynomial lift(const Polynomial& p, std::size_t nvars, std::size_t idx) {
    Polynomial out(nvars);
    Polynomial x = Polynomial::variable(nvars, idx);
    for (const auto& [e, c] : p.terms()) out += x.pow(e[0]).scaled(c);
    return out;
}

Polynomial cst(const Rational& r) { return Polynomial::constant(2, r); }

Rational constant_term(const Polynomial& p) {
    const Rational zero[2] = {0, 0};
    return p.eval(std::span<const Rational>(zero, p.nvars()));
}

struct ExactPieces {
    Polynomial lower, upper, g;  // in (t, s)
};

std::optional<ExactPieces> exact_pieces(const EquationDef& eq) {
    if (!eq.kernel.polynomial()) return std::nullopt;
    auto g = eq.g.to_polynomial();
    if (!g) return std::nullopt;
    return ExactPieces{*eq.kernel.lower_poly(), *eq.kernel.upper_poly(), lift(*g, 2, 1)};
}

double eval1(const Expression& e, double x) { return e.eval(std::span<const double>(&x, 1)); }

/// int_lo^hi k(t, s) g(s) ds for fixed t.
double kernel_row_integral(const EquationDef& eq, double t, double lo, double hi, double tol) {
    Panelization bp(eq.g.breakpoints(0));
    bp.add(t);
    return integrate([&](double s) { return eq.kernel(t, s) * eval1(eq.g, s); }, lo, hi, bp, tol);
}

/// int_lo^hi k(t, s) g(s) ds as an exact polynomial in t (variable 0).
Polynomial kernel_row_poly(const ExactPieces& x, const Rational& lo, const Rational& hi) {
    Polynomial t = Polynomial::variable(2, 0);
    return (x.lower * x.g).integrate(1, cst(lo), t) + (x.upper * x.g).integrate(1, t, cst(hi));
}


Scalar gamma_min_on(const GammaTerm& g, const Scalar& a, const Scalar& b) {
    if (g.sup_norm.value == 0.0) return kZero;
    if (auto p = g.expr.to_polynomial(); p && a.exact && b.exact)
        return polynomial_extremum(*p, 0, *a.exact, *b.exact, ExtremumMode::min).value;
    return Scalar(extremum_on_interval([&](double t) { return eval1(g.expr, t); }, a.value, b.value,
                                       ExtremumMode::min, g.expr.breakpoints(0))
                      .value);
}

void require(bool ok, const char* name, int i, const Scalar& v, const char* what) {
    if (ok) return;
    throw HypothesisError(std::string(name) + "_" + std::to_string(i + 1), v.str() + " violates " + what);
}

}  // namespace

bool Matrix2::has_order_pattern() const {
    return nonneg(m00) && nonneg(m11) && nonneg(-m01) && nonneg(-m10) && positive(det());
}

Matrix2 inverse_order_preserving(const Matrix2& m) {
    if (!(nonneg(m.m00) && nonneg(m.m11) && nonneg(-m.m01) && nonneg(-m.m10)))
        throw HypothesisError("Matrix2", "entries do not follow the sign pattern [[a,-b],[-c,d]] with a,b,c,d >= 0");
    Scalar det = m.det();
    if (!positive(det)) throw HypothesisError("Matrix2", "determinant " + det.str() + " is not positive");
    return {m.m11 / det, -m.m01 / det, -m.m10 / det, m.m00 / det};
}

bool mu_monotonicity_check(const Matrix2& n, const Scalar& mu, const Scalar& p, const Scalar& q) {
    if (!less(kOne, mu)) throw HypothesisError("mu", mu.str() + " is not > 1");
    if (!nonneg(p) || !nonneg(q)) throw HypothesisError("(p,q)", "components must be >= 0");
    Matrix2 nmu{n.m00 + mu - kOne, n.m01, n.m10, n.m11 + mu - kOne};
    auto [x0, y0] = inverse_order_preserving(n).apply(p, q);
    auto [x1, y1] = inverse_order_preserving(nmu).apply(p, q);
    auto le = [](const Scalar& a, const Scalar& b) {
        if (a.exact && b.exact) return *a.exact <= *b.exact;
        return a.value <= b.value + 8 * std::numeric_limits<double>::epsilon() * std::max(std::fabs(a.value), std::fabs(b.value));
    };
    return le(x1, x0) && le(y1, y0);
}

Scalar kernel_functional(const ProblemDef& p, int i, int j, const Scalar& lo, const Scalar& hi) {
    if (!(0.0 <= lo.value && lo.value <= hi.value && hi.value <= 1.0))
        throw std::invalid_argument("kernel_functional: need 0 <= lo <= hi <= 1");
    const EquationDef& eq = p.equation(i);
    const Measure& m = p.boundary(i, j).beta;
    if (m.empty()) return kZero;

    bool exact_ok = lo.exact && hi.exact;
    for (const auto& a : m.atoms) exact_ok = exact_ok && a.at.exact && a.weight.exact;
    std::optional<Polynomial> dens;
    if (m.density) {
        dens = m.density->to_polynomial();
        exact_ok = exact_ok && dens.has_value();
    }
    std::optional<ExactPieces> x;
    if (exact_ok) x = exact_pieces(eq);

    if (x) {
        const Rational l = *lo.exact, h = *hi.exact;
        Rational sum = 0;
        for (const auto& a : m.atoms) {
            const Rational eta = *a.at.exact;
            Polynomial lo_piece = x->lower.substitute(0, eta) * x->g;  // s <= eta
            Polynomial hi_piece = x->upper.substitute(0, eta) * x->g;  // s > eta
            Rational part = 0;
            Rational mid_hi = std::min(h, eta), mid_lo = std::max(l, eta);
            if (l < mid_hi) part += constant_term(lo_piece.integrate(1, cst(l), cst(mid_hi)));
            if (mid_lo < h) part += constant_term(hi_piece.integrate(1, cst(mid_lo), cst(h)));
            sum += *a.weight.exact * part;
        }
        if (dens) {
            Polynomial d = lift(*dens, 2, 0);
            Polynomial s = Polynomial::variable(2, 1);
            // t < s is the upper piece, t >= s the lower piece.
            Polynomial inner = (x->upper * d).integrate(0, cst(0), s) + (x->lower * d).integrate(0, s, cst(1));
            sum += constant_term((inner * x->g).integrate(1, cst(l), cst(h)));
        }
        return Scalar(sum);
    }

    const double tol = p.options.quad_tol;
    Panelization outer(m.breakpoints());
    outer.add(eq.g.breakpoints(0));
    auto K = [&](double s) {
        double v = 0.0;
        for (const auto& a : m.atoms) v += a.weight.value * eq.kernel(a.at.value, s);
        if (m.density) {
            Panelization bp(m.density->breakpoints(0));
            bp.add(s);
            const Expression& d = *m.density;
            v += integrate([&](double t) { return eq.kernel(t, s) * eval1(d, t); }, 0.0, 1.0, bp, tol);
        }
        return v;
    };
    return Scalar(integrate([&](double s) { return K(s) * eval1(eq.g, s); }, lo.value, hi.value, outer, tol));
}

Scalar inverse_m(const ProblemDef& p, int i) {
    const EquationDef& eq = p.equation(i);
    if (auto x = exact_pieces(eq)) {
        Polynomial row = kernel_row_poly(*x, 0, 1);
        return polynomial_extremum(row, 0, 0, 1, ExtremumMode::max).value;
    }
    const double tol = p.options.quad_tol;
    auto f = [&](double t) { return kernel_row_integral(eq, t, 0.0, 1.0, tol); };
    return Scalar(extremum_on_interval(f, 0.0, 1.0, ExtremumMode::max, eq.g.breakpoints(0)).value);
}

Scalar inverse_M(const ProblemDef& p, int i) {
    const EquationDef& eq = p.equation(i);
    if (eq.a.exact && eq.b.exact) {
        if (auto x = exact_pieces(eq)) {
            Polynomial row = kernel_row_poly(*x, *eq.a.exact, *eq.b.exact);
            return polynomial_extremum(row, 0, *eq.a.exact, *eq.b.exact, ExtremumMode::min).value;
        }
    }
    const double tol = p.options.quad_tol;
    auto f = [&](double t) { return kernel_row_integral(eq, t, eq.a.value, eq.b.value, tol); };
    return Scalar(extremum_on_interval(f, eq.a.value, eq.b.value, ExtremumMode::min, eq.g.breakpoints(0)).value);
}

TheoryConstants compute_all(const ProblemDef& p) {
    TheoryConstants k;

    // The twelve quadratures are independent; run them side by side.
    std::vector<std::function<void()>> jobs;
    for (int i = 0; i < 2; ++i) {
        EquationConstants& e = k.eq[static_cast<std::size_t>(i)];
        const EquationDef& d = p.equation(i);
        jobs.emplace_back([&p, &e, i] { e.inv_m = inverse_m(p, i); });
        jobs.emplace_back([&p, &e, i] { e.inv_M = inverse_M(p, i); });
        for (int j = 0; j < 2; ++j) {
            BoundaryConstants& b = e.bc[static_cast<std::size_t>(j)];
            jobs.emplace_back([&p, &b, i, j] { b.kernel_full = kernel_functional(p, i, j, kZero, kOne); });
            jobs.emplace_back([&p, &b, &d, i, j] { b.kernel_ab = kernel_functional(p, i, j, d.a, d.b); });
        }
    }
    std::vector<std::exception_ptr> errors(jobs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t n = 0; n < jobs.size(); ++n) {
        try {
            jobs[n]();
        } catch (...) {
            errors[n] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    for (int i = 0; i < 2; ++i) {
        EquationConstants& e = k.eq[static_cast<std::size_t>(i)];
        const EquationDef& d = p.equation(i);
        e.c = d.c;
        for (int j = 0; j < 2; ++j) {
            BoundaryConstants& b = e.bc[static_cast<std::size_t>(j)];
            const BoundaryDef& bd = p.boundary(i, j);
            b.beta_gamma = {beta_of_gamma(p, i, j, 0), beta_of_gamma(p, i, j, 1)};
            b.delta_one = delta_of_one(p, i, j);
            b.gamma_norm = bd.gamma.sup_norm;
            b.c_gamma = bd.gamma.c_gamma;
            b.gamma_min = gamma_min_on(bd.gamma, d.a, d.b);
            b.h_lo = bd.h_lo;
            b.h_hi = bd.h_hi;
            b.l_hi = bd.l_hi;
        }
        const BoundaryConstants& b1 = e.bc[0];
        const BoundaryConstants& b2 = e.bc[1];
        e.c_tilde = min(e.c, min(b1.c_gamma, b2.c_gamma));

        auto dmat = [&](const Scalar& h1, const Scalar& h2) {
            return Matrix2::pattern(kOne - h1 * b1.beta_gamma[0], h2 * b1.beta_gamma[1], h1 * b2.beta_gamma[0],
                                    kOne - h2 * b2.beta_gamma[1]);
        };
        e.D_matrix = dmat(b1.h_hi, b2.h_hi);
        e.D_under_matrix = dmat(b1.h_lo, b2.h_lo);
        e.D = e.D_matrix.det();
        e.D_under = e.D_under_matrix.det();
        require(positive(e.D), "D", i, e.D, "D_i > 0");
        require(positive(e.D_under), "D_under", i, e.D_under, "D_under_i > 0");
        Matrix2 inv = inverse_order_preserving(e.D_matrix);
        e.theta = {inv.m00, inv.m01, inv.m10, inv.m11};
        for (const auto& th : e.theta) require(nonneg(th), "theta", i, th, "theta >= 0");

        e.Q = b1.beta_gamma[0] * b1.l_hi * b1.delta_one + b1.beta_gamma[1] * b2.l_hi * b2.delta_one;
        e.S = b2.beta_gamma[0] * b1.l_hi * b1.delta_one + b2.beta_gamma[1] * b2.l_hi * b2.delta_one;

        require(positive(e.inv_m), "m", i, e.inv_m, "1/m_i > 0");
        require(positive(e.inv_M), "M", i, e.inv_M, "1/M_i > 0");
        e.m = kOne / e.inv_m;
        e.M = kOne / e.inv_M;
        require(!less(e.M, e.m), "M", i, e.M, "M_i >= m_i");
    }
    k.c = min(k.eq[0].c_tilde, k.eq[1].c_tilde);
    require(positive(k.c) && !less(kOne, k.c), "c", 0, k.c, "c in (0,1]");
    return k;
}

json scalar_to_json(const Scalar& s) {
    json o = {{"value", s.value}};
    if (s.exact) o["exact"] = to_string(*s.exact);
    return o;
}

json to_json(const TheoryConstants& k) {
    json out;
    out["c"] = scalar_to_json(k.c);
    out["equations"] = json::array();
    for (int i = 0; i < 2; ++i) {
        const EquationConstants& e = k.equation(i);
        json eq = {{"c", scalar_to_json(e.c)},       {"c_tilde", scalar_to_json(e.c_tilde)},
                   {"inv_m", scalar_to_json(e.inv_m)}, {"m", scalar_to_json(e.m)},
                   {"inv_M", scalar_to_json(e.inv_M)}, {"M", scalar_to_json(e.M)},
                   {"D", scalar_to_json(e.D)},       {"D_under", scalar_to_json(e.D_under)},
                   {"Q", scalar_to_json(e.Q)},       {"S", scalar_to_json(e.S)}};
        eq["theta"] = json::array();
        for (const auto& th : e.theta) eq["theta"].push_back(scalar_to_json(th));
        eq["boundary"] = json::array();
        for (int j = 0; j < 2; ++j) {
            const BoundaryConstants& b = k.boundary(i, j);
            eq["boundary"].push_back({{"index", {i + 1, j + 1}},
                                      {"beta_gamma", {scalar_to_json(b.beta_gamma[0]), scalar_to_json(b.beta_gamma[1])}},
                                      {"delta_one", scalar_to_json(b.delta_one)},
                                      {"kernel_full", scalar_to_json(b.kernel_full)},
                                      {"kernel_ab", scalar_to_json(b.kernel_ab)},
                                      {"gamma_norm", scalar_to_json(b.gamma_norm)},
                                      {"gamma_min", scalar_to_json(b.gamma_min)},
                                      {"c_gamma", scalar_to_json(b.c_gamma)},
                                      {"h_lo", scalar_to_json(b.h_lo)},
                                      {"h_hi", scalar_to_json(b.h_hi)},
                                      {"l_hi", scalar_to_json(b.l_hi)}});
        }
        out["equations"].push_back(eq);
    }
    return out;
}

std::string to_table(const TheoryConstants& k) {
    std::ostringstream os;
    auto row = [&](const std::string& name, const Scalar& s) {
        os << "  " << std::left << std::setw(26) << name << std::setw(22) << (s.exact ? to_string(*s.exact) : "")
           << std::setprecision(12) << s.value << "\n";
    };
    os << std::left << std::setw(28) << "constant" << std::setw(22) << "exact"
       << "value\n";
    row("c", k.c);
    for (int i = 0; i < 2; ++i) {
        const EquationConstants& e = k.equation(i);
        const std::string n = std::to_string(i + 1);
        os << "equation " << n << "\n";
        row("c_" + n, e.c);
        row("c~_" + n, e.c_tilde);
        row("m_" + n, e.m);
        row("M_" + n, e.M);
        row("D_" + n, e.D);
        row("D_under_" + n, e.D_under);
        for (int t = 0; t < 4; ++t) row("theta_" + n + std::to_string(t + 1), e.theta[static_cast<std::size_t>(t)]);
        row("Q_" + n, e.Q);
        row("S_" + n, e.S);
        for (int j = 0; j < 2; ++j) {
            const BoundaryConstants& b = k.boundary(i, j);
            const std::string ij = n + std::to_string(j + 1);
            row("c_" + ij, b.c_gamma);
            row("||gamma_" + ij + "||", b.gamma_norm);
            for (int l = 0; l < 2; ++l)
                row("beta_" + ij + "[gamma_" + n + std::to_string(l + 1) + "]", b.beta_gamma[static_cast<std::size_t>(l)]);
            row("delta_" + ij + "[1]", b.delta_one);
            row("int_0^1 K_" + ij + " g", b.kernel_full);
            row("int_a^b K_" + ij + " g", b.kernel_ab);
        }
    }
    return os.str();
}

}  // namespace conekit
