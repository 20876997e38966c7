#include "conekit/quadrature.hpp"

#include "conekit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace conekit {

Panelization::Panelization(std::vector<double> pts) { add(pts); }

void Panelization::add(double x) {
    auto it = std::lower_bound(pts_.begin(), pts_.end(), x);
    if (it == pts_.end() || *it != x) pts_.insert(it, x);
}

void Panelization::add(const std::vector<double>& xs) {
    for (double x : xs) add(x);
}

std::vector<double> Panelization::clip(double lo, double hi) const {
    std::vector<double> out;
    for (double x : pts_)
        if (x > lo && x < hi) out.push_back(x);
    return out;
}

const GaussLegendre15& GaussLegendre15::get() {
    static const GaussLegendre15 rule = [] {
        GaussLegendre15 r{};
        constexpr int n = 15;
        for (int i = 0; i < n; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                double dx = p1 / dp;
                x -= dx;
                if (std::fabs(dx) < 1e-16) break;
            }
            r.nodes[static_cast<std::size_t>(i)] = x;
            r.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        return r;
    }();
    return rule;
}

namespace {

double gl15(const RealFn& f, double a, double b) {
    const auto& rule = GaussLegendre15::get();
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < 15; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    if (std::isnan(sum)) {
        std::ostringstream os;
        os << "integrand produced NaN on [" << a << ", " << b << "]";
        throw NumericalError(os.str());
    }
    return half * sum;
}

}  // namespace

Integral integrate_detailed(const RealFn& f, double lo, double hi, const Panelization& panels, double tol) {
    if (!(tol > 0)) throw std::invalid_argument("integrate: tol must be positive");
    if (hi < lo) throw std::invalid_argument("integrate: lo > hi");
    Integral result;
    if (hi == lo) return result;

    std::vector<double> edges{lo};
    for (double x : panels.clip(lo, hi)) edges.push_back(x);
    edges.push_back(hi);

    struct Panel {
        double a, b, whole;
    };
    std::vector<Panel> stack;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k)
        stack.push_back({edges[k], edges[k + 1], gl15(f, edges[k], edges[k + 1])});

    const double width = hi - lo;
    int splits = 0;
    Panel worst{lo, hi, 0.0};
    double worst_err = -1.0;
    while (!stack.empty()) {
        Panel p = stack.back();
        stack.pop_back();
        const double mid = 0.5 * (p.a + p.b);
        const double left = gl15(f, p.a, mid);
        const double right = gl15(f, mid, p.b);
        const double refined = left + right;
        const double err = std::fabs(refined - p.whole);
        const double allowed = tol * (p.b - p.a) / width;
        // Below this width the panel cannot be split meaningfully in doubles.
        const bool tiny = (p.b - p.a) < 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(mid));
        if (err <= allowed || tiny) {
            result.value += refined;
            result.error += err;
            ++result.panels;
            continue;
        }
        if (err > worst_err) {
            worst_err = err;
            worst = p;
        }
        if (++splits > kMaxSubdivisions) {
            std::ostringstream os;
            os << "quadrature did not converge after " << kMaxSubdivisions << " subdivisions; worst panel ["
               << worst.a << ", " << worst.b << "] error estimate " << worst_err;
            throw NumericalError(os.str());
        }
        stack.push_back({mid, p.b, right});
        stack.push_back({p.a, mid, left});
    }
    return result;
}

std::vector<double> Measure::breakpoints() const {
    std::vector<double> out;
    for (const auto& a : atoms) out.push_back(a.at.value);
    if (density) {
        auto b = density->breakpoints(0);
        out.insert(out.end(), b.begin(), b.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double Measure::total(double tol) const {
    return stieltjes([](double) { return 1.0; }, *this, tol);
}

double stieltjes(const RealFn& w, const Measure& m, double tol, const Panelization& extra) {
    double sum = 0.0;
    for (const auto& a : m.atoms) sum += a.weight.value * w(a.at.value);
    if (m.density) {
        Panelization p = extra;
        p.add(m.density->breakpoints(0));
        const Expression& d = *m.density;
        sum += integrate([&](double s) { return w(s) * d.eval(std::span<const double>(&s, 1)); }, 0.0, 1.0, p, tol);
    }
    return sum;
}

std::optional<Rational> stieltjes_exact(const Expression& w, const Measure& m) {
    Rational sum = 0;
    for (const auto& a : m.atoms) {
        if (!a.at.exact || !a.weight.exact) return std::nullopt;
        Rational at = *a.at.exact;
        auto v = w.eval_exact(std::span<const Rational>(&at, 1));
        if (!v) return std::nullopt;
        sum += *a.weight.exact * *v;
    }
    if (m.density) {
        auto wp = w.to_polynomial();
        auto dp = m.density->to_polynomial();
        if (!wp || !dp || wp->nvars() != 1 || dp->nvars() != 1) return std::nullopt;
        Polynomial prod = *wp * *dp;
        Polynomial val = prod.integrate(0, Polynomial::constant(1, 0), Polynomial::constant(1, 1));
        sum += val.is_zero() ? Rational(0) : val.terms().begin()->second;
    }
    return sum;
}

Extremum extremum_on_interval(const RealFn& f, double lo, double hi, ExtremumMode mode,
                              const std::vector<double>& extra) {
    if (hi < lo) throw std::invalid_argument("extremum_on_interval: lo > hi");
    const bool want_max = mode == ExtremumMode::max;
    auto better = [&](double a, double b) { return want_max ? a > b : a < b; };

    std::vector<double> xs;
    constexpr int kScan = 1025;
    xs.reserve(kScan + extra.size());
    for (int k = 0; k < kScan; ++k) xs.push_back(lo + (hi - lo) * k / (kScan - 1));
    xs.back() = hi;
    for (double x : extra)
        if (x > lo && x < hi) xs.push_back(x);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    std::size_t best = 0;
    std::vector<double> vals(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
        vals[k] = f(xs[k]);
        if (std::isnan(vals[k])) throw NumericalError("extremum_on_interval: NaN from function");
        if (better(vals[k], vals[best])) best = k;
    }
    Extremum result{xs[best], vals[best]};
    if (xs.size() < 3) return result;

    // Golden-section on the two cells adjacent to the incumbent.
    double a = xs[best == 0 ? 0 : best - 1];
    double b = xs[std::min(best + 1, xs.size() - 1)];
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto score = [&](double x) { return want_max ? -f(x) : f(x); };
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = score(c), fd = score(d);
    for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, std::fabs(a)); ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = score(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = score(d);
        }
    }
    double x = 0.5 * (a + b);
    double v = f(x);
    if (better(v, result.value)) result = {x, v};
    return result;
}

}  // namespace conekit
