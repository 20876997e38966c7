// Acceptance run on the shipped example problem: one PASS/FAIL line per
// criterion, exit status 1 if any criterion fails.

#include "conekit/constants.hpp"
#include "conekit/index.hpp"
#include "conekit/kernels.hpp"
#include "conekit/problem.hpp"
#include "conekit/quadrature.hpp"
#include "conekit/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace conekit;
using nlohmann::json;

namespace {

const double kSqrt3 = std::sqrt(3.0);
const double kC2 = 45 * kSqrt3 / 128;

std::string path(const std::string& rel) { return std::string(CONEKIT_SOURCE_DIR) + "/" + rel; }

json read(const std::string& rel) {
    std::ifstream in(path(rel));
    std::stringstream ss;
    ss << in.rdbuf();
    return json::parse(ss.str());
}

Rational q(const char* s) { return *parse_rational(s); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Collects the reasons a criterion fails.
struct Findings {
    std::vector<std::string> misses;
    void require(bool ok, const std::string& what) {
        if (!ok) misses.push_back(what);
    }
    void exact(const Scalar& s, const char* want, const std::string& name) {
        require(s.exact && *s.exact == q(want), name + " = " + s.str() + ", want " + want);
    }
    void close(const Scalar& s, double want, double tol, const std::string& name) {
        std::ostringstream os;
        os << name << " = " << s.value << ", want " << want << " within " << tol;
        require(std::fabs(s.value - want) < tol, os.str());
    }
};

struct Outcome {
    bool pass;
    std::string detail;
};

Outcome finish(const Findings& f, const std::string& ok_detail) {
    if (f.misses.empty()) return {true, ok_detail};
    std::string d;
    for (const auto& m : f.misses) d += (d.empty() ? "" : "; ") + m;
    return {false, d};
}

Outcome constants_reproduction() {
    const auto t0 = std::chrono::steady_clock::now();
    const ProblemDef p = load(path("problems/example.json"));
    const TheoryConstants k = compute_all(p);
    Findings f;
    f.exact(k.equation(0).c, "1/4", "c_1");
    f.close(k.equation(1).c, kC2, 1e-10, "c_2");
    f.exact(k.boundary(0, 0).c_gamma, "1/4", "c_11");
    f.exact(k.boundary(0, 1).c_gamma, "1/4", "c_12");
    f.exact(k.boundary(1, 0).c_gamma, "1/4", "c_21");
    f.close(k.boundary(1, 1).c_gamma, kC2, 1e-10, "c_22");
    f.close(k.equation(0).m, 8, 1e-8, "m_1");
    f.close(k.equation(0).M, 16, 1e-8, "M_1");
    f.close(k.equation(1).m, 384.0 / 5, 1e-8, "m_2");
    f.close(k.equation(1).M, 768.0 / 5, 1e-8, "M_2");
    f.exact(k.boundary(0, 0).beta_gamma[0], "3/4", "beta_11[gamma_11]");
    f.exact(k.boundary(0, 0).beta_gamma[1], "1/4", "beta_11[gamma_12]");
    f.exact(k.boundary(1, 0).beta_gamma[0], "2/3", "beta_21[gamma_21]");
    f.exact(k.boundary(1, 0).beta_gamma[1], "4/81", "beta_21[gamma_22]");
    f.exact(k.boundary(1, 1).beta_gamma[0], "1/3", "beta_22[gamma_21]");
    f.exact(k.boundary(1, 1).beta_gamma[1], "5/81", "beta_22[gamma_22]");
    const Scalar zero(Rational(0)), one(Rational(1)), a(q("1/4")), b(q("3/4"));
    auto integral = [&](int i, const Scalar& lo, const Scalar& hi, const char* want, const std::string& name) {
        Scalar s = kernel_functional(p, i, 0, lo, hi);
        if (s.exact)
            f.exact(s, want, name);
        else
            f.close(s, to_double(q(want)), 1e-12, name);
    };
    integral(0, zero, one, "3/32", "K_1[0,1]");
    integral(0, a, b, "1/16", "K_1[a,b]");
    integral(1, zero, one, "11/972", "K_2[0,1]");
    integral(1, a, b, "3985/497664", "K_2[a,b]");
    const double secs = seconds_since(t0);
    f.require(secs < 10, "runtime " + std::to_string(secs) + " s");
    return finish(f, "all 20 values reproduced in " + std::to_string(secs) + " s");
}

Outcome green_identities() {
    auto k1 = KernelSpec::builtin2();
    auto k2 = KernelSpec::builtin4();
    double worst1 = 0, worst2 = 0;
    for (int n = 0; n <= 100; ++n) {
        const double t = n / 100.0;
        const double g1 = t * (1 - t) / 2;
        const double g2 = t * t * t * t / 24 - t * t * t / 12 + t / 24;
        worst1 = std::max(worst1, std::fabs(integrate([&](double s) { return k1(t, s); }, 0, 1, {t}) - g1));
        worst2 = std::max(worst2, std::fabs(integrate([&](double s) { return k2(t, s); }, 0, 1, {t}) - g2));
    }
    std::ostringstream os;
    os << "max error " << worst1 << " (second order), " << worst2 << " (fourth order) at 101 points";
    Findings f;
    f.require(worst1 < 1e-10 && worst2 < 1e-10, os.str());
    return finish(f, os.str());
}

Outcome threshold_band() {
    const ProblemDef p = load(path("problems/example.json"));
    const TheoryConstants k = compute_all(p);
    const auto star = check_condition(p, k, Scalar(q("1/8")), ConditionKind::index0_star);
    const auto one = check_condition(p, k, Scalar(q("1")), ConditionKind::index1);
    const auto zero = check_condition(p, k, Scalar(q("11")), ConditionKind::index0);
    struct Row {
        const char* name;
        const Scalar& got;
        double reference;
    } rows[] = {{"star rho=1/8, eq 1", star.eq[0].threshold, 14.81},
                {"index1 rho=1, eq 1", one.eq[0].threshold, 2.97},
                {"index1 rho=1, eq 2", one.eq[1].threshold, 53.93},
                {"index0 rho=11, eq 2", zero.eq[1].threshold, 141.49}};
    Findings f;
    std::ostringstream all;
    for (const auto& r : rows) {
        std::ostringstream os;
        os << r.name << ": " << r.got.str() << " = " << r.got.value << " vs " << r.reference;
        all << (all.tellp() > 0 ? "; " : "") << os.str();
        f.require(std::fabs(r.got.value - r.reference) <= 0.1, os.str() + " (off by " +
                                                                   std::to_string(std::fabs(r.got.value - r.reference)) +
                                                                   ")");
    }
    f.require(star.satisfied, "star condition at 1/8 not satisfied");
    f.require(one.satisfied, "index-1 condition at 1 not satisfied");
    f.require(zero.satisfied, "index-0 condition at 11 not satisfied");
    if (f.misses.empty()) return {true, all.str() + "; all three conditions satisfied"};
    return {false, finish(f, "").detail + " [all: " + all.str() + "]"};
}

Outcome multiplicity_verdict() {
    const ProblemDef p = load(path("problems/example.json"));
    const TheoryConstants k = compute_all(p);
    const auto v = multiplicity(p, k, parse_ladder("1/8:star,1:one,11:zero"));
    Findings f;
    f.require(v.clause == "S3", "clause " + v.clause);
    f.require(v.guaranteed_count == 2, "guaranteed_count " + std::to_string(v.guaranteed_count));
    f.exact(k.c, "1/4", "c");
    f.require(v.gap_checks.size() == 2, "expected two gap checks");
    std::string gaps;
    for (const auto& g : v.gap_checks) {
        f.require(g.satisfied, "gap " + g.constraint + " fails");
        gaps += (gaps.empty() ? "" : ", ") + g.constraint;
    }
    return finish(f, "S3, at least 2 positive solutions; gaps " + gaps);
}

Outcome matrix_properties() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> num(0, 40), den(1, 16);
    auto rational = [&] { return Rational(num(rng), den(rng)); };
    int order_fail = 0, mu_fail = 0, order_n = 0, mu_n = 0;
    while (order_n < 10000) {
        Rational a = rational(), b = rational(), c = rational(), d = rational();
        if (a * d - b * c <= 0) continue;
        ++order_n;
        auto inv = inverse_order_preserving(Matrix2::pattern(a, b, c, d));
        Rational p0 = rational() - 20, q0 = rational() - 20;
        Rational p1 = p0 + rational(), q1 = q0 + rational();
        auto lo = inv.apply(p0, q0), hi = inv.apply(p1, q1);
        if (!(*lo.first.exact <= *hi.first.exact && *lo.second.exact <= *hi.second.exact)) ++order_fail;
    }
    while (mu_n < 10000) {
        Rational a = rational(), b = rational(), c = rational(), d = rational();
        if (a * d - b * c <= 0) continue;
        ++mu_n;
        Rational mu = 1 + rational() + Rational(1, 16);
        try {
            if (!mu_monotonicity_check(Matrix2::pattern(a, b, c, d), mu, rational(), rational())) ++mu_fail;
        } catch (const Error&) {
            ++mu_fail;
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream os;
    os << order_n << " order-preservation cases, " << order_fail << " failures; " << mu_n << " mu cases, " << mu_fail
       << " failures; " << secs << " s";
    Findings f;
    f.require(order_fail == 0 && mu_fail == 0 && secs < 5, os.str());
    return finish(f, os.str());
}

Outcome solver_properties() {
    Findings f;
    std::ostringstream os;
    {
        const ProblemDef toy = load(path("problems/linear_toy.json"));
        const TheoryConstants k = compute_all(toy);
        auto d = make_discretization(toy, 257);
        auto z = GridFunction::constant(d.nodes(), 0.0);
        auto r = picard(d, k, z, z, SolveOptions{});
        double err = 0;
        for (int m = 0; m <= 1000; ++m) {
            const double t = m / 1000.0;
            err = std::max(err, std::fabs(r.u(t) - t * (1 - t) / 2));
        }
        os << "(a) toy error " << err;
        f.require(err < 1e-10, "(a) toy error " + std::to_string(err));
    }
    const ProblemDef p = load(path("problems/example.json"));
    const TheoryConstants k = compute_all(p);
    auto d = make_discretization(p, 257);
    {
        auto m = multistart(d, k, {{0, 1}, {1, 100}}, 4, SolveOptions{});
        bool found = false;
        for (const auto& s : m.solutions)
            if (s.residual < 1e-8 && s.in_cone[0] && s.in_cone[1]) {
                found = true;
                os << "; (b) fixed point with norm " << s.norm << ", residual " << s.residual << ", in cone";
                break;
            }
        os << " (" << m.solutions.size() << " distinct from " << m.seeds << " starts)";
        f.require(found, "(b) no in-cone fixed point with residual < 1e-8");
    }
    {
        const double a0 = p.equation(0).a.value, b0 = p.equation(0).b.value;
        const double a1 = p.equation(1).a.value, b1 = p.equation(1).b.value;
        const double c0 = k.equation(0).c_tilde.value, c1 = k.equation(1).c_tilde.value;
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> scale(0, 50), wiggle(-0.4, 0.4);
        auto member = [&](double a, double b, double c) {
            for (;;) {
                const double s = scale(rng), w1 = wiggle(rng), w2 = wiggle(rng);
                std::vector<double> vals;
                for (double t : d.nodes()) vals.push_back(s * (1 + w1 * std::sin(3 * t) + w2 * t * (1 - t)));
                GridFunction g(d.nodes(), vals);
                if (in_cone(g, a, b, c, 0.0)) return g;
            }
        };
        int outside = 0;
        for (int n = 0; n < 100; ++n) {
            auto [tu, tv] = apply_T(d, member(a0, b0, c0), member(a1, b1, c1));
            if (!in_cone(tu, a0, b0, c0, 1e-9) || !in_cone(tv, a1, b1, c1, 1e-9)) ++outside;
        }
        os << "; (c) " << 100 - outside << "/100 images in the cone";
        f.require(outside == 0, "(c) " + std::to_string(outside) + " images left the cone");
    }
    return finish(f, os.str());
}

Outcome validation_suite() {
    const json base = read("problems/example.json");
    auto term = [](json& doc, int i, int j) -> json& {
        for (auto& b : doc["boundary"])
            if (b["index"][0] == i && b["index"][1] == j) return b;
        throw std::logic_error("missing boundary term");
    };
    struct Case {
        const char* assumption;
        std::function<void(json&)> edit;
    };
    const std::vector<Case> cases{
        {"dB_ij, dC_ij are positive measures", [&](json& d) { term(d, 1, 2)["beta"]["atoms"][0]["weight"] = -1; }},
        {"h_ij2 beta_ij[gamma_ij] < 1", [&](json& d) { term(d, 1, 1)["h_hi"] = "4/3"; }},
        {"D_i > 0",
         [&](json& d) {
             term(d, 1, 1)["h_hi"] = "13/10";
             term(d, 1, 2)["h_hi"] = "13/10";
         }},
        {"gamma_ij(t) >= 0", [&](json& d) { term(d, 1, 2)["gamma"] = "t - 1/2"; }},
        {"g_i >= 0", [](json& d) { d["equations"][0]["g"] = "t - 1/2"; }},
        {"int_{a_i}^{b_i} Phi_i g_i > 0",
         [](json& d) { d["equations"][1]["g"] = "piecewise(t in [0, 1/8]: 1/8 - t; t in (1/8, inf): 0)"; }},
    };
    Findings f;
    int named = 0;
    for (const auto& c : cases) {
        json doc = base;
        c.edit(doc);
        try {
            load_json(doc);
            f.require(false, std::string("accepted a problem breaking '") + c.assumption + "'");
        } catch (const ValidationError& e) {
            const bool hit = std::string(e.what()).find(c.assumption) != std::string::npos;
            f.require(hit, std::string("diagnostic lacks '") + c.assumption + "': " + e.what());
            named += hit;
        }
    }
    return finish(f, std::to_string(named) + "/6 violations rejected with the assumption named");
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        Outcome (*run)();
    } criteria[] = {
        {"constants reproduction", constants_reproduction},
        {"Green's function identities", green_identities},
        {"threshold band", threshold_band},
        {"multiplicity verdict", multiplicity_verdict},
        {"matrix inverse properties", matrix_properties},
        {"solver properties", solver_properties},
        {"validation suite", validation_suite},
    };
    int failed = 0, n = 0;
    for (const auto& c : criteria) {
        ++n;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", n, c.name, o.detail.c_str());
    }
    std::printf("%d/%d criteria passed\n", n - failed, n);
    return failed == 0 ? 0 : 1;
}
