#include "conekit/solver.hpp"

#include <cmath>
#include <random>

#include <doctest.h>
#include <omp.h>

#include "support.hpp"

using namespace conekit;

namespace {

double green2(double t) { return t * (1 - t) / 2; }

double sup_diff(const GridFunction& a, const GridFunction& b) {
    double e = 0;
    for (int m = 0; m <= 1000; ++m) e = std::max(e, std::fabs(a(m / 1000.0) - b(m / 1000.0)));
    return e;
}

SolveResult from_zero(const Discretization& d, const TheoryConstants& k, SolveOptions o) {
    auto z = GridFunction::constant(d.nodes(), 0.0);
    return picard(d, k, z, z, o);
}

}  // namespace

TEST_CASE("cubic stencil reproduces cubics") {
    std::vector<double> nodes{0, 0.1, 0.3, 0.35, 0.6, 0.8, 1};
    auto cubic = [](double t) { return 2 * t * t * t - t * t + 0.5 * t - 3; };
    std::vector<double> vals;
    for (double x : nodes) vals.push_back(cubic(x));
    GridFunction g(nodes, vals);
    for (int m = 0; m <= 100; ++m) {
        double t = m / 100.0;
        CHECK(g(t) == doctest::Approx(cubic(t)).epsilon(1e-13));
        auto [first, w] = cubic_stencil(nodes, t);
        CHECK(first + 4 <= nodes.size());
        CHECK(w[0] + w[1] + w[2] + w[3] == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK(g(0.35) == vals[3]);
    CHECK(g.min_on(0.25, 0.75) == doctest::Approx(std::min(cubic(0.25), cubic(0.75))));
}

TEST_CASE("solver nodes contain every atom") {
    const auto& p = testing::example();
    for (int n : {9, 33, 257}) {
        auto nodes = solver_nodes(p, n);
        CHECK(std::is_sorted(nodes.begin(), nodes.end()));
        CHECK(nodes.front() == 0.0);
        CHECK(nodes.back() == 1.0);
        for (double atom : {0.25, 2.0 / 3})
            CHECK(std::find(nodes.begin(), nodes.end(), atom) != nodes.end());
    }
}

TEST_CASE("affine toy: one undamped step is the fixed point") {
    // f_1 = 1 and f_2 = 0 with no boundary perturbation: u = t(1-t)/2, v = 0.
    auto p = testing::toy();
    auto k = compute_all(p);
    auto d = make_discretization(p, 257);
    SolveOptions o;
    o.damping = 1.0;
    o.max_iter = 1;
    auto r = from_zero(d, k, o);
    CHECK(r.iterations == 1);
    CHECK(r.residual < 1e-12);
    double err = 0;
    for (int m = 0; m <= 1000; ++m) err = std::max(err, std::fabs(r.u(m / 1000.0) - green2(m / 1000.0)));
    CHECK(err < 1e-13);
    for (double x : r.v.values()) CHECK(x == 0.0);
    CHECK(r.in_cone[0]);
    CHECK(r.in_cone[1]);
}

TEST_CASE("zero problem maps zero to zero") {
    auto p = load(testing::source_path("problems/zero.json"));
    auto d = make_discretization(p, 65);
    auto z = GridFunction::constant(d.nodes(), 0.0);
    auto [tu, tv] = apply_T(d, z, z);
    for (double x : tu.values()) CHECK(x == 0.0);
    for (double x : tv.values()) CHECK(x == 0.0);
}

TEST_CASE("T of the constant pair (1,1) on the example") {
    const auto& p = testing::example();
    auto d = make_discretization(p, 129);
    auto one = GridFunction::constant(d.nodes(), 1.0);
    auto [tu, tv] = apply_T(d, one, one);
    for (std::size_t n = 0; n < tu.size(); ++n) {
        CHECK(std::isfinite(tu.values()[n]));
        CHECK(std::isfinite(tv.values()[n]));
        CHECK(tu.values()[n] >= 0);
        CHECK(tv.values()[n] >= 0);
    }
}

TEST_CASE("affine toy with a quartic second component converges at the h^4 rate") {
    // With f_2 = 1 the exact v is quartic, so cubic interpolation leaves an O(h^4) residual.
    auto doc = testing::read_json("problems/linear_toy.json");
    doc["equations"][1]["f"] = "1";
    auto p = load_json(doc);
    auto k = compute_all(p);
    SolveOptions o;
    o.damping = 1.0;
    double prev = 0;
    for (int n : {33, 65, 129}) {
        auto r = from_zero(make_discretization(p, n), k, o);
        double err = 0;
        for (int m = 0; m <= 1000; ++m) {
            double t = m / 1000.0;
            err = std::max(err, std::fabs(r.v(t) - (t * t * t * t / 24 - t * t * t / 12 + t / 24)));
        }
        if (prev > 0) CHECK(prev / err > 8);
        prev = err;
    }
    CHECK(prev < 1e-9);
}

TEST_CASE("example solve from zero") {
    const auto& p = testing::example();
    auto k = compute_all(p);
    auto d = make_discretization(p, 257);
    auto r = from_zero(d, k, SolveOptions{});
    CHECK(r.converged);
    CHECK(r.residual < 1e-8);
    CHECK(r.in_cone[0]);
    CHECK(r.in_cone[1]);
    CHECK(r.norm > 0);
    // Re-evaluating on a node set four times finer barely moves the residual.
    double fine = d.residual(r.u, r.v, d.residual_points(7));
    CHECK(fine < 10 * r.residual);
    CHECK(r.residual < 10 * fine);
}

TEST_CASE("doubling the nodes shrinks the change like h^4") {
    const auto& p = testing::example();
    auto k = compute_all(p);
    SolveOptions o;
    o.tol = 1e-15;
    std::vector<SolveResult> rs;
    for (int n : {17, 33, 65, 129}) rs.push_back(from_zero(make_discretization(p, n), k, o));
    std::vector<double> e;
    for (std::size_t i = 0; i + 1 < rs.size(); ++i)
        e.push_back(std::max(sup_diff(rs[i].u, rs[i + 1].u), sup_diff(rs[i].v, rs[i + 1].v)));
    for (std::size_t i = 0; i + 1 < e.size(); ++i) {
        CAPTURE(i);
        CHECK(e[i] / e[i + 1] >= 8);
        CHECK(e[i] / e[i + 1] <= 32);
    }
}

TEST_CASE("cone invariance on 100 random cone members") {
    const auto& p = testing::example();
    auto k = compute_all(p);
    auto d = make_discretization(p, 129);
    const double a0 = p.equation(0).a.value, b0 = p.equation(0).b.value;
    const double a1 = p.equation(1).a.value, b1 = p.equation(1).b.value;
    const double c0 = k.equation(0).c_tilde.value, c1 = k.equation(1).c_tilde.value;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> scale(0, 20), wiggle(-0.3, 0.3);
    auto random_member = [&](double a, double b, double c) {
        for (;;) {
            double s = scale(rng), w1 = wiggle(rng), w2 = wiggle(rng), w3 = wiggle(rng);
            std::vector<double> vals;
            for (double t : d.nodes())
                vals.push_back(s * (1 + w1 * std::cos(M_PI * t) + w2 * std::cos(2 * M_PI * t) + w3 * t * t));
            GridFunction g(d.nodes(), vals);
            if (in_cone(g, a, b, c, 0.0)) return g;
        }
    };
    for (int n = 0; n < 100; ++n) {
        auto u = random_member(a0, b0, c0);
        auto v = random_member(a1, b1, c1);
        auto [tu, tv] = apply_T(d, u, v);
        CHECK(in_cone(tu, a0, b0, c0, 1e-9));
        CHECK(in_cone(tv, a1, b1, c1, 1e-9));
    }
}

TEST_CASE("parallel apply matches the serial reference bit for bit") {
    const auto& p = testing::example();
    auto d = make_discretization(p, 129);
    std::vector<double> uv, vv;
    for (double t : d.nodes()) uv.push_back(1 + std::sin(3 * t)), vv.push_back(t * t * 5);
    GridFunction u(d.nodes(), uv), v(d.nodes(), vv);
    const int saved = omp_get_max_threads();
    auto [su, sv] = d.apply_serial(u, v);
    for (int threads : {1, 2, 4, 7}) {
        omp_set_num_threads(threads);
        auto [pu, pv] = d.apply(u, v);
        CHECK(pu.values() == su.values());
        CHECK(pv.values() == sv.values());
    }
    omp_set_num_threads(saved);
}

TEST_CASE("multistart on the zero problem finds only the trivial solution") {
    auto p = load(testing::source_path("problems/zero.json"));
    auto k = compute_all(p);
    auto d = make_discretization(p, 33);
    auto m = multistart(d, k, {{0.01, 1}, {1, 100}}, 4, SolveOptions{});
    CHECK(m.seeds == 8);
    REQUIRE(m.solutions.size() == 1);
    CHECK(m.solutions[0].norm < 1e-12);
}

TEST_CASE("multistart is deterministic across thread counts") {
    const auto& p = testing::example();
    auto k = compute_all(p);
    auto d = make_discretization(p, 65);
    const std::vector<std::pair<double, double>> brackets{{0, 1}, {1, 11}};
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    auto one = multistart(d, k, brackets, 3, SolveOptions{});
    omp_set_num_threads(4);
    auto four = multistart(d, k, brackets, 3, SolveOptions{});
    omp_set_num_threads(saved);
    REQUIRE(one.solutions.size() == four.solutions.size());
    CHECK(one.diverged == four.diverged);
    for (std::size_t s = 0; s < one.solutions.size(); ++s) {
        CHECK(one.solutions[s].u.values() == four.solutions[s].u.values());
        CHECK(one.solutions[s].bracket == four.solutions[s].bracket);
    }
    REQUIRE_FALSE(one.solutions.empty());
    CHECK(one.solutions[0].residual < 1e-8);
}

TEST_CASE("superlinear growth from a large start is reported as divergence") {
    auto doc = testing::read_json("problems/example.json");
    doc.erase("f_bounds");
    doc["equations"][0]["f"] = "u^3 + v^3";
    doc["equations"][1]["f"] = "u^3 + v^3";
    auto p = load_json(doc);
    auto k = compute_all(p);
    auto d = make_discretization(p, 33);
    auto big = GridFunction::constant(d.nodes(), 1000.0);
    CHECK_THROWS_AS(picard(d, k, big, big, SolveOptions{}), NumericalError);
}

TEST_CASE("solver argument checks") {
    const auto& p = testing::example();
    auto k = compute_all(p);
    auto d = make_discretization(p, 17);
    SolveOptions bad;
    bad.damping = 0;
    CHECK_THROWS_AS(from_zero(d, k, bad), std::invalid_argument);
    CHECK_THROWS_AS(multistart(d, k, {{2, 1}}, 2, SolveOptions{}), std::invalid_argument);
    auto doc = testing::read_json("problems/example.json");
    doc["boundary"][0].erase("H");
    CHECK_THROWS_AS(make_discretization(load_json(doc), 17), Error);
}

TEST_CASE("summary json") {
    auto p = testing::toy();
    auto k = compute_all(p);
    auto r = from_zero(make_discretization(p, 33), k, SolveOptions{});
    auto j = summary_json(r);
    CHECK(j.contains("residual"));
    CHECK(j.contains("in_cone"));
    CHECK(j["iterations"] == r.iterations);
}
