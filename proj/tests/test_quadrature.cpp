#include "conekit/kernels.hpp"
#include "conekit/quadrature.hpp"

#include <cmath>
#include <random>

#include <doctest.h>

#include "support.hpp"

using namespace conekit;

TEST_CASE("polynomial and kernel integrals") {
    CHECK(integrate([](double s) { return s * (1 - s); }, 0, 1, {}, 1e-12) == doctest::Approx(1.0 / 6).epsilon(1e-14));
    auto k1 = KernelSpec::builtin2();
    auto k2 = KernelSpec::builtin4();
    CHECK(std::fabs(integrate([&](double s) { return k1(0.25, s); }, 0, 1, {0.25}, 1e-12) - 3.0 / 32) < 1e-12);
    CHECK(std::fabs(integrate([&](double s) { return k2(1.0 / 3, s); }, 0, 1, {1.0 / 3}, 1e-12) - 11.0 / 972) < 1e-12);
}

TEST_CASE("empty interval and breakpoints outside the range") {
    CHECK(integrate([](double) { return 1.0; }, 0.3, 0.3) == 0.0);
    Panelization p{0.9, 0.1, 0.5, 0.5};
    CHECK(p.points() == std::vector<double>{0.1, 0.5, 0.9});
    CHECK(p.clip(0.2, 0.9) == std::vector<double>{0.5});
    CHECK(integrate([](double s) { return std::fabs(s - 0.5); }, 0, 1, p) == doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("integrand failures are reported") {
    CHECK_THROWS_AS(integrate([](double) { return std::nan(""); }, 0, 1), NumericalError);
    // Hundreds of undeclared jumps exhaust the subdivision budget.
    try {
        integrate([](double s) { return std::sin(1000 * std::sqrt(2.0) * 3.14159 * s) > 0 ? 1.0 : 0.0; }, 0, 1, {}, 1e-12);
        FAIL("expected non-convergence");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("panel") != std::string::npos);
    }
}

TEST_CASE("linearity on random polynomial pairs") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coef(-3, 3), end(0, 1);
    for (int n = 0; n < 200; ++n) {
        double p[6], q[6];
        for (int k = 0; k < 6; ++k) p[k] = coef(rng), q[k] = coef(rng);
        auto poly = [](const double* c) {
            return [c](double s) {
                double r = 0;
                for (int k = 5; k >= 0; --k) r = r * s + c[k];
                return r;
            };
        };
        double a = coef(rng), b = coef(rng), lo = end(rng), hi = end(rng);
        if (lo > hi) std::swap(lo, hi);
        double lhs = integrate([&](double s) { return a * poly(p)(s) + b * poly(q)(s); }, lo, hi);
        double rhs = a * integrate(poly(p), lo, hi) + b * integrate(poly(q), lo, hi);
        CHECK(std::fabs(lhs - rhs) < 1e-10);
    }
}

TEST_CASE("stieltjes with atoms and densities") {
    Measure atom;
    atom.atoms.push_back({Scalar(testing::q("1/4")), Scalar(Rational(1))});
    CHECK(stieltjes([](double t) { return 1 - t; }, atom) == 0.75);

    Measure a22;
    a22.atoms.push_back({Scalar(testing::q("2/3")), Scalar(Rational(1))});
    auto gamma22 = Expression::parse("(1/6)*t*(1 - t^2)", {"t"});
    CHECK(stieltjes([&](double t) { return gamma22.eval(std::span<const double>(&t, 1)); }, a22) ==
          doctest::Approx(5.0 / 81).epsilon(1e-15));
    auto exact = stieltjes_exact(gamma22, a22);
    REQUIRE(exact);
    CHECK(*exact == Rational(5, 81));

    Measure dens;
    dens.density = Expression::parse("2*s", {"s"});
    auto w = [](double t) { return std::cos(t); };
    CHECK(std::fabs(stieltjes(w, dens) - integrate([&](double s) { return w(s) * 2 * s; }, 0, 1)) < 1e-10);
    auto poly = stieltjes_exact(Expression::parse("t^2", {"t"}), dens);
    REQUIRE(poly);
    CHECK(*poly == Rational(1, 2));
    CHECK(dens.total() == doctest::Approx(1.0));
}

TEST_CASE("extremum scan and refinement") {
    auto e1 = extremum_on_interval([](double t) { return t * (1 - t) / 2; }, 0, 1, ExtremumMode::max);
    CHECK(std::fabs(e1.arg - 0.5) < 1e-9);
    CHECK(std::fabs(e1.value - 0.125) < 1e-10);
    auto e2 = extremum_on_interval([](double t) { return t * t * t * t / 24 - t * t * t / 12 + t / 24; }, 0, 1,
                                   ExtremumMode::max);
    CHECK(std::fabs(e2.value - 5.0 / 384) < 1e-10);
    auto e3 = extremum_on_interval([](double t) { return t * (1 - t * t) / 6; }, 0.25, 0.75, ExtremumMode::min);
    CHECK(e3.arg == 0.25);
    CHECK(std::fabs(e3.value - 5.0 / 128) < 1e-12);
}
