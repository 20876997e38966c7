#include "conekit/index.hpp"

#include <cmath>
#include <random>

#include <doctest.h>
#include <omp.h>

#include "support.hpp"

using namespace conekit;
using testing::q;

namespace {

Box box(const char* t0, const char* t1, const char* u0, const char* u1, const char* v0, const char* v1) {
    return {{Scalar(q(t0)), Scalar(q(t1))}, {Scalar(q(u0)), Scalar(q(u1))}, {Scalar(q(v0)), Scalar(q(v1))}};
}

/// The example without its exact f-extremum overrides.
ProblemDef sampled_example() {
    auto doc = testing::read_json("problems/example.json");
    doc.erase("f_bounds");
    return load_json(doc);
}

ProblemDef with_f(const std::string& f1, const std::string& f2) {
    auto doc = testing::read_json("problems/example.json");
    doc.erase("f_bounds");
    doc["equations"][0]["f"] = f1;
    doc["equations"][1]["f"] = f2;
    return load_json(doc);
}

double norm22() { return std::sqrt(3.0) / 27; }

}  // namespace

TEST_CASE("sampled f extrema on the example boxes") {
    const ProblemDef p = sampled_example();
    auto sup1 = f_extremum(p, 0, box("0", "1", "0", "1", "0", "1"), ExtremumMode::max, Scalar(q("1")), 64);
    CHECK(sup1.value.value == 2.25);
    CHECK(sup1.source == "sampled");
    auto inf1 = f_extremum(p, 0, box("1/4", "3/4", "0", "1/2", "0", "1/2"), ExtremumMode::min, Scalar(q("1/8")), 64);
    CHECK(inf1.value.value == 16.0);
    auto inf2 = f_extremum(p, 1, box("1/4", "3/4", "0", "44", "11", "44"), ExtremumMode::min, Scalar(q("11")), 64);
    CHECK(inf2.f_value.value == 1573.0);
    CHECK(inf2.value.value == doctest::Approx(143.0).epsilon(1e-15));
}

TEST_CASE("parallel f extremum equals the serial reference bit for bit") {
    const ProblemDef p = sampled_example();
    const Box boxes[] = {box("0", "1", "0", "1", "0", "1"), box("1/4", "3/4", "11", "44", "0", "44"),
                         box("1/4", "3/4", "0", "1/2", "0", "1/2")};
    const int saved = omp_get_max_threads();
    for (int threads : {1, 2, 3, 8}) {
        omp_set_num_threads(threads);
        for (int i = 0; i < 2; ++i)
            for (const auto& b : boxes)
                for (auto mode : {ExtremumMode::min, ExtremumMode::max}) {
                    auto par = f_extremum(p, i, b, mode, Scalar(q("1")), 33);
                    auto ser = f_extremum_serial(p, i, b, mode, Scalar(q("1")), 33);
                    CHECK(par.f_value.value == ser.f_value.value);
                    CHECK(par.arg == ser.arg);
                }
    }
    omp_set_num_threads(saved);
}

TEST_CASE("condition boxes") {
    const auto& p = testing::example();
    auto k = compute_all(p);
    auto b0 = condition_box(p, k, 0, ConditionKind::index0, Scalar(q("11")));
    CHECK(*b0.u[0].exact == 11);
    CHECK(*b0.u[1].exact == 44);
    CHECK(*b0.v[0].exact == 0);
    auto b1 = condition_box(p, k, 1, ConditionKind::index0, Scalar(q("11")));
    CHECK(*b1.u[0].exact == 0);
    CHECK(*b1.v[0].exact == 11);
    auto s = condition_box(p, k, 0, ConditionKind::index0_star, Scalar(q("1/8")));
    CHECK(*s.u[1].exact == Rational(1, 2));
    CHECK(*s.t[0].exact == Rational(1, 4));
    auto one = condition_box(p, k, 0, ConditionKind::index1, Scalar(q("1")));
    CHECK(*one.t[1].exact == 1);
}

TEST_CASE("thresholds against an independent hand evaluation") {
    const auto& p = testing::example();
    const auto k = compute_all(p);
    // index1, equation 2, written out from its defining sum with doubles.
    const double th[4] = {466.0 / 387, 16.0 / 387, 9.0 / 86, 45.0 / 43};
    const double Q = 89.0 / 2430, S = 101.0 / 4860, K = 11.0 / 972, inv_m = 5.0 / 384;
    const double g1 = 1.0 * (1.0 / 4), g2 = norm22() * (2.0 / 3);
    const double bracket = (g1 * th[0] + g2 * th[2]) * K + (g1 * th[1] + g2 * th[3]) * K + inv_m;
    const double offset = g1 * (th[0] * Q + th[1] * S) + g2 * (th[2] * Q + th[3] * S) + 1.0 * (1.0 / 20) +
                          norm22() * (1.0 / 15);
    const double want = (1 - offset) / bracket;
    auto c = check_index1(p, k, Scalar(q("1")));
    CHECK(std::fabs(c.eq[1].threshold.value - want) < 1e-9);
    CHECK(c.eq[1].threshold.value == doctest::Approx(54.5787).epsilon(1e-5));

    // index1, equation 1: all inputs rational.
    {
        const Rational t[4] = {Rational(18, 11), Rational(2, 11), Rational(3, 11), Rational(15, 11)};
        const Rational h1(1, 2), h2(1, 3), Q1(1, 16), S1(13, 240), K1(3, 32), m1(1, 8);
        Rational br = (h1 * t[0] + h2 * t[2]) * K1 + (h1 * t[1] + h2 * t[3]) * K1 + m1;
        Rational off = h1 * (t[0] * Q1 + t[1] * S1) + h2 * (t[2] * Q1 + t[3] * S1) + Rational(1, 15) + Rational(1, 20);
        REQUIRE(c.eq[0].threshold.exact);
        CHECK(*c.eq[0].threshold.exact == (1 - off) / br);
        CHECK(*c.eq[0].threshold.exact == Rational(1052, 345));
    }

    auto star = check_index0(p, k, Scalar(q("1/8")), true);
    REQUIRE(star.eq[0].threshold.exact);
    CHECK(*star.eq[0].threshold.exact == Rational(2768, 187));
    auto zero = check_index0(p, k, Scalar(q("11")), false);
    CHECK(*zero.eq[0].threshold.exact == Rational(2768, 187));
    CHECK(*zero.eq[1].threshold.exact == Rational(4841275392LL, 34216565LL));

    // index0 coefficient for equation 1 from its defining sum.
    {
        const Rational Du(173, 216), hl1(1, 6), hl2(1, 9), cg(1, 4), Kab(1, 16), invM(1, 16);
        Rational w1 = cg * hl1 / Du, w2 = cg * hl2 / Du;
        Rational x1 = w1 * (1 - hl2 * Rational(3, 4)) + w2 * hl1 * Rational(1, 4);
        Rational x2 = w1 * hl2 * Rational(1, 4) + w2 * (1 - hl1 * Rational(3, 4));
        CHECK(*zero.eq[0].threshold.exact == 1 / (x1 * Kab + x2 * Kab + invM));
    }
}

TEST_CASE("the example conditions hold at 1/8, 1 and 11") {
    const auto& p = testing::example();
    const auto k = compute_all(p);
    auto star = check_condition(p, k, Scalar(q("1/8")), ConditionKind::index0_star);
    CHECK(star.satisfied);
    CHECK(star.eq[0].satisfied);
    CHECK(star.eq[0].f.source == "user-exact");
    auto one = check_condition(p, k, Scalar(q("1")), ConditionKind::index1);
    CHECK(one.satisfied);
    CHECK(*one.eq[0].f.value.exact == Rational(9, 4));
    CHECK(one.eq[1].f.value.value == 14.0);
    auto zero = check_condition(p, k, Scalar(q("11")), ConditionKind::index0);
    CHECK(zero.satisfied);
    CHECK(*zero.eq[0].f.f_value.exact == Rational(1347, 8));
    CHECK(zero.eq[1].f.f_value.value == 1573.0);
    CHECK(zero.eq[0].margin.value > 0);
    CHECK(one.eq[0].margin.value > 0);
}

TEST_CASE("the same verdict without overrides, from sampling") {
    const ProblemDef p = sampled_example();
    const auto k = compute_all(p);
    auto v = multiplicity(p, k, parse_ladder("0.125:star,1:one,11:zero"));
    CHECK(v.clause == "S3");
    CHECK(v.guaranteed_count == 2);
    CHECK(v.sampled_extrema);
}

TEST_CASE("zero nonlinearity never satisfies index 0") {
    auto p = load(testing::source_path("problems/zero.json"));
    auto k = compute_all(p);
    for (auto kind : {ConditionKind::index0, ConditionKind::index0_star}) {
        auto c = check_condition(p, k, Scalar(q("1")), kind);
        CHECK_FALSE(c.satisfied);
        CHECK(c.eq[0].lhs.value == 0.0);
    }
    CHECK(check_condition(p, k, Scalar(q("1")), ConditionKind::index1).satisfied);
}

TEST_CASE("without perturbation index 1 is the sublinear bound f/m < 1") {
    auto p = testing::toy();
    auto k = compute_all(p);
    auto c = check_index1(p, k, Scalar(q("1/10")));
    CHECK(*c.eq[0].offset.exact == 0);
    CHECK(*c.eq[0].bracket.exact == Rational(1, 8));
    // f = 1 so f^{0,rho} = 10 and lhs = 10/8.
    CHECK(c.eq[0].lhs.value == doctest::Approx(1.25));
    CHECK_FALSE(c.satisfied);
    CHECK(check_index1(p, k, Scalar(q("1"))).satisfied);
}

TEST_CASE("scaling f scales every extremum") {
    const ProblemDef base = sampled_example();
    const Box boxes[] = {box("0", "1", "0", "1", "0", "1"), box("1/4", "3/4", "0", "1/2", "0", "1/2"),
                         box("1/4", "3/4", "11", "44", "0", "44")};
    for (const char* lam : {"2", "1/4", "8", "3"}) {
        const std::string s(lam);
        const ProblemDef scaled =
            with_f(s + "*((1/8)*(u^3 + t^3*v^3) + 2)", s + "*(sqrt(t*u) + 13*v^2)");
        const double l = to_double(q(lam));
        for (int i = 0; i < 2; ++i)
            for (const auto& b : boxes)
                for (auto mode : {ExtremumMode::min, ExtremumMode::max}) {
                    auto a = f_extremum(base, i, b, mode, Scalar(q("1")), 32);
                    auto c = f_extremum(scaled, i, b, mode, Scalar(q("1")), 32);
                    CAPTURE(lam);
                    CHECK(c.f_value.value == doctest::Approx(l * a.f_value.value).epsilon(1e-15));
                    CHECK(c.arg == a.arg);
                }
    }
}

TEST_CASE("the star box infimum is never above the index-0 box infimum") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> coef(0, 9);
    for (int n = 0; n < 6; ++n) {
        // Non-decreasing in u and v, arbitrary in t: the infimum sits on lattice corners of both boxes.
        auto term = [&] {
            return std::to_string(coef(rng)) + "*u^" + std::to_string(coef(rng) % 4) + "*v^" +
                   std::to_string(coef(rng) % 3) + "*(1 + sin(" + std::to_string(coef(rng)) + "*t))";
        };
        const std::string f1 = term() + " + " + term() + " + " + std::to_string(coef(rng));
        const std::string f2 = term() + " + " + term();
        CAPTURE(f1);
        CAPTURE(f2);
        const ProblemDef p = with_f(f1, f2);
        const auto k = compute_all(p);
        for (const char* rho : {"1/8", "5"}) {
            auto star = check_index0(p, k, Scalar(q(rho)), true);
            auto full = check_index0(p, k, Scalar(q(rho)), false);
            for (int i = 0; i < 2; ++i) {
                CHECK(star.eq[static_cast<std::size_t>(i)].f.value.value <= full.eq[static_cast<std::size_t>(i)].f.value.value);
                CHECK(star.eq[static_cast<std::size_t>(i)].lhs.value <= full.eq[static_cast<std::size_t>(i)].lhs.value);
            }
            if (full.satisfied) CHECK(star.satisfied);
        }
    }
}

TEST_CASE("ladder verdicts") {
    const auto& p = testing::example();
    const auto k = compute_all(p);
    auto s3 = multiplicity(p, k, parse_ladder("0.125:star,1:one,11:zero"));
    CHECK(s3.clause == "S3");
    CHECK(s3.guaranteed_count == 2);
    REQUIRE(s3.gap_checks.size() == 2);
    CHECK(s3.gap_checks[0].constraint == "rho_1/c = 1/2 < rho_2 = 1");
    CHECK(s3.gap_checks[1].constraint == "rho_2 = 1 < rho_3 = 11");
    CHECK(s3.gap_checks[0].satisfied);
    CHECK(s3.gap_checks[1].satisfied);
    CHECK_FALSE(s3.star_beyond_first);
    CHECK_FALSE(s3.sampled_extrema);

    auto lone = multiplicity(p, k, parse_ladder("1:one"));
    CHECK(lone.clause == "none");
    CHECK(lone.guaranteed_count == 0);

    auto s2 = multiplicity(p, k, parse_ladder("1:one,11:zero"));
    CHECK(s2.clause == "S2");
    CHECK(s2.guaranteed_count == 1);

    auto s1 = multiplicity(p, k, parse_ladder("0.125:star,1:one"));
    CHECK(s1.clause == "S1");
    CHECK(s1.guaranteed_count == 1);

    // The gap rho/c < next fails: 1/8 / (1/4) = 1/2 is not below 2/5.
    auto gap = multiplicity(p, k, parse_ladder("0.125:star,0.4:one"));
    CHECK(gap.guaranteed_count == 0);
    CHECK(gap.clause == "none");
}

TEST_CASE("malformed ladders") {
    const auto& p = testing::example();
    const auto k = compute_all(p);
    CHECK_THROWS_AS(parse_ladder(""), LadderError);
    CHECK_THROWS_AS(parse_ladder("1:sideways"), LadderError);
    CHECK_THROWS_AS(parse_ladder("1"), LadderError);
    CHECK_THROWS_AS(parse_ladder("-1:one"), LadderError);
    CHECK_THROWS_AS(multiplicity(p, k, parse_ladder("1:one,2:one")), LadderError);
    CHECK_THROWS_AS(multiplicity(p, k, parse_ladder("2:one,1:zero")), LadderError);
    CHECK_THROWS_AS(multiplicity(p, k, {}), LadderError);
}

TEST_CASE("removing a rung never raises the count") {
    const auto& p = testing::example();
    const auto k = compute_all(p);
    const auto full = parse_ladder("0.125:star,1:one,11:zero,200:one,5000:zero");
    const int top = multiplicity(p, k, full).guaranteed_count;
    for (unsigned mask = 1; mask < (1u << full.size()); ++mask) {
        std::vector<LadderEntry> sub;
        for (std::size_t r = 0; r < full.size(); ++r)
            if (mask & (1u << r)) sub.push_back(full[r]);
        try {
            auto v = multiplicity(p, k, sub);
            CAPTURE(mask);
            CHECK(v.guaranteed_count <= top);
            // Dropping any single rung of a valid sub-ladder cannot increase it either.
            for (std::size_t r = 0; r < sub.size() && sub.size() > 1; ++r) {
                auto smaller = sub;
                smaller.erase(smaller.begin() + static_cast<std::ptrdiff_t>(r));
                int count = -1;
                try {
                    count = multiplicity(p, k, smaller).guaranteed_count;
                } catch (const LadderError&) {
                }
                CHECK(count <= v.guaranteed_count);
            }
        } catch (const LadderError&) {
        }
    }
}

TEST_CASE("auto ladder is re-verified") {
    const auto& p = testing::example();
    const auto k = compute_all(p);
    auto v = auto_ladder(p, k, 0.05, 100, 24);
    auto again = multiplicity(p, k, v.ladder);
    CHECK(again.guaranteed_count == v.guaranteed_count);
    CHECK(again.clause == v.clause);
    CHECK(v.guaranteed_count >= 1);
}

TEST_CASE("verdict json") {
    const auto& p = testing::example();
    const auto k = compute_all(p);
    auto j = to_json(multiplicity(p, k, parse_ladder("0.125:star,1:one,11:zero")));
    CHECK(j["clause"] == "S3");
    CHECK(j["guaranteed_count"] == 2);
    CHECK(j["conditions"].size() == 3);
    CHECK(j["conditions"][0]["equations"][0]["f_extremum"]["source"] == "user-exact");
}
