// conekit command-line front end.
//
// Exit codes: 0 ok, 1 I/O, 2 invalid input or violated assumption,
// 3 numerical failure, 4 certificate not established.

#include "conekit/constants.hpp"
#include "conekit/index.hpp"
#include "conekit/problem.hpp"
#include "conekit/report.hpp"
#include "conekit/solver.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <omp.h>

namespace {

using namespace conekit;
using nlohmann::json;

enum Exit { ok = 0, io = 1, invalid = 2, numerical = 3, not_certified = 4 };

struct Common {
    std::string problem;
    std::string format = "json";
    std::optional<double> tol_quad, tol_solve, tol_cone, tol_dedup, divergence_ceiling;
    std::optional<int> f_grid, max_iter, threads;
};

void add_common(CLI::App* sub, Common& c, bool with_format = true) {
    sub->add_option("problem", c.problem, "Problem file (JSON)")->required();
    if (with_format) sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "table"}));
    sub->add_option("--tol-quad", c.tol_quad, "Adaptive quadrature tolerance (default 1e-10)");
    sub->add_option("--f-grid", c.f_grid, "Lattice size per axis for f extrema (default 64)");
    sub->add_option("--threads", c.threads, "Thread cap (overrides CONEKIT_THREADS)");
}

void add_solver_tols(CLI::App* sub, Common& c) {
    sub->add_option("--tol-solve", c.tol_solve, "Picard stopping tolerance on the update (default 1e-13)");
    sub->add_option("--tol-cone", c.tol_cone, "Slack for cone membership (default 1e-9)");
    sub->add_option("--tol-dedup", c.tol_dedup, "Sup distance below which two solutions merge (default 1e-4)");
    sub->add_option("--max-iter", c.max_iter, "Picard iteration cap (default 5000)");
    sub->add_option("--divergence-ceiling", c.divergence_ceiling, "Norm above which a run counts as diverged (default 1e8)");
}

ProblemDef load_problem(const Common& c) {
    ProblemDef p = load(c.problem);
    if (c.tol_quad) p.options.quad_tol = *c.tol_quad;
    if (c.f_grid) p.options.f_grid = *c.f_grid;
    if (c.tol_solve) p.options.solve_tol = *c.tol_solve;
    if (c.max_iter) p.options.max_iter = *c.max_iter;
    if (c.divergence_ceiling) p.options.divergence_ceiling = *c.divergence_ceiling;
    if (c.threads) omp_set_num_threads(std::max(1, *c.threads));
    return p;
}

/// Inline ladder, or the contents of a file when the argument names one.
std::vector<LadderEntry> ladder_from(const std::string& arg) {
    std::string text = arg;
    if (std::filesystem::is_regular_file(arg)) {
        std::ifstream in(arg);
        if (!in) throw IoError("cannot read ladder file " + arg);
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
        for (char& ch : text)
            if (ch == '\n' || ch == '\r') ch = ',';
        while (!text.empty() && text.back() == ',') text.pop_back();
    }
    return parse_ladder(text);
}

std::vector<std::pair<double, double>> parse_brackets(const std::string& text) {
    std::vector<std::pair<double, double>> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto colon = item.find(':');
        auto lo = parse_rational(item.substr(0, colon));
        auto hi = colon == std::string::npos ? std::nullopt : parse_rational(item.substr(colon + 1));
        if (!lo || !hi || *lo < 0 || *hi < *lo) throw LadderError("malformed bracket '" + item + "', expected lo:hi with 0 <= lo <= hi");
        out.emplace_back(to_double(*lo), to_double(*hi));
    }
    if (out.empty()) throw LadderError("no brackets given");
    return out;
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

std::string text_verdict(const MultiplicityVerdict& v) {
    std::ostringstream os;
    os << "clause " << v.clause << ", guaranteed positive solutions: " << v.guaranteed_count << "\n";
    for (std::size_t r = 0; r < v.conditions.size(); ++r) {
        const auto& c = v.conditions[r];
        os << "  rho = " << c.rho.str() << " (" << to_string(c.kind) << "): " << (c.satisfied ? "satisfied" : "not satisfied");
        for (int i = 0; i < 2; ++i) {
            const auto& e = c.eq[static_cast<std::size_t>(i)];
            os << "; lhs_" << i + 1 << " = " << e.lhs.value;
        }
        os << "\n";
    }
    for (const auto& g : v.gap_checks) os << "  gap " << g.constraint << ": " << (g.satisfied ? "ok" : "fails") << "\n";
    if (v.star_beyond_first) os << "  note: a starred index-0 rung sits beyond the first position\n";
    if (v.sampled_extrema) os << "  note: some certified rung uses a sampled f extremum\n";
    return os.str();
}

int run(int argc, char** argv) {
    if (const char* t = std::getenv("CONEKIT_THREADS")) {
        int n = std::atoi(t);
        if (n > 0) omp_set_num_threads(n);
    }

    CLI::App app{"Index certificates and fixed-point search for coupled perturbed Hammerstein systems"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    Common c;
    std::string ladder, brackets = "0:1,1:100", out_dir, kind_text = "index1";
    std::optional<std::string> rho;
    std::optional<double> seed_norm, damping;
    std::optional<int> nodes;
    int at_least = 1, seeds_per_bracket = 4, auto_points = 48;
    bool auto_search = false, no_solve = false;
    double auto_lo = 1e-2, auto_hi = 1e3;

    auto* constants = app.add_subcommand("constants", "Print the derived constants");
    add_common(constants, c);

    auto* check = app.add_subcommand("check", "Evaluate index conditions at given radii");
    add_common(check, c, false);
    check->add_option("--rho", rho, "Radius");
    check->add_option("--kind", kind_text, "index1|one, index0|zero, index0_star|star");
    check->add_option("--ladder", ladder, "Ladder 'rho:kind,...' or a file with one entry per line");

    auto* certify = app.add_subcommand("certify", "Certify a multiplicity ladder");
    add_common(certify, c);
    certify->add_option("--ladder", ladder, "Ladder 'rho:kind,...' or a file with one entry per line");
    certify->add_option("--at-least", at_least, "Required number of guaranteed solutions");
    certify->add_flag("--auto", auto_search, "Propose a ladder by scanning radii, then verify it");
    certify->add_option("--rho-lo", auto_lo, "Smallest radius scanned by --auto");
    certify->add_option("--rho-hi", auto_hi, "Largest radius scanned by --auto");
    certify->add_option("--points", auto_points, "Radii scanned by --auto");

    auto* solve = app.add_subcommand("solve", "Search for fixed points in the cone");
    add_common(solve, c);
    add_solver_tols(solve, c);
    solve->add_option("--seed-norm", seed_norm, "Single constant start u = v = r instead of brackets");
    solve->add_option("--damping", damping, "Picard damping in (0,1]");
    solve->add_option("--nodes", nodes, "Chebyshev nodes before atom insertion");
    solve->add_option("--brackets", brackets, "Seed norm brackets 'lo:hi,...'");
    solve->add_option("--seeds-per-bracket", seeds_per_bracket, "Constant starts per bracket");
    solve->add_option("--out", out_dir, "Directory for solution_<k>.csv and summary.json");

    auto* report = app.add_subcommand("report", "Full report.v1 document");
    add_common(report, c, false);
    add_solver_tols(report, c);
    report->add_option("--ladder", ladder, "Ladder to certify");
    report->add_option("--brackets", brackets, "Seed norm brackets for the solver");
    report->add_option("--seeds-per-bracket", seeds_per_bracket, "Constant starts per bracket");
    report->add_option("--nodes", nodes, "Chebyshev nodes before atom insertion");
    report->add_flag("--no-solve", no_solve, "Skip the fixed-point search");
    report->add_option("--out", out_dir, "Write the report to this file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return invalid;
    }

    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

    ProblemDef p = load_problem(c);
    RunReport rep(p);

    if (*constants) {
        TheoryConstants k = compute_all(p);
        if (c.format == "table") {
            std::cout << to_table(k);
        } else {
            rep.constants = k;
            rep.wall_time = elapsed();
            print(to_json(rep));
        }
        return ok;
    }

    TheoryConstants k = compute_all(p);
    rep.constants = k;

    if (*check) {
        if (!ladder.empty()) {
            for (const auto& e : ladder_from(ladder)) rep.conditions.push_back(check_condition(p, k, e.rho, e.kind));
        } else {
            if (!rho) throw LadderError("check needs --rho or --ladder");
            auto kind = parse_condition_kind(kind_text);
            if (!kind) throw LadderError("unknown condition kind '" + kind_text + "'");
            auto r = parse_rational(*rho);
            if (!r || *r <= 0) throw LadderError("--rho must be a positive number or p/q, got '" + *rho + "'");
            rep.conditions.push_back(check_condition(p, k, Scalar(*r), *kind));
        }
        rep.wall_time = elapsed();
        print(to_json(rep));
        return ok;
    }

    if (*certify) {
        MultiplicityVerdict v;
        if (auto_search) {
            v = auto_ladder(p, k, auto_lo, auto_hi, auto_points);
        } else {
            if (ladder.empty()) throw LadderError("certify needs --ladder or --auto");
            v = multiplicity(p, k, ladder_from(ladder));
        }
        rep.conditions = v.conditions;
        rep.verdict = v;
        rep.wall_time = elapsed();
        if (c.format == "table")
            std::cout << text_verdict(v);
        else
            print(to_json(rep));
        return v.guaranteed_count >= at_least ? ok : not_certified;
    }

    SolveOptions so = SolveOptions::from(p.options);
    if (nodes) so.nodes = *nodes;
    if (damping) so.damping = *damping;
    if (c.tol_cone) so.cone_slack = *c.tol_cone;
    const double dedup = c.tol_dedup.value_or(1e-4);

    if (*solve) {
        Discretization d = make_discretization(p, so.nodes);
        MultistartResult m;
        if (seed_norm) {
            m = multistart(d, k, {{*seed_norm, *seed_norm}}, 1, so, dedup);
        } else {
            m = multistart(d, k, parse_brackets(brackets), seeds_per_bracket, so, dedup);
        }
        if (m.diverged == m.seeds) throw NumericalError("every start diverged (" + std::to_string(m.seeds) + " seeds)");
        rep.solutions = std::move(m.solutions);
        m.solutions.clear();
        rep.search = m;
        rep.wall_time = elapsed();
        json summary = to_json(rep);
        if (!out_dir.empty()) {
            std::filesystem::create_directories(out_dir);
            for (std::size_t s = 0; s < rep.solutions.size(); ++s) {
                std::ofstream f(std::filesystem::path(out_dir) / ("solution_" + std::to_string(s + 1) + ".csv"));
                if (!f) throw IoError("cannot write into " + out_dir);
                f << solution_csv(rep.solutions[s]);
            }
            std::ofstream f(std::filesystem::path(out_dir) / "summary.json");
            if (!f) throw IoError("cannot write into " + out_dir);
            f << summary.dump(2) << "\n";
        }
        if (c.format == "table") {
            std::cout << rep.solutions.size() << " solution(s) from " << rep.search->seeds << " starts ("
                      << rep.search->diverged << " diverged, " << rep.search->unconverged << " unconverged)\n";
            for (std::size_t s = 0; s < rep.solutions.size(); ++s) {
                const auto& r = rep.solutions[s];
                std::cout << "  #" << s + 1 << " norm " << r.norm << " residual " << r.residual << " iterations "
                          << r.iterations << " in_cone (" << (r.in_cone[0] ? "yes" : "no") << ", "
                          << (r.in_cone[1] ? "yes" : "no") << ")\n";
            }
        } else {
            print(summary);
        }
        return ok;
    }

    // report
    if (!ladder.empty()) {
        auto v = multiplicity(p, k, ladder_from(ladder));
        rep.conditions = v.conditions;
        rep.verdict = v;
    }
    if (!no_solve && p.has_HL()) {
        Discretization d = make_discretization(p, so.nodes);
        auto m = multistart(d, k, parse_brackets(brackets), seeds_per_bracket, so, dedup);
        rep.solutions = std::move(m.solutions);
        m.solutions.clear();
        rep.search = m;
    }
    rep.wall_time = elapsed();
    std::string text = to_json(rep).dump(2) + "\n";
    if (out_dir.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(out_dir);
        if (!f) throw IoError("cannot write " + out_dir);
        f << text;
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return io;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return invalid;
    } catch (const SchemaError& e) {
        std::cerr << "error: malformed problem: " << e.what() << "\n";
        return invalid;
    } catch (const ParseError& e) {
        std::cerr << "error: expression: " << e.what() << "\n";
        return invalid;
    } catch (const LadderError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return invalid;
    } catch (const HypothesisError& e) {
        std::cerr << "error: assumption violated: " << e.what() << "\n";
        return invalid;
    } catch (const NumericalError& e) {
        std::cerr << "error: numerical failure: " << e.what() << "\n";
        return numerical;
    } catch (const DomainError& e) {
        std::cerr << "error: numerical failure: " << e.what() << "\n";
        return numerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return invalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return numerical;
    }
}
