#include "conekit/solver.hpp"

#include "conekit/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <sstream>

#include <omp.h>

namespace conekit {

using nlohmann::json;

namespace {

double eval1(const Expression& e, double x) { return e.eval(std::span<const double>(&x, 1)); }

double eval_f(const Expression& f, double t, double u, double v) {
    const double x[3] = {t, u, v};
    return f.eval(x);
}

}  // namespace

GridFunction::GridFunction(std::vector<double> nodes, std::vector<double> values)
    : nodes_(std::move(nodes)), values_(std::move(values)) {
    if (nodes_.size() != values_.size()) throw std::invalid_argument("GridFunction: nodes and values differ in size");
    if (nodes_.size() < 4) throw std::invalid_argument("GridFunction: at least 4 nodes are needed");
    if (!std::is_sorted(nodes_.begin(), nodes_.end())) throw std::invalid_argument("GridFunction: nodes must be sorted");
}

GridFunction GridFunction::constant(const std::vector<double>& nodes, double c) {
    return GridFunction(nodes, std::vector<double>(nodes.size(), c));
}

std::pair<std::size_t, std::array<double, 4>> cubic_stencil(const std::vector<double>& nodes, double t) {
    const std::size_t n = nodes.size();
    if (n < 4) throw std::invalid_argument("cubic_stencil: at least 4 nodes are needed");
    auto it = std::upper_bound(nodes.begin(), nodes.end(), t);
    std::size_t j = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
    j = std::min(j, n - 2);
    std::size_t start = j == 0 ? 0 : std::min(j - 1, n - 4);
    std::array<double, 4> w{};
    for (std::size_t a = 0; a < 4; ++a) {
        double l = 1.0;
        for (std::size_t b = 0; b < 4; ++b) {
            if (a == b) continue;
            l *= (t - nodes[start + b]) / (nodes[start + a] - nodes[start + b]);
        }
        w[a] = l;
    }
    return {start, w};
}

double GridFunction::operator()(double t) const {
    auto [start, w] = cubic_stencil(nodes_, t);
    double s = 0.0;
    for (std::size_t a = 0; a < 4; ++a) s += w[a] * values_[start + a];
    return s;
}

double GridFunction::sup_norm() const {
    double m = 0.0;
    for (double x : values_) m = std::max(m, std::fabs(x));
    return m;
}

double GridFunction::min_on(double a, double b) const {
    double m = std::min((*this)(a), (*this)(b));
    for (std::size_t k = 0; k < nodes_.size(); ++k)
        if (nodes_[k] >= a && nodes_[k] <= b) m = std::min(m, values_[k]);
    return m;
}

bool GridFunction::nonnegative() const {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return x >= 0.0; });
}

std::vector<double> solver_nodes(const ProblemDef& p, int n) {
    if (n < 4) throw std::invalid_argument("solver_nodes: need at least 4 nodes");
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) x[static_cast<std::size_t>(k)] = 0.5 * (1.0 - std::cos(std::numbers::pi * k / (n - 1)));
    x.front() = 0.0;
    x.back() = 1.0;

    std::vector<double> atoms;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (const Measure* m : {&p.boundary(i, j).beta, &p.boundary(i, j).delta})
                for (const auto& a : m->atoms) atoms.push_back(a.at.value);
    std::sort(atoms.begin(), atoms.end());
    atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());

    for (double eta : atoms) {
        auto it = std::lower_bound(x.begin(), x.end(), eta);
        if (it != x.end() && *it == eta) continue;
        std::size_t hi = static_cast<std::size_t>(it - x.begin());
        std::size_t near = (hi == x.size() || (hi > 0 && eta - x[hi - 1] < x[hi] - eta)) ? hi - 1 : hi;
        double left = near > 0 ? x[near] - x[near - 1] : x[near + 1] - x[near];
        double right = near + 1 < x.size() ? x[near + 1] - x[near] : left;
        double spacing = std::min(left, right);
        bool endpoint = near == 0 || near + 1 == x.size();
        if (!endpoint && std::fabs(x[near] - eta) <= 0.25 * spacing) {
            x[near] = eta;
        } else {
            x.insert(it, eta);
        }
    }
    return x;
}

Discretization::Discretization(const ProblemDef& p, std::vector<double> nodes) : p_(&p), nodes_(std::move(nodes)) {
    if (!p.has_HL()) throw Error("the solver needs concrete H and L expressions for every boundary term");
    if (nodes_.size() < 4 || nodes_.front() != 0.0 || nodes_.back() != 1.0)
        throw std::invalid_argument("Discretization: nodes must span [0,1] with at least 4 points");

    Panelization edges(nodes_);
    for (int i = 0; i < 2; ++i) edges.add(p.equation(i).g.breakpoints(0));
    panel_edges_.clear();
    for (double e : edges.points())
        if (e >= 0.0 && e <= 1.0) panel_edges_.push_back(e);

    const auto& rule = GaussLegendre15::get();
    for (std::size_t k = 0; k + 1 < panel_edges_.size(); ++k) {
        const double a = panel_edges_[k], b = panel_edges_[k + 1];
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (std::size_t q = 0; q < 15; ++q) {
            quad_s_.push_back(mid + half * rule.nodes[q]);
            quad_w_.push_back(half * rule.weights[q]);
            quad_panel_.push_back(k);
        }
    }
    for (double s : quad_s_) quad_stencil_.push_back(cubic_stencil(nodes_, s));

    const std::size_t N = nodes_.size(), Q = quad_s_.size();
    for (int i = 0; i < 2; ++i) {
        const EquationDef& eq = p.equation(i);
        auto& row = rows_[static_cast<std::size_t>(i)];
        row.resize(N * Q);
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t q = 0; q < Q; ++q) row[n * Q + q] = quad_w_[q] * eq.kernel(nodes_[n], quad_s_[q]);
        auto& g = g_quad_[static_cast<std::size_t>(i)];
        for (double s : quad_s_) g.push_back(eval1(eq.g, s));
        for (int j = 0; j < 2; ++j) {
            const BoundaryDef& b = p.boundary(i, j);
            beta_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = make_functional(b.beta);
            delta_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = make_functional(b.delta);
            auto& gn = gamma_nodes_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            for (double t : nodes_) gn.push_back(eval1(b.gamma.expr, t));
        }
    }
}

Discretization::Functional Discretization::make_functional(const Measure& m) const {
    Functional f;
    for (const auto& a : m.atoms) {
        auto it = std::lower_bound(nodes_.begin(), nodes_.end(), a.at.value);
        if (it == nodes_.end() || *it != a.at.value)
            throw std::invalid_argument("Discretization: measure atom is not a node; build nodes with solver_nodes");
        f.atoms.emplace_back(static_cast<std::size_t>(it - nodes_.begin()), a.weight.value);
    }
    if (m.density) {
        f.quad.resize(quad_s_.size());
        for (std::size_t q = 0; q < quad_s_.size(); ++q) f.quad[q] = quad_w_[q] * eval1(*m.density, quad_s_[q]);
    }
    return f;
}

double Discretization::apply_functional(const Functional& f, const GridFunction& x, const std::vector<double>& xq) const {
    double s = 0.0;
    for (const auto& [n, w] : f.atoms) s += w * x.values()[n];
    for (std::size_t q = 0; q < f.quad.size(); ++q) s += f.quad[q] * xq[q];
    return s;
}

std::vector<double> Discretization::at_quad(const GridFunction& x) const {
    std::vector<double> out(quad_s_.size());
    for (std::size_t q = 0; q < quad_s_.size(); ++q) {
        const auto& [start, w] = quad_stencil_[q];
        double s = 0.0;
        for (std::size_t a = 0; a < 4; ++a) s += w[a] * x.values()[start + a];
        out[q] = s;
    }
    return out;
}

std::vector<double> Discretization::source(int i, const std::vector<double>& uq, const std::vector<double>& vq) const {
    const Expression& f = p_->equation(i).f;
    const auto& g = g_quad_[static_cast<std::size_t>(i)];
    std::vector<double> out(quad_s_.size());
    for (std::size_t q = 0; q < quad_s_.size(); ++q)
        out[q] = g[q] * eval_f(f, quad_s_[q], std::max(uq[q], 0.0), std::max(vq[q], 0.0));
    return out;
}

double Discretization::phi(int i, double s, const GridFunction& u, const GridFunction& v) const {
    const EquationDef& eq = p_->equation(i);
    return eval1(eq.g, s) * eval_f(eq.f, s, std::max(u(s), 0.0), std::max(v(s), 0.0));
}

std::array<double, 2> Discretization::boundary_values(const GridFunction& u, const GridFunction& v,
                                                      std::array<std::array<double, 2>, 2>& hl) const {
    const auto uq = at_quad(u), vq = at_quad(v);
    for (int i = 0; i < 2; ++i) {
        // Equation 1 feeds beta with u and delta with v; equation 2 the reverse.
        const GridFunction& own = i == 0 ? u : v;
        const GridFunction& other = i == 0 ? v : u;
        const auto& ownq = i == 0 ? uq : vq;
        const auto& otherq = i == 0 ? vq : uq;
        for (int j = 0; j < 2; ++j) {
            const BoundaryDef& b = p_->boundary(i, j);
            const std::size_t si = static_cast<std::size_t>(i), sj = static_cast<std::size_t>(j);
            double wb = apply_functional(beta_[si][sj], own, ownq);
            double wd = apply_functional(delta_[si][sj], other, otherq);
            hl[si][sj] = eval1(*b.H, wb) + eval1(*b.L, wd);
        }
    }
    return {};
}

std::pair<GridFunction, GridFunction> Discretization::apply_impl(const GridFunction& u, const GridFunction& v,
                                                                 bool parallel) const {
    if (u.nodes() != nodes_ || v.nodes() != nodes_) throw std::invalid_argument("apply_T: node sets differ");
    std::array<std::array<double, 2>, 2> hl{};
    boundary_values(u, v, hl);
    const auto uq = at_quad(u), vq = at_quad(v);
    const std::array<std::vector<double>, 2> src{source(0, uq, vq), source(1, uq, vq)};

    const std::size_t N = nodes_.size(), Q = quad_s_.size();
    std::array<std::vector<double>, 2> out{std::vector<double>(N), std::vector<double>(N)};
    const bool threads = parallel && !omp_in_parallel();
    for (std::size_t i = 0; i < 2; ++i) {
        const double* row = rows_[i].data();
        const double* s = src[i].data();
        double* o = out[i].data();
        const auto& gam = gamma_nodes_[i];
#pragma omp parallel for schedule(static) if (threads)
        for (std::size_t n = 0; n < N; ++n) {
            double acc = 0.0;
            const double* r = row + n * Q;
            for (std::size_t q = 0; q < Q; ++q) acc += r[q] * s[q];
            o[n] = gam[0][n] * hl[i][0] + gam[1][n] * hl[i][1] + acc;
        }
    }
    return {GridFunction(nodes_, std::move(out[0])), GridFunction(nodes_, std::move(out[1]))};
}

std::pair<GridFunction, GridFunction> Discretization::apply(const GridFunction& u, const GridFunction& v) const {
    return apply_impl(u, v, true);
}

std::pair<GridFunction, GridFunction> Discretization::apply_serial(const GridFunction& u, const GridFunction& v) const {
    return apply_impl(u, v, false);
}

std::pair<std::vector<double>, std::vector<double>> Discretization::apply_at(const GridFunction& u,
                                                                           const GridFunction& v,
                                                                           const std::vector<double>& ts) const {
    std::array<std::array<double, 2>, 2> hl{};
    boundary_values(u, v, hl);
    const auto uq = at_quad(u), vq = at_quad(v);
    const std::array<std::vector<double>, 2> src{source(0, uq, vq), source(1, uq, vq)};
    const auto& rule = GaussLegendre15::get();

    std::array<std::vector<double>, 2> out{std::vector<double>(ts.size()), std::vector<double>(ts.size())};
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 16) if (!omp_in_parallel())
    for (std::size_t m = 0; m < ts.size(); ++m) {
        try {
            const double t = ts[m];
            auto it = std::upper_bound(panel_edges_.begin(), panel_edges_.end(), t);
            std::size_t inside = panel_edges_.size();  // panel holding t in its interior, if any
            if (it != panel_edges_.begin() && it != panel_edges_.end()) {
                std::size_t k = static_cast<std::size_t>(it - panel_edges_.begin()) - 1;
                if (panel_edges_[k] < t) inside = k;
            }
            for (int i = 0; i < 2; ++i) {
                const std::size_t si = static_cast<std::size_t>(i);
                const EquationDef& eq = p_->equation(i);
                double acc = 0.0;
                for (std::size_t q = 0; q < quad_s_.size(); ++q)
                    if (quad_panel_[q] != inside) acc += quad_w_[q] * eq.kernel(t, quad_s_[q]) * src[si][q];
                if (inside < panel_edges_.size()) {
                    for (auto [a, b] : {std::pair{panel_edges_[inside], t}, std::pair{t, panel_edges_[inside + 1]}}) {
                        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
                        for (std::size_t q = 0; q < 15; ++q) {
                            double s = mid + half * rule.nodes[q];
                            acc += half * rule.weights[q] * eq.kernel(t, s) * phi(i, s, u, v);
                        }
                    }
                }
                double bnd = 0.0;
                for (int j = 0; j < 2; ++j) bnd += eval1(p_->boundary(i, j).gamma.expr, t) * hl[si][static_cast<std::size_t>(j)];
                out[si][m] = bnd + acc;
            }
        } catch (...) {
#pragma omp critical(conekit_apply_at_error)
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return {std::move(out[0]), std::move(out[1])};
}

std::vector<double> Discretization::residual_points(int refine) const {
    if (refine < 0) throw std::invalid_argument("residual_points: refine must be >= 0");
    std::vector<double> out;
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
        out.push_back(nodes_[n]);
        if (n + 1 == nodes_.size()) break;
        for (int r = 1; r <= refine; ++r)
            out.push_back(nodes_[n] + (nodes_[n + 1] - nodes_[n]) * r / (refine + 1));
    }
    return out;
}

double Discretization::residual(const GridFunction& u, const GridFunction& v, const std::vector<double>& ts) const {
    auto [tu, tv] = apply_at(u, v, ts);
    double r = 0.0;
    for (std::size_t m = 0; m < ts.size(); ++m) {
        r = std::max(r, std::fabs(u(ts[m]) - tu[m]));
        r = std::max(r, std::fabs(v(ts[m]) - tv[m]));
    }
    return r;
}

SolveOptions SolveOptions::from(const Options& o) {
    SolveOptions s;
    s.nodes = o.nodes;
    s.damping = o.damping;
    s.max_iter = o.max_iter;
    s.tol = o.solve_tol;
    s.divergence_ceiling = o.divergence_ceiling;
    return s;
}

Discretization make_discretization(const ProblemDef& p, int nodes) { return Discretization(p, solver_nodes(p, nodes)); }

std::pair<GridFunction, GridFunction> apply_T(const Discretization& d, const GridFunction& u, const GridFunction& v) {
    return d.apply(u, v);
}

bool in_cone(const GridFunction& w, double a, double b, double c_tilde, double slack) {
    for (double x : w.values())
        if (x < -slack) return false;
    return w.min_on(a, b) >= c_tilde * w.sup_norm() - slack;
}

SolveResult picard(const Discretization& d, const TheoryConstants& k, const GridFunction& u0, const GridFunction& v0,
                   const SolveOptions& o) {
    if (!(o.tol > 0)) throw std::invalid_argument("picard: tol must be positive");
    if (!(o.damping > 0 && o.damping <= 1)) throw std::invalid_argument("picard: damping must lie in (0,1]");
    GridFunction u = u0, v = v0;
    SolveResult r;
    for (int it = 1; it <= o.max_iter; ++it) {
        auto [tu, tv] = d.apply(u, v);
        double update = 0.0, norm = 0.0;
        for (auto [x, tx] : {std::pair{&u, &tu}, std::pair{&v, &tv}}) {
            auto& xs = x->values();
            const auto& ts = tx->values();
            for (std::size_t n = 0; n < xs.size(); ++n) {
                double nv = std::max((1.0 - o.damping) * xs[n] + o.damping * ts[n], 0.0);
                if (!std::isfinite(nv)) throw NumericalError("picard: non-finite iterate at iteration " + std::to_string(it));
                update = std::max(update, std::fabs(nv - xs[n]));
                norm = std::max(norm, nv);
                xs[n] = nv;
            }
        }
        r.iterations = it;
        r.last_update = update;
        if (norm > o.divergence_ceiling) {
            std::ostringstream os;
            os << "picard diverged: norm " << norm << " exceeds ceiling " << o.divergence_ceiling << " at iteration " << it;
            throw NumericalError(os.str());
        }
        if (update < o.tol) {
            r.converged = true;
            break;
        }
    }
    const ProblemDef& p = d.problem();
    r.u = std::move(u);
    r.v = std::move(v);
    r.residual = d.residual(r.u, r.v, d.residual_points(1));
    r.norm = std::max(r.u.sup_norm(), r.v.sup_norm());
    r.in_cone = {in_cone(r.u, p.equation(0).a.value, p.equation(0).b.value, k.equation(0).c_tilde.value, o.cone_slack),
                 in_cone(r.v, p.equation(1).a.value, p.equation(1).b.value, k.equation(1).c_tilde.value, o.cone_slack)};
    return r;
}

MultistartResult multistart(const Discretization& d, const TheoryConstants& k,
                            const std::vector<std::pair<double, double>>& brackets, int seeds_per_bracket,
                            const SolveOptions& o, double dedup) {
    if (seeds_per_bracket < 1) throw std::invalid_argument("multistart: need at least one seed per bracket");
    struct Seed {
        int bracket;
        double value;
    };
    std::vector<Seed> seeds;
    for (std::size_t b = 0; b < brackets.size(); ++b) {
        auto [lo, hi] = brackets[b];
        if (!(lo >= 0 && lo <= hi)) throw std::invalid_argument("multistart: bracket must satisfy 0 <= lo <= hi");
        for (int s = 0; s < seeds_per_bracket; ++s) {
            double x = seeds_per_bracket == 1 ? std::sqrt(lo * hi)
                       : lo > 0 ? lo * std::pow(hi / lo, static_cast<double>(s) / (seeds_per_bracket - 1))
                                : lo + (hi - lo) * s / (seeds_per_bracket - 1);
            seeds.push_back({static_cast<int>(b), x});
        }
    }

    MultistartResult out;
    out.seeds = static_cast<int>(seeds.size());
    std::vector<std::optional<SolveResult>> runs(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    std::vector<char> diverged(seeds.size(), 0);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        try {
            auto u0 = GridFunction::constant(d.nodes(), seeds[s].value);
            SolveResult r = picard(d, k, u0, u0, o);
            r.seed = seeds[s].value;
            r.bracket = seeds[s].bracket;
            runs[s] = std::move(r);
        } catch (const NumericalError&) {
            diverged[s] = 1;
        } catch (...) {
            errors[s] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    for (std::size_t s = 0; s < seeds.size(); ++s) {
        if (diverged[s]) {
            ++out.diverged;
            continue;
        }
        SolveResult& r = *runs[s];
        if (!r.converged) {
            ++out.unconverged;
            continue;
        }
        bool dup = false;
        for (const auto& kept : out.solutions) {
            double dist = 0.0;
            for (std::size_t n = 0; n < r.u.size(); ++n) {
                dist = std::max(dist, std::fabs(r.u.values()[n] - kept.u.values()[n]));
                dist = std::max(dist, std::fabs(r.v.values()[n] - kept.v.values()[n]));
            }
            if (dist < dedup) {
                dup = true;
                break;
            }
        }
        if (!dup) out.solutions.push_back(std::move(r));
    }
    std::stable_sort(out.solutions.begin(), out.solutions.end(),
                     [](const SolveResult& a, const SolveResult& b) { return a.norm < b.norm; });
    return out;
}

json summary_json(const SolveResult& r) {
    json o = {{"residual", r.residual},
              {"last_update", r.last_update},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"in_cone", {r.in_cone[0], r.in_cone[1]}},
              {"norm", r.norm},
              {"sup_u", r.u.sup_norm()},
              {"sup_v", r.v.sup_norm()},
              {"nodes", r.u.size()},
              {"seed", r.seed}};
    if (r.bracket >= 0) o["bracket"] = r.bracket;
    return o;
}

}  // namespace conekit
