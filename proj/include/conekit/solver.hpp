#pragma once

#include "conekit/constants.hpp"
#include "conekit/problem.hpp"

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

namespace conekit {

/// Samples on sorted nodes in [0,1], read between nodes by local 4-point
/// cubic Lagrange interpolation.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(std::vector<double> nodes, std::vector<double> values);
    static GridFunction constant(const std::vector<double>& nodes, double c);

    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::vector<double>& values() noexcept { return values_; }
    std::size_t size() const noexcept { return nodes_.size(); }

    double operator()(double t) const;
    /// Max |value| over the nodes.
    double sup_norm() const;
    /// Min over the nodes in [a, b] and the interpolated endpoints.
    double min_on(double a, double b) const;
    bool nonnegative() const;

private:
    std::vector<double> nodes_;
    std::vector<double> values_;
};

/// Index of the first node of the 4-point stencil used at t, and the
/// Lagrange weights.
std::pair<std::size_t, std::array<double, 4>> cubic_stencil(const std::vector<double>& nodes, double t);

/// n Chebyshev-extrema nodes on [0,1] with every measure atom of the problem
/// forced in: an atom within a quarter of the local spacing moves the
/// nearest node onto itself, otherwise it is inserted.
std::vector<double> solver_nodes(const ProblemDef& p, int n);

/// The operator T on a fixed node set.  Integrals are panel-wise
/// Gauss-Legendre between consecutive nodes (so the kernel diagonal is
/// always a panel edge) with the node rows precomputed as a matrix.
class Discretization {
public:
    Discretization(const ProblemDef& p, std::vector<double> nodes);

    const ProblemDef& problem() const noexcept { return *p_; }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    std::size_t quad_size() const noexcept { return quad_s_.size(); }

    /// T(u, v) on the nodes; the mat-vec rows run on OpenMP threads.
    std::pair<GridFunction, GridFunction> apply(const GridFunction& u, const GridFunction& v) const;
    /// Single-threaded reference of `apply`; agrees bit for bit.
    std::pair<GridFunction, GridFunction> apply_serial(const GridFunction& u, const GridFunction& v) const;
    /// T(u, v) at arbitrary points, splitting the panel that contains each
    /// point so the kernel kink is respected.
    std::pair<std::vector<double>, std::vector<double>> apply_at(const GridFunction& u, const GridFunction& v,
                                                                 const std::vector<double>& ts) const;

    /// sup over `ts` of |x - T x| for both components, x read by interpolation.
    double residual(const GridFunction& u, const GridFunction& v, const std::vector<double>& ts) const;
    /// Nodes plus midpoints of consecutive nodes.
    std::vector<double> residual_points(int refine = 1) const;

private:
    struct Functional {
        std::vector<std::pair<std::size_t, double>> atoms;  // (node, weight)
        std::vector<double> quad;                           // density weight per quadrature point, may be empty
    };

    Functional make_functional(const Measure& m) const;
    double apply_functional(const Functional& f, const GridFunction& x, const std::vector<double>& xq) const;
    std::vector<double> at_quad(const GridFunction& x) const;
    std::vector<double> source(int i, const std::vector<double>& uq, const std::vector<double>& vq) const;
    std::array<double, 2> boundary_values(const GridFunction& u, const GridFunction& v, std::array<std::array<double, 2>, 2>& hl) const;
    std::pair<GridFunction, GridFunction> apply_impl(const GridFunction& u, const GridFunction& v, bool parallel) const;
    double phi(int i, double s, const GridFunction& u, const GridFunction& v) const;

    const ProblemDef* p_;
    std::vector<double> nodes_;
    std::vector<double> quad_s_, quad_w_;
    std::vector<std::size_t> quad_panel_;  // panel of each quadrature point
    std::vector<double> panel_edges_;
    std::vector<std::pair<std::size_t, std::array<double, 4>>> quad_stencil_;
    std::array<std::vector<double>, 2> rows_;  // node x quad: w_q k_i(t_n, s_q)
    std::array<std::vector<double>, 2> g_quad_;
    std::array<std::array<Functional, 2>, 2> beta_, delta_;
    std::array<std::array<std::vector<double>, 2>, 2> gamma_nodes_;
};

struct SolveOptions {
    int nodes = 257;
    double damping = 0.5;
    int max_iter = 5000;
    double tol = 1e-13;
    double divergence_ceiling = 1e8;
    double cone_slack = 1e-9;

    static SolveOptions from(const Options& o);
};

struct SolveResult {
    GridFunction u, v;
    double residual = 0.0;  // on nodes and midpoints
    double last_update = 0.0;
    int iterations = 0;
    bool converged = false;
    std::array<bool, 2> in_cone{};
    double norm = 0.0;  // max of the two sup-norms
    double seed = 0.0;  // constant value of the start, when seeded
    int bracket = -1;   // multistart bracket index
};

/// Requires H and L expressions for every boundary term (throws Error).
Discretization make_discretization(const ProblemDef& p, int nodes);

/// T(u, v) on u's nodes.
std::pair<GridFunction, GridFunction> apply_T(const Discretization& d, const GridFunction& u, const GridFunction& v);

/// min over [a_i, b_i] >= c~_i ||w|| - slack and w >= -slack on the nodes.
bool in_cone(const GridFunction& w, double a, double b, double c_tilde, double slack);

/// x <- (1 - damping) x + damping T(x), clamped to >= 0 at the nodes, until
/// the sup-norm update drops below tol or max_iter is reached.  Throws
/// NumericalError when the norm exceeds the divergence ceiling.
SolveResult picard(const Discretization& d, const TheoryConstants& k, const GridFunction& u0, const GridFunction& v0,
                   const SolveOptions& o);

struct MultistartResult {
    std::vector<SolveResult> solutions;  // converged, deduplicated, ordered by norm
    int seeds = 0;
    int diverged = 0;
    int unconverged = 0;
};

/// Seeds constant starts u = v = r with r log-spaced over each bracket and
/// runs picard from each (seeds run on OpenMP threads).  Converged results
/// closer than `dedup` in sup-norm are merged.
MultistartResult multistart(const Discretization& d, const TheoryConstants& k,
                            const std::vector<std::pair<double, double>>& brackets, int seeds_per_bracket,
                            const SolveOptions& o, double dedup = 1e-4);

nlohmann::json summary_json(const SolveResult& r);

}  // namespace conekit
