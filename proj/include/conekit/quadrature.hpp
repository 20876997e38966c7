#pragma once

#include "conekit/expr.hpp"
#include "conekit/rational.hpp"

#include <array>
#include <functional>
#include <optional>
#include <vector>

namespace conekit {

using RealFn = std::function<double(double)>;

/// Interior points where an integrand may lose smoothness.  Sorted, unique,
/// strictly inside the integration interval once `clip`ped.
class Panelization {
public:
    Panelization() = default;
    Panelization(std::initializer_list<double> pts) : Panelization(std::vector<double>(pts)) {}
    explicit Panelization(std::vector<double> pts);

    void add(double x);
    void add(const std::vector<double>& xs);
    /// Breakpoints strictly inside (lo, hi).
    std::vector<double> clip(double lo, double hi) const;
    const std::vector<double>& points() const noexcept { return pts_; }

private:
    std::vector<double> pts_;
};

/// 15-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre15 {
    std::array<double, 15> nodes;
    std::array<double, 15> weights;
    static const GaussLegendre15& get();
};

inline constexpr double kDefaultTol = 1e-10;
inline constexpr int kMaxSubdivisions = 1 << 14;

struct Integral {
    double value = 0.0;
    double error = 0.0;
    int panels = 0;
};

/// Adaptive composite Gauss-Legendre (order 15, bisection with the two-half
/// estimate) over [lo, hi], never merging panels across breakpoints.  The
/// panel tolerance is proportional to its width so the summed error estimate
/// stays below `tol`.  Throws NumericalError on NaN or when more than
/// kMaxSubdivisions splits are needed (naming the worst panel).
Integral integrate_detailed(const RealFn& f, double lo, double hi, const Panelization& panels = {},
                            double tol = kDefaultTol);

inline double integrate(const RealFn& f, double lo, double hi, const Panelization& panels = {},
                        double tol = kDefaultTol) {
    return integrate_detailed(f, lo, hi, panels, tol).value;
}

/// Positive Riemann-Stieltjes measure on [0, 1]: point masses plus an
/// optional density in one variable.
struct Measure {
    struct Atom {
        Scalar at;
        Scalar weight;
    };
    std::vector<Atom> atoms;
    std::optional<Expression> density;

    bool empty() const noexcept { return atoms.empty() && !density; }
    /// Atom locations plus density guard breakpoints.
    std::vector<double> breakpoints() const;
    /// Sigma weights + integral of the density.
    double total(double tol = kDefaultTol) const;
};

/// sum_k weight_k w(eta_k) + int_0^1 w(s) density(s) ds.
double stieltjes(const RealFn& w, const Measure& m, double tol = kDefaultTol,
                 const Panelization& extra = {});

/// Exact functional value when w and the measure are exact: `w_exact`
/// returns the exact value at an exact point, and the density part must be
/// a polynomial integral (w_poly times density polynomial).
std::optional<Rational> stieltjes_exact(const Expression& w, const Measure& m);

struct Extremum {
    double arg = 0.0;
    double value = 0.0;
};

/// Scan `f` on 1025 uniform points (plus `extra` points inside [lo, hi])
/// and refine the incumbent by golden-section search on its neighbouring
/// scan cells.  Exact for piecewise-unimodal inputs up to ~1e-12 in the argument.
Extremum extremum_on_interval(const RealFn& f, double lo, double hi, ExtremumMode mode,
                              const std::vector<double>& extra = {});

}  // namespace conekit
