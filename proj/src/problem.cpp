#include "conekit/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace conekit {

using nlohmann::json;

namespace {

const std::vector<std::string> kT{"t"};
const std::vector<std::string> kS{"s"};
const std::vector<std::string> kTS{"t", "s"};
const std::vector<std::string> kTUV{"t", "u", "v"};
const std::vector<std::string> kW{"w"};

// Canonical names of the standing assumptions; every Violation uses one.
constexpr const char* kAssumeMeasure = "dB_ij, dC_ij are positive measures";
constexpr const char* kAssumeHL = "h_ij1 w <= H_ij(w) <= h_ij2 w, L_ij(w) <= l_ij2 w";
constexpr const char* kAssumeGammaPos = "gamma_ij(t) >= 0";
constexpr const char* kAssumeGammaConc = "gamma_ij(t) >= c_ij ||gamma_ij|| on [a_i,b_i], c_ij in (0,1]";
constexpr const char* kAssumeHBeta = "h_ij2 beta_ij[gamma_ij] < 1";
constexpr const char* kAssumeD = "D_i > 0";
constexpr const char* kAssumeG = "g_i >= 0";
constexpr const char* kAssumePhiG = "int_{a_i}^{b_i} Phi_i g_i > 0";
constexpr const char* kAssumeInterval = "[a_i,b_i] subset of [0,1]";

std::string where(int i, int j) { return "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")"; }

Scalar read_scalar(const json& v, const std::string& ctx) {
    if (v.is_number_integer()) return Scalar(Rational(v.get<long long>()));
    if (v.is_number_unsigned()) return Scalar(Rational(static_cast<long long>(v.get<unsigned long long>())));
    if (v.is_number_float()) {
        // The shortest round-trip spelling is what the author wrote.
        if (auto r = parse_rational(v.dump())) return Scalar(*r);
        return Scalar(v.get<double>());
    }
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (auto r = parse_rational(s)) return Scalar(*r);
        throw SchemaError(ctx + ": expected a number or \"p/q\" string, got \"" + s + "\"");
    }
    throw SchemaError(ctx + ": expected a number or \"p/q\" string");
}

const json& need(const json& obj, const char* key, const std::string& ctx) {
    if (!obj.is_object() || !obj.contains(key)) throw SchemaError(ctx + ": missing key '" + key + "'");
    return obj.at(key);
}

std::string need_string(const json& obj, const char* key, const std::string& ctx) {
    const json& v = need(obj, key, ctx);
    if (v.is_number()) return v.dump();
    if (!v.is_string()) throw SchemaError(ctx + "." + key + ": expected an expression string");
    return v.get<std::string>();
}

Expression parse_expr(const json& v, const std::vector<std::string>& vars, const std::string& ctx) {
    std::string src;
    if (v.is_number()) src = v.dump();
    else if (v.is_string()) src = v.get<std::string>();
    else throw SchemaError(ctx + ": expected an expression string");
    try {
        return Expression::parse(src, vars);
    } catch (const ParseError& e) {
        throw ParseError(ctx + ": " + e.what(), e.offset(), e.line(), e.column());
    }
}

Measure read_measure(const json& v, const std::string& ctx) {
    Measure m;
    if (!v.is_object()) throw SchemaError(ctx + ": expected an object with 'atoms' and optional 'density'");
    if (v.contains("atoms")) {
        const json& atoms = v.at("atoms");
        if (!atoms.is_array()) throw SchemaError(ctx + ".atoms: expected an array");
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            std::string c = ctx + ".atoms[" + std::to_string(k) + "]";
            m.atoms.push_back({read_scalar(need(atoms[k], "at", c), c + ".at"),
                               read_scalar(need(atoms[k], "weight", c), c + ".weight")});
        }
    }
    if (v.contains("density") && !v.at("density").is_null())
        m.density = parse_expr(v.at("density"), kT, ctx + ".density");
    return m;
}

KernelSpec read_kernel(const json& v, const std::string& ctx) {
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "builtin2") return KernelSpec::builtin2();
        if (s == "builtin4") return KernelSpec::builtin4();
        throw SchemaError(ctx + ": unknown kernel '" + s + "' (builtin2, builtin4 or a custom object)");
    }
    if (!v.is_object()) throw SchemaError(ctx + ": expected a kernel name or object");
    auto lower = parse_expr(need(v, "lower", ctx), kTS, ctx + ".lower");
    auto upper = parse_expr(need(v, "upper", ctx), kTS, ctx + ".upper");
    auto phi = parse_expr(need(v, "phi", ctx), kS, ctx + ".phi");
    std::optional<Expression> conc;
    if (v.contains("conc") && !v.at("conc").is_null()) conc = parse_expr(v.at("conc"), kT, ctx + ".conc");
    return KernelSpec::custom(std::move(lower), std::move(upper), std::move(phi), std::move(conc));
}

std::vector<double> sample_points(int n, const std::vector<double>& extra, double lo = 0.0, double hi = 1.0) {
    std::vector<double> xs;
    for (int k = 0; k < n; ++k) xs.push_back(lo + (hi - lo) * k / (n - 1));
    for (double x : extra)
        if (x >= lo && x <= hi) xs.push_back(x);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

// First point where e < -tol on the sample, if any.
std::optional<std::pair<double, double>> first_negative(const Expression& e, const std::vector<double>& xs) {
    for (double x : xs) {
        double v = e.eval(std::span<const double>(&x, 1));
        if (v < -1e-14) return std::make_pair(x, v);
    }
    return std::nullopt;
}

void check_measure(const Measure& m, const std::string& name, int grid, std::vector<Violation>& out) {
    for (const auto& a : m.atoms) {
        if (a.weight.value < 0) {
            out.push_back({kAssumeMeasure, name + " has atom weight " + a.weight.str() + " at " + a.at.str()});
        }
        if (a.at.value < 0 || a.at.value > 1) {
            out.push_back({kAssumeMeasure, name + " has an atom at " + a.at.str() + " outside [0,1]"});
        }
    }
    if (m.density) {
        try {
            if (auto neg = first_negative(*m.density, sample_points(grid, m.density->breakpoints(0)))) {
                std::ostringstream os;
                os << name << " density is " << neg->second << " at t = " << neg->first;
                out.push_back({kAssumeMeasure, os.str()});
            }
        } catch (const DomainError& e) {
            out.push_back({kAssumeMeasure, name + " density cannot be evaluated on [0,1]: " + e.what()});
        }
    }
}

}  // namespace

std::string to_string(ConditionKind k) {
    switch (k) {
        case ConditionKind::index1: return "index1";
        case ConditionKind::index0: return "index0";
        case ConditionKind::index0_star: return "index0_star";
    }
    return "index1";
}

std::optional<ConditionKind> parse_condition_kind(std::string_view s) {
    if (s == "index1" || s == "one") return ConditionKind::index1;
    if (s == "index0" || s == "zero") return ConditionKind::index0;
    if (s == "index0_star" || s == "star") return ConditionKind::index0_star;
    return std::nullopt;
}

bool ProblemDef::has_HL() const {
    for (const auto& row : bc)
        for (const auto& b : row)
            if (!b.H || !b.L) return false;
    return true;
}

Scalar beta_of_gamma(const ProblemDef& p, int i, int j, int l) {
    const Measure& m = p.boundary(i, j).beta;
    const GammaTerm& g = p.boundary(i, l).gamma;
    if (auto e = stieltjes_exact(g.expr, m)) return Scalar(*e);
    return Scalar(stieltjes([&](double t) { return g.expr.eval(std::span<const double>(&t, 1)); }, m,
                            p.options.quad_tol, Panelization(g.expr.breakpoints(0))));
}

Scalar delta_of_one(const ProblemDef& p, int i, int j) {
    const Measure& m = p.boundary(i, j).delta;
    static const Expression one = Expression::parse("1", kT);
    if (auto e = stieltjes_exact(one, m)) return Scalar(*e);
    return Scalar(m.total(p.options.quad_tol));
}

ProblemDef load_json(const json& doc) {
    if (!doc.is_object()) throw SchemaError("problem: top level must be an object");
    if (!doc.contains("spec_version") || doc.at("spec_version") != 1)
        throw SchemaError("problem: 'spec_version' must be 1");

    ProblemDef p;
    p.source = doc.dump();

    if (doc.contains("options")) {
        const json& o = doc.at("options");
        if (!o.is_object()) throw SchemaError("options: expected an object");
        auto num = [&](const char* k, auto& field) {
            if (o.contains(k)) field = o.at(k).get<std::decay_t<decltype(field)>>();
        };
        num("quad_tol", p.options.quad_tol);
        num("f_grid", p.options.f_grid);
        num("nodes", p.options.nodes);
        num("sample_grid", p.options.sample_grid);
        num("hl_wmax", p.options.hl_wmax);
        num("hl_samples", p.options.hl_samples);
        num("damping", p.options.damping);
        num("max_iter", p.options.max_iter);
        num("solve_tol", p.options.solve_tol);
        num("divergence_ceiling", p.options.divergence_ceiling);
        if (p.options.f_grid < 2 || p.options.nodes < 5 || p.options.sample_grid < 2 || !(p.options.quad_tol > 0))
            throw SchemaError("options: out-of-range value");
    }

    const json& eqs = need(doc, "equations", "problem");
    if (!eqs.is_array() || eqs.size() != 2) throw SchemaError("equations: expected an array of 2 objects");
    for (int i = 0; i < 2; ++i) {
        const json& e = eqs[static_cast<std::size_t>(i)];
        std::string ctx = "equations[" + std::to_string(i) + "]";
        EquationDef& d = p.eq[static_cast<std::size_t>(i)];
        d.kernel = read_kernel(need(e, "kernel", ctx), ctx + ".kernel");
        d.g = parse_expr(need(e, "g", ctx), kT, ctx + ".g");
        d.f = parse_expr(need(e, "f", ctx), kTUV, ctx + ".f");
        const json& iv = need(e, "interval", ctx);
        if (!iv.is_array() || iv.size() != 2) throw SchemaError(ctx + ".interval: expected [a, b]");
        d.a = read_scalar(iv[0], ctx + ".interval[0]");
        d.b = read_scalar(iv[1], ctx + ".interval[1]");
    }

    const json& bnd = need(doc, "boundary", "problem");
    if (!bnd.is_array() || bnd.size() != 4) throw SchemaError("boundary: expected an array of 4 objects");
    std::array<std::array<bool, 2>, 2> seen{};
    for (std::size_t k = 0; k < 4; ++k) {
        const json& b = bnd[k];
        std::string ctx = "boundary[" + std::to_string(k) + "]";
        int i = static_cast<int>(k / 2), j = static_cast<int>(k % 2);
        if (b.contains("index")) {
            const json& ix = b.at("index");
            if (!ix.is_array() || ix.size() != 2) throw SchemaError(ctx + ".index: expected [i, j]");
            i = ix[0].get<int>() - 1;
            j = ix[1].get<int>() - 1;
            if (i < 0 || i > 1 || j < 0 || j > 1) throw SchemaError(ctx + ".index: entries must be 1 or 2");
        }
        if (seen[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)])
            throw SchemaError(ctx + ": duplicate boundary term " + where(i, j));
        seen[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = true;
        BoundaryDef& d = p.bc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        d.gamma.expr = parse_expr(need(b, "gamma", ctx), kT, ctx + ".gamma");
        d.beta = read_measure(need(b, "beta", ctx), ctx + ".beta");
        d.delta = read_measure(need(b, "delta", ctx), ctx + ".delta");
        d.h_lo = read_scalar(need(b, "h_lo", ctx), ctx + ".h_lo");
        d.h_hi = read_scalar(need(b, "h_hi", ctx), ctx + ".h_hi");
        d.l_hi = read_scalar(need(b, "l_hi", ctx), ctx + ".l_hi");
        if (b.contains("H") && !b.at("H").is_null()) d.H = parse_expr(b.at("H"), kW, ctx + ".H");
        if (b.contains("L") && !b.at("L").is_null()) d.L = parse_expr(b.at("L"), kW, ctx + ".L");
    }

    if (doc.contains("f_bounds")) {
        const json& fb = doc.at("f_bounds");
        if (!fb.is_array()) throw SchemaError("f_bounds: expected an array");
        for (std::size_t k = 0; k < fb.size(); ++k) {
            std::string ctx = "f_bounds[" + std::to_string(k) + "]";
            FBound b;
            b.equation = need(fb[k], "equation", ctx).get<int>() - 1;
            if (b.equation < 0 || b.equation > 1) throw SchemaError(ctx + ".equation: must be 1 or 2");
            auto kind = parse_condition_kind(need_string(fb[k], "condition", ctx));
            if (!kind) throw SchemaError(ctx + ".condition: expected index1, index0 or index0_star");
            b.kind = *kind;
            b.rho = read_scalar(need(fb[k], "rho", ctx), ctx + ".rho");
            b.value = read_scalar(need(fb[k], "value", ctx), ctx + ".value");
            p.f_bounds.push_back(b);
        }
    }

    // ----- standing assumptions -------------------------------------------
    std::vector<Violation> v;
    const int grid = p.options.sample_grid;

    for (int i = 0; i < 2; ++i) {
        EquationDef& d = p.eq[static_cast<std::size_t>(i)];
        std::string eqn = "equation " + std::to_string(i + 1);
        if (!(0.0 <= d.a.value && d.a.value < d.b.value && d.b.value <= 1.0)) {
            v.push_back({kAssumeInterval, eqn + ": interval [" + d.a.str() + ", " + d.b.str() + "]"});
            continue;
        }
        bool kernel_ok = true;
        try {
            d.c = derive_c(d.kernel, d.a, d.b);
        } catch (const ValidationError& e) {
            for (const auto& x : e.violations()) v.push_back({x.assumption, eqn + ": " + x.detail});
            kernel_ok = false;
        }
        if (kernel_ok) {
            for (const auto& x : check_kernel_bounds(d.kernel, d.a.value, d.b.value, d.c.value, grid))
                v.push_back({x.assumption, eqn + ": " + x.detail});
        }
        try {
            if (auto neg = first_negative(d.g, sample_points(grid, d.g.breakpoints(0)))) {
                std::ostringstream os;
                os << eqn << ": g(" << neg->first << ") = " << neg->second;
                v.push_back({kAssumeG, os.str()});
            } else {
                const Expression& g = d.g;
                const KernelSpec& k = d.kernel;
                Panelization bp(g.breakpoints(0));
                bp.add(k.phi_breakpoints());
                double phig = integrate([&](double s) { return k.phi(s) * g.eval(std::span<const double>(&s, 1)); },
                                        d.a.value, d.b.value, bp, p.options.quad_tol);
                if (!(phig > 0)) {
                    std::ostringstream os;
                    os << eqn << ": integral of Phi*g over [" << d.a.str() << ", " << d.b.str() << "] is " << phig;
                    v.push_back({kAssumePhiG, os.str()});
                }
            }
        } catch (const DomainError& e) {
            v.push_back({kAssumeG, eqn + ": g cannot be evaluated on [0,1]: " + e.what()});
        }
    }

    bool measures_ok = true;
    bool gammas_ok = true;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            BoundaryDef& d = p.bc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            const std::string w = where(i, j);
            std::size_t before = v.size();
            check_measure(d.beta, "beta" + w, grid, v);
            check_measure(d.delta, "delta" + w, grid, v);
            if (v.size() != before) measures_ok = false;

            if (d.h_lo.value < 0 || d.h_hi.value < d.h_lo.value || d.l_hi.value < 0) {
                v.push_back({kAssumeHL, w + ": need 0 <= h_lo <= h_hi and l_hi >= 0, got h_lo = " + d.h_lo.str() +
                                            ", h_hi = " + d.h_hi.str() + ", l_hi = " + d.l_hi.str()});
            }

            try {
                if (auto neg = first_negative(d.gamma.expr, sample_points(grid, d.gamma.expr.breakpoints(0)))) {
                    std::ostringstream os;
                    os << w << ": gamma(" << neg->first << ") = " << neg->second;
                    v.push_back({kAssumeGammaPos, os.str()});
                    gammas_ok = false;
                    continue;
                }
            } catch (const DomainError& e) {
                v.push_back({kAssumeGammaPos, w + ": gamma cannot be evaluated on [0,1]: " + e.what()});
                gammas_ok = false;
                continue;
            }
            const EquationDef& eq = p.eq[static_cast<std::size_t>(i)];
            if (!(eq.a.value < eq.b.value)) continue;
            try {
                d.gamma = derive_gamma_constants(d.gamma.expr, eq.a, eq.b);
            } catch (const DegenerateGammaError&) {
                // gamma == 0: the boundary term vanishes identically.
                d.gamma.sup_norm = Scalar(Rational(0));
                d.gamma.c_gamma = Scalar(Rational(1));
            }
            if (!(d.gamma.c_gamma.value > 0.0 && d.gamma.c_gamma.value <= 1.0 + 1e-15)) {
                v.push_back({kAssumeGammaConc, w + ": c_gamma = " + d.gamma.c_gamma.str()});
                gammas_ok = false;
            }
        }
    }

    if (measures_ok && gammas_ok) {
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                const BoundaryDef& d = p.boundary(i, j);
                Scalar hb = d.h_hi * beta_of_gamma(p, i, j, j);
                if (!less(hb, Scalar(Rational(1)))) {
                    v.push_back({kAssumeHBeta, where(i, j) + ": h_hi*beta[gamma] = " + hb.str()});
                }
            }
            const BoundaryDef& b1 = p.boundary(i, 0);
            const BoundaryDef& b2 = p.boundary(i, 1);
            Scalar one(Rational(1));
            Scalar D = (one - b1.h_hi * beta_of_gamma(p, i, 0, 0)) * (one - b2.h_hi * beta_of_gamma(p, i, 1, 1)) -
                       b1.h_hi * b2.h_hi * beta_of_gamma(p, i, 0, 1) * beta_of_gamma(p, i, 1, 0);
            if (!less(Scalar(Rational(0)), D)) {
                v.push_back({kAssumeD, "equation " + std::to_string(i + 1) + ": D = " + D.str()});
            }
        }
    }

    if (v.empty()) {
        for (const auto& c : validate_HL_consistency(p, p.options.hl_wmax, p.options.hl_samples)) {
            if (c.ok) continue;
            std::ostringstream os;
            os << where(c.i, c.j) << ": " << c.which << " sandwich fails at w = " << c.worst_w << " (margin "
               << c.worst_margin << ")";
            v.push_back({kAssumeHL, os.str()});
        }
    }

    if (!v.empty()) throw ValidationError(std::move(v));
    return p;
}

ProblemDef load_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("problem file is not valid JSON: ") + e.what());
    }
    try {
        return load_json(doc);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("problem file: ") + e.what());
    }
}

ProblemDef load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open problem file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_string(ss.str());
}

namespace {

json scalar_json(const Scalar& s) {
    if (s.exact) return to_string(*s.exact);
    return s.value;
}

json measure_json(const Measure& m) {
    json out;
    out["atoms"] = json::array();
    for (const auto& a : m.atoms) out["atoms"].push_back({{"at", scalar_json(a.at)}, {"weight", scalar_json(a.weight)}});
    if (m.density) out["density"] = m.density->source();
    return out;
}

}  // namespace

json to_json(const ProblemDef& p) {
    json doc;
    doc["spec_version"] = 1;
    doc["equations"] = json::array();
    for (const auto& e : p.eq) {
        json k;
        if (e.kernel.kind() == KernelSpec::Kind::custom) {
            k = {{"lower", e.kernel.lower().source()}, {"upper", e.kernel.upper().source()},
                 {"phi", e.kernel.phi_expr().source()}};
            if (e.kernel.conc()) k["conc"] = e.kernel.conc()->source();
        } else {
            k = e.kernel.name();
        }
        doc["equations"].push_back(
            {{"kernel", k}, {"g", e.g.source()}, {"f", e.f.source()}, {"interval", {scalar_json(e.a), scalar_json(e.b)}}});
    }
    doc["boundary"] = json::array();
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const BoundaryDef& b = p.boundary(i, j);
            json o = {{"index", {i + 1, j + 1}},  {"gamma", b.gamma.expr.source()}, {"beta", measure_json(b.beta)},
                      {"delta", measure_json(b.delta)}, {"h_lo", scalar_json(b.h_lo)}, {"h_hi", scalar_json(b.h_hi)},
                      {"l_hi", scalar_json(b.l_hi)}};
            if (b.H) o["H"] = b.H->source();
            if (b.L) o["L"] = b.L->source();
            doc["boundary"].push_back(o);
        }
    }
    const Options& o = p.options;
    doc["options"] = {{"quad_tol", o.quad_tol},     {"f_grid", o.f_grid},         {"nodes", o.nodes},
                      {"sample_grid", o.sample_grid}, {"hl_wmax", o.hl_wmax},       {"hl_samples", o.hl_samples},
                      {"damping", o.damping},       {"max_iter", o.max_iter},     {"solve_tol", o.solve_tol},
                      {"divergence_ceiling", o.divergence_ceiling}};
    if (!p.f_bounds.empty()) {
        doc["f_bounds"] = json::array();
        for (const auto& f : p.f_bounds)
            doc["f_bounds"].push_back({{"equation", f.equation + 1},
                                       {"condition", to_string(f.kind)},
                                       {"rho", scalar_json(f.rho)},
                                       {"value", scalar_json(f.value)}});
    }
    return doc;
}

std::vector<HLCheck> validate_HL_consistency(const ProblemDef& p, double w_max, int n) {
    std::vector<HLCheck> out;
    if (n < 2 || !(w_max > 0)) throw std::invalid_argument("validate_HL_consistency: need n >= 2, w_max > 0");
    std::vector<double> ws;
    const double lo = std::log10(w_max) - 8.0, hi = std::log10(w_max);
    for (int k = 0; k < n; ++k) ws.push_back(std::pow(10.0, lo + (hi - lo) * k / (n - 1)));
    ws.back() = w_max;

    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const BoundaryDef& b = p.boundary(i, j);
            if (b.H) {
                HLCheck c{i, j, "H", std::numeric_limits<double>::infinity(), 0.0, true};
                for (double w : ws) {
                    double h = b.H->eval(std::span<const double>(&w, 1));
                    double m = std::min(h - b.h_lo.value * w, b.h_hi.value * w - h);
                    if (m < c.worst_margin) {
                        c.worst_margin = m;
                        c.worst_w = w;
                    }
                    if (m < -1e-12 * std::max(1.0, w)) c.ok = false;
                }
                out.push_back(c);
            }
            if (b.L) {
                HLCheck c{i, j, "L", std::numeric_limits<double>::infinity(), 0.0, true};
                for (double w : ws) {
                    double l = b.L->eval(std::span<const double>(&w, 1));
                    double m = b.l_hi.value * w - l;
                    if (m < c.worst_margin) {
                        c.worst_margin = m;
                        c.worst_w = w;
                    }
                    if (m < -1e-12 * std::max(1.0, w)) c.ok = false;
                }
                out.push_back(c);
            }
        }
    }
    return out;
}

}  // namespace conekit
