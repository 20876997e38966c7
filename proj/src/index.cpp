#include "conekit/index.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

namespace conekit {

using nlohmann::json;

namespace {

const Scalar kZero(Rational(0));
const Scalar kOne(Rational(1));

bool is_zero_kind(ConditionKind k) { return k != ConditionKind::index1; }

bool same_rho(const Scalar& a, const Scalar& b) {
    if (a.exact && b.exact) return *a.exact == *b.exact;
    return a.value == b.value;
}

double lattice(const std::array<Scalar, 2>& iv, int k, int n) {
    if (n < 2 || k == 0) return iv[0].value;
    if (k == n - 1) return iv[1].value;
    return iv[0].value + (iv[1].value - iv[0].value) * k / (n - 1);
}

struct Best {
    double value;
    long long index;
    std::array<double, 3> arg;
};

bool better(const Best& a, const Best& b, bool want_max) {
    if (a.value != b.value) return want_max ? a.value > b.value : a.value < b.value;
    return a.index < b.index;
}

double eval_f(const Expression& f, double t, double u, double v) {
    const double x[3] = {t, u, v};
    double y = f.eval(x);
    if (std::isnan(y)) {
        std::ostringstream os;
        os << "f is NaN at (t, u, v) = (" << t << ", " << u << ", " << v << ")";
        throw NumericalError(os.str());
    }
    return y;
}

BoxExtremum sample_box(const ProblemDef& p, int i, const Box& box, ExtremumMode mode, const Scalar& rho, int grid,
                       bool parallel) {
    if (grid < 2) throw std::invalid_argument("f_extremum: grid must be >= 2");
    if (!(rho.value > 0)) throw std::invalid_argument("f_extremum: rho must be positive");
    const Expression& f = p.equation(i).f;
    const bool want_max = mode == ExtremumMode::max;
    const double worst = want_max ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    Best best{worst, std::numeric_limits<long long>::max(), {}};
    std::exception_ptr error;

#pragma omp parallel if (parallel)
    {
        Best local{worst, std::numeric_limits<long long>::max(), {}};
#pragma omp for schedule(static)
        for (int a = 0; a < grid; ++a) {
            const double t = lattice(box.t, a, grid);
            try {
                for (int b = 0; b < grid; ++b) {
                    const double u = lattice(box.u, b, grid);
                    for (int c = 0; c < grid; ++c) {
                        const double v = lattice(box.v, c, grid);
                        Best cand{eval_f(f, t, u, v), (static_cast<long long>(a) * grid + b) * grid + c, {t, u, v}};
                        if (better(cand, local, want_max)) local = cand;
                    }
                }
            } catch (...) {
#pragma omp critical(conekit_f_extremum_error)
                if (!error) error = std::current_exception();
            }
        }
#pragma omp critical(conekit_f_extremum_best)
        if (better(local, best, want_max)) best = local;
    }
    if (error) std::rethrow_exception(error);

    // One refinement pass: spacing h/3 over the cells touching the incumbent.
    const std::array<const std::array<Scalar, 2>*, 3> iv{&box.t, &box.u, &box.v};
    std::array<std::vector<double>, 3> axes;
    for (std::size_t d = 0; d < 3; ++d) {
        const double lo = (*iv[d])[0].value, hi = (*iv[d])[1].value;
        const double h = (hi - lo) / (grid - 1);
        for (int m = -3; m <= 3; ++m) {
            double x = best.arg[d] + h * m / 3.0;
            if (x >= lo && x <= hi) axes[d].push_back(x);
        }
    }
    Best refined = best;
    long long n = 0;
    for (double t : axes[0])
        for (double u : axes[1])
            for (double v : axes[2]) {
                Best cand{eval_f(f, t, u, v), n++, {t, u, v}};
                // Strict improvement only, so the lattice incumbent wins ties.
                if (want_max ? cand.value > refined.value : cand.value < refined.value) refined = cand;
            }

    BoxExtremum out;
    out.equation = i;
    out.box = box;
    out.mode = mode;
    out.rho = rho;
    out.f_value = Scalar(refined.value);
    out.value = Scalar(refined.value / rho.value);
    out.arg = refined.arg;
    out.source = "sampled";
    out.grid = grid;
    out.refinement = 1;
    return out;
}

}  // namespace

Box condition_box(const ProblemDef& p, const TheoryConstants& k, int i, ConditionKind kind, const Scalar& rho) {
    const EquationDef& eq = p.equation(i);
    const Scalar big = rho / k.c;
    switch (kind) {
        case ConditionKind::index1: return {{kZero, kOne}, {kZero, rho}, {kZero, rho}};
        case ConditionKind::index0:
            if (i == 0) return {{eq.a, eq.b}, {rho, big}, {kZero, big}};
            return {{eq.a, eq.b}, {kZero, big}, {rho, big}};
        case ConditionKind::index0_star: return {{eq.a, eq.b}, {kZero, big}, {kZero, big}};
    }
    return {};
}

BoxExtremum f_extremum(const ProblemDef& p, int i, const Box& box, ExtremumMode mode, const Scalar& rho, int grid) {
    return sample_box(p, i, box, mode, rho, grid, true);
}

BoxExtremum f_extremum_serial(const ProblemDef& p, int i, const Box& box, ExtremumMode mode, const Scalar& rho,
                              int grid) {
    return sample_box(p, i, box, mode, rho, grid, false);
}

BoxExtremum condition_extremum(const ProblemDef& p, const TheoryConstants& k, int i, ConditionKind kind,
                               const Scalar& rho) {
    const Box box = condition_box(p, k, i, kind, rho);
    const ExtremumMode mode = kind == ConditionKind::index1 ? ExtremumMode::max : ExtremumMode::min;
    for (const auto& fb : p.f_bounds) {
        if (fb.equation != i || fb.kind != kind || !same_rho(fb.rho, rho)) continue;
        BoxExtremum out;
        out.equation = i;
        out.box = box;
        out.mode = mode;
        out.rho = rho;
        out.f_value = fb.value;
        out.value = fb.value / rho;
        out.source = "user-exact";
        return out;
    }
    return f_extremum(p, i, box, mode, rho, p.options.f_grid);
}

std::pair<Scalar, Scalar> index1_coefficients(const TheoryConstants& k, int i) {
    const EquationConstants& e = k.equation(i);
    const BoundaryConstants& b1 = e.bc[0];
    const BoundaryConstants& b2 = e.bc[1];
    const Scalar g1 = b1.gamma_norm * b1.h_hi, g2 = b2.gamma_norm * b2.h_hi;
    const auto& th = e.theta;
    Scalar bracket = (g1 * th[0] + g2 * th[2]) * b1.kernel_full + (g1 * th[1] + g2 * th[3]) * b2.kernel_full + e.inv_m;
    Scalar offset = g1 * (th[0] * e.Q + th[1] * e.S) + g2 * (th[2] * e.Q + th[3] * e.S) +
                    b1.gamma_norm * b1.l_hi * b1.delta_one + b2.gamma_norm * b2.l_hi * b2.delta_one;
    return {bracket, offset};
}

Scalar index0_coefficient(const TheoryConstants& k, int i) {
    const EquationConstants& e = k.equation(i);
    const BoundaryConstants& b1 = e.bc[0];
    const BoundaryConstants& b2 = e.bc[1];
    // c_ij ||gamma_ij|| is the minimum of gamma_ij on [a_i, b_i].
    const Scalar w1 = b1.gamma_min * b1.h_lo / e.D_under;
    const Scalar w2 = b2.gamma_min * b2.h_lo / e.D_under;
    Scalar x1 = w1 * (kOne - b2.h_lo * b2.beta_gamma[1]) + w2 * b1.h_lo * b2.beta_gamma[0];
    Scalar x2 = w1 * b2.h_lo * b1.beta_gamma[1] + w2 * (kOne - b1.h_lo * b1.beta_gamma[0]);
    return x1 * b1.kernel_ab + x2 * b2.kernel_ab + e.inv_M;
}

RhoCondition check_index1(const ProblemDef& p, const TheoryConstants& k, const Scalar& rho) {
    RhoCondition out;
    out.kind = ConditionKind::index1;
    out.rho = rho;
    out.satisfied = true;
    for (int i = 0; i < 2; ++i) {
        EquationCheck& c = out.eq[static_cast<std::size_t>(i)];
        c.f = condition_extremum(p, k, i, ConditionKind::index1, rho);
        std::tie(c.bracket, c.offset) = index1_coefficients(k, i);
        c.lhs = c.f.value * c.bracket + c.offset;
        c.threshold = (kOne - c.offset) / c.bracket;
        c.margin = kOne - c.lhs;
        c.satisfied = less(c.lhs, kOne);
        out.satisfied = out.satisfied && c.satisfied;
    }
    return out;
}

RhoCondition check_index0(const ProblemDef& p, const TheoryConstants& k, const Scalar& rho, bool star) {
    RhoCondition out;
    out.kind = star ? ConditionKind::index0_star : ConditionKind::index0;
    out.rho = rho;
    out.satisfied = !star;
    for (int i = 0; i < 2; ++i) {
        EquationCheck& c = out.eq[static_cast<std::size_t>(i)];
        c.f = condition_extremum(p, k, i, out.kind, rho);
        c.bracket = index0_coefficient(k, i);
        c.offset = kZero;
        c.lhs = c.f.value * c.bracket;
        c.threshold = kOne / c.bracket;
        c.margin = c.lhs - kOne;
        c.satisfied = less(kOne, c.lhs);
        out.satisfied = star ? (out.satisfied || c.satisfied) : (out.satisfied && c.satisfied);
    }
    return out;
}

RhoCondition check_condition(const ProblemDef& p, const TheoryConstants& k, const Scalar& rho, ConditionKind kind) {
    if (kind == ConditionKind::index1) return check_index1(p, k, rho);
    return check_index0(p, k, rho, kind == ConditionKind::index0_star);
}

std::vector<LadderEntry> parse_ladder(const std::string& text) {
    std::vector<LadderEntry> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (item.empty()) continue;
        auto colon = item.find(':');
        if (colon == std::string::npos) throw LadderError("ladder entry '" + item + "' is not rho:kind");
        auto rho = parse_rational(item.substr(0, colon));
        if (!rho || *rho <= 0) throw LadderError("ladder entry '" + item + "': rho must be a positive number");
        auto kind = parse_condition_kind(item.substr(colon + 1));
        if (!kind) throw LadderError("ladder entry '" + item + "': kind must be one, zero or star");
        out.push_back({Scalar(*rho), *kind});
    }
    if (out.empty()) throw LadderError("empty ladder");
    return out;
}

namespace {

void validate_ladder(const std::vector<LadderEntry>& ladder) {
    if (ladder.empty()) throw LadderError("empty ladder");
    for (std::size_t n = 0; n < ladder.size(); ++n) {
        if (!(ladder[n].rho.value > 0)) throw LadderError("ladder radii must be positive");
        if (n == 0) continue;
        if (!less(ladder[n - 1].rho, ladder[n].rho)) throw LadderError("ladder radii must be strictly increasing");
        if (is_zero_kind(ladder[n - 1].kind) == is_zero_kind(ladder[n].kind))
            throw LadderError("ladder kinds must alternate between index-1 and index-0 conditions");
    }
}

bool gap_ok(const LadderEntry& lo, const LadderEntry& hi, const Scalar& c) {
    if (is_zero_kind(lo.kind) == is_zero_kind(hi.kind)) return false;
    return is_zero_kind(lo.kind) ? less(lo.rho / c, hi.rho) : less(lo.rho, hi.rho);
}

/// Longest chain through `ok` entries with valid gaps; ties go to the
/// lexicographically smallest index sequence.
std::vector<std::size_t> longest_chain(const std::vector<LadderEntry>& e, const std::vector<bool>& ok, const Scalar& c) {
    const std::size_t n = e.size();
    std::vector<std::vector<std::size_t>> chain(n);
    std::vector<std::size_t> best;
    for (std::size_t k = 0; k < n; ++k) {
        if (!ok[k]) continue;
        chain[k] = {k};
        for (std::size_t j = 0; j < k; ++j) {
            if (chain[j].empty() || !gap_ok(e[j], e[k], c)) continue;
            std::vector<std::size_t> cand = chain[j];
            cand.push_back(k);
            if (cand.size() > chain[k].size() || (cand.size() == chain[k].size() && cand < chain[k])) chain[k] = cand;
        }
        if (chain[k].size() > best.size() || (chain[k].size() == best.size() && chain[k] < best)) best = chain[k];
    }
    return best;
}

std::string gap_text(const LadderEntry& lo, const LadderEntry& hi, std::size_t pos, const Scalar& c) {
    std::ostringstream os;
    const std::string a = "rho_" + std::to_string(pos + 1), b = "rho_" + std::to_string(pos + 2);
    if (is_zero_kind(lo.kind))
        os << a << "/c = " << (lo.rho / c).str() << " < " << b << " = " << hi.rho.str();
    else
        os << a << " = " << lo.rho.str() << " < " << b << " = " << hi.rho.str();
    return os.str();
}

std::string clause_name(const std::vector<LadderEntry>& chain) {
    const std::size_t len = chain.size();
    if (len < 2) return "none";
    if (len > 4) return "extended(" + std::to_string(len - 1) + ")";
    const bool zero_first = is_zero_kind(chain.front().kind);
    const int n = static_cast<int>(2 * (len - 2) + (zero_first ? 1 : 2));
    return "S" + std::to_string(n);
}

MultiplicityVerdict verdict_from(const std::vector<LadderEntry>& ladder, std::vector<RhoCondition> conditions,
                                 const Scalar& c) {
    MultiplicityVerdict v;
    v.ladder = ladder;
    v.conditions = std::move(conditions);
    std::vector<bool> ok;
    for (const auto& rc : v.conditions) ok.push_back(rc.satisfied);
    v.used = longest_chain(ladder, ok, c);

    std::vector<LadderEntry> chain;
    for (std::size_t idx : v.used) chain.push_back(ladder[idx]);
    if (chain.size() >= 2) {
        for (std::size_t n = 0; n + 1 < chain.size(); ++n)
            v.gap_checks.push_back({gap_text(chain[n], chain[n + 1], n, c), gap_ok(chain[n], chain[n + 1], c)});
        v.clause = clause_name(chain);
        v.guaranteed_count = static_cast<int>(chain.size()) - 1;
        for (std::size_t n = 1; n < chain.size(); ++n)
            if (chain[n].kind == ConditionKind::index0_star) v.star_beyond_first = true;
        for (std::size_t idx : v.used)
            for (const auto& e : v.conditions[idx].eq)
                if (e.f.source == "sampled") v.sampled_extrema = true;
    } else {
        v.used.clear();
        for (std::size_t n = 0; n + 1 < ladder.size(); ++n)
            v.gap_checks.push_back({gap_text(ladder[n], ladder[n + 1], n, c), gap_ok(ladder[n], ladder[n + 1], c)});
    }
    return v;
}

}  // namespace

MultiplicityVerdict multiplicity(const ProblemDef& p, const TheoryConstants& k, const std::vector<LadderEntry>& ladder) {
    validate_ladder(ladder);
    std::vector<RhoCondition> conditions;
    for (const auto& e : ladder) conditions.push_back(check_condition(p, k, e.rho, e.kind));
    return verdict_from(ladder, std::move(conditions), k.c);
}

MultiplicityVerdict auto_ladder(const ProblemDef& p, const TheoryConstants& k, double rho_lo, double rho_hi,
                                int points) {
    if (!(rho_lo > 0 && rho_lo < rho_hi) || points < 2)
        throw LadderError("auto ladder needs 0 < rho_lo < rho_hi and at least 2 points");
    std::vector<LadderEntry> cand;
    const double l0 = std::log(rho_lo), l1 = std::log(rho_hi);
    for (int n = 0; n < points; ++n) {
        // Radii are rounded to short rationals so the proposal is reproducible as text.
        const double r = std::exp(l0 + (l1 - l0) * n / (points - 1));
        const Scalar rho(best_rational(r, 1000000));
        for (ConditionKind kind : {ConditionKind::index1, ConditionKind::index0, ConditionKind::index0_star})
            cand.push_back({rho, kind});
    }
    std::vector<bool> ok;
    for (const auto& e : cand) ok.push_back(check_condition(p, k, e.rho, e.kind).satisfied);
    std::vector<std::size_t> chain = longest_chain(cand, ok, k.c);
    if (chain.empty()) chain.push_back(0);
    std::vector<LadderEntry> ladder;
    for (std::size_t idx : chain) ladder.push_back(cand[idx]);
    return multiplicity(p, k, ladder);
}

json to_json(const BoxExtremum& b) {
    auto iv = [](const std::array<Scalar, 2>& x) { return json::array({scalar_to_json(x[0]), scalar_to_json(x[1])}); };
    json o = {{"equation", b.equation + 1},
              {"mode", b.mode == ExtremumMode::max ? "sup" : "inf"},
              {"box", {{"t", iv(b.box.t)}, {"u", iv(b.box.u)}, {"v", iv(b.box.v)}}},
              {"rho", scalar_to_json(b.rho)},
              {"f_value", scalar_to_json(b.f_value)},
              {"value", scalar_to_json(b.value)},
              {"source", b.source}};
    if (b.source == "sampled") {
        o["arg"] = b.arg;
        o["grid"] = b.grid;
        o["refinement"] = b.refinement;
    }
    return o;
}

json to_json(const RhoCondition& c) {
    json o = {{"kind", to_string(c.kind)}, {"rho", scalar_to_json(c.rho)}, {"satisfied", c.satisfied}};
    o["equations"] = json::array();
    for (const auto& e : c.eq)
        o["equations"].push_back({{"f_extremum", to_json(e.f)},
                                  {"bracket", scalar_to_json(e.bracket)},
                                  {"offset", scalar_to_json(e.offset)},
                                  {"lhs", scalar_to_json(e.lhs)},
                                  {"threshold", scalar_to_json(e.threshold)},
                                  {"margin", scalar_to_json(e.margin)},
                                  {"satisfied", e.satisfied}});
    return o;
}

json to_json(const MultiplicityVerdict& v) {
    json o = {{"clause", v.clause},
              {"guaranteed_count", v.guaranteed_count},
              {"star_beyond_first", v.star_beyond_first},
              {"sampled_extrema", v.sampled_extrema}};
    o["ladder"] = json::array();
    for (const auto& e : v.ladder) o["ladder"].push_back({{"rho", scalar_to_json(e.rho)}, {"kind", to_string(e.kind)}});
    o["used"] = v.used;
    o["gap_checks"] = json::array();
    for (const auto& g : v.gap_checks) o["gap_checks"].push_back({{"constraint", g.constraint}, {"satisfied", g.satisfied}});
    o["conditions"] = json::array();
    for (const auto& c : v.conditions) o["conditions"].push_back(to_json(c));
    return o;
}

}  // namespace conekit
