#include "conekit/expr.hpp"

#include "conekit/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace conekit {

namespace {

using Op = Expression::Op;

int precedence(Op op) {
    switch (op) {
        case Op::add:
        case Op::sub: return 1;
        case Op::mul:
        case Op::div: return 2;
        case Op::neg: return 3;
        case Op::pow: return 4;
        default: return 5;
    }
}

struct FunctionInfo {
    const char* name;
    std::size_t arity;
};

constexpr FunctionInfo kFunctions[] = {
    {"sqrt", 1}, {"sin", 1}, {"cos", 1}, {"exp", 1}, {"log", 1}, {"abs", 1}, {"min", 2}, {"max", 2},
};

const FunctionInfo* find_function(std::string_view name) {
    for (const auto& f : kFunctions)
        if (name == f.name) return &f;
    return nullptr;
}

enum class Tok { number, ident, symbol, end };

struct Token {
    Tok kind = Tok::end;
    std::string text;
    std::size_t offset = 0;
};

}  // namespace

class ExpressionParser {
public:
    ExpressionParser(std::string_view src, Expression& out) : src_(src), out_(out) { tokenize(); }

    int parse_all() {
        int root = parse_sum();
        if (peek().kind != Tok::end) fail("unexpected '" + peek().text + "'", peek().offset);
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& msg, std::size_t offset) const {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < offset && i < src_.size(); ++i) {
            if (src_[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(msg, offset, line, col);
    }

    void tokenize() {
        std::size_t i = 0;
        while (i < src_.size()) {
            char c = src_[i];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++i;
                continue;
            }
            Token t;
            t.offset = i;
            if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < src_.size() &&
                                                                std::isdigit(static_cast<unsigned char>(src_[i + 1])))) {
                std::size_t j = i;
                while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
                if (j < src_.size() && src_[j] == '.') {
                    ++j;
                    while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
                }
                if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
                    std::size_t k = j + 1;
                    if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
                    if (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
                        while (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) ++k;
                        j = k;
                    }
                }
                t.kind = Tok::number;
                t.text = std::string(src_.substr(i, j - i));
                i = j;
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t j = i;
                while (j < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
                    ++j;
                t.kind = Tok::ident;
                t.text = std::string(src_.substr(i, j - i));
                i = j;
            } else if (std::string_view("+-*/^(),;:[]").find(c) != std::string_view::npos) {
                t.kind = Tok::symbol;
                t.text = std::string(1, c);
                ++i;
            } else {
                fail(std::string("unexpected character '") + c + "'", i);
            }
            tokens_.push_back(std::move(t));
        }
        tokens_.push_back(Token{Tok::end, "<end>", src_.size()});
    }

    const Token& peek() const { return tokens_[pos_]; }
    Token next() {
        Token t = tokens_[pos_];
        if (pos_ + 1 < tokens_.size()) ++pos_;
        return t;
    }
    bool accept(std::string_view sym) {
        if (peek().kind == Tok::symbol && peek().text == sym) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(std::string_view sym) {
        if (!accept(sym)) fail("expected '" + std::string(sym) + "' but found '" + peek().text + "'", peek().offset);
    }

    int add(Expression::Node n) {
        out_.nodes_.push_back(std::move(n));
        return static_cast<int>(out_.nodes_.size()) - 1;
    }
    int binary(Op op, int a, int b) {
        Expression::Node n;
        n.op = op;
        n.args = {a, b};
        return add(std::move(n));
    }

    int parse_sum() {
        int lhs = parse_product();
        for (;;) {
            if (accept("+")) lhs = binary(Op::add, lhs, parse_product());
            else if (accept("-")) lhs = binary(Op::sub, lhs, parse_product());
            else return lhs;
        }
    }

    int parse_product() {
        int lhs = parse_unary();
        for (;;) {
            if (accept("*")) lhs = binary(Op::mul, lhs, parse_unary());
            else if (accept("/")) lhs = binary(Op::div, lhs, parse_unary());
            else return lhs;
        }
    }

    int parse_unary() {
        if (accept("-")) {
            Expression::Node n;
            n.op = Op::neg;
            n.args = {parse_unary()};
            return add(std::move(n));
        }
        return parse_power();
    }

    int parse_power() {
        int base = parse_primary();
        if (accept("^")) return binary(Op::pow, base, parse_unary());
        return base;
    }

    std::optional<std::size_t> variable_index(std::string_view name) const {
        const auto& v = out_.variables_;
        auto it = std::find(v.begin(), v.end(), name);
        if (it == v.end()) return std::nullopt;
        return static_cast<std::size_t>(it - v.begin());
    }

    int parse_primary() {
        Token t = next();
        if (t.kind == Tok::number) {
            Expression::Node n;
            n.op = Op::literal;
            n.text = t.text;
            n.exact = parse_rational(t.text);
            if (!n.exact) fail("malformed number '" + t.text + "'", t.offset);
            n.number = to_double(*n.exact);
            return add(std::move(n));
        }
        if (t.kind == Tok::symbol && t.text == "(") {
            int inner = parse_sum();
            expect(")");
            return inner;
        }
        if (t.kind == Tok::ident) {
            if (t.text == "piecewise" && peek().text == "(") return parse_piecewise();
            if (auto* f = find_function(t.text); f && peek().text == "(") {
                expect("(");
                Expression::Node n;
                n.op = Op::call;
                n.text = f->name;
                if (!accept(")")) {
                    do {
                        n.args.push_back(parse_sum());
                    } while (accept(","));
                    expect(")");
                }
                if (n.args.size() != f->arity)
                    fail("function '" + t.text + "' takes " + std::to_string(f->arity) + " argument(s)", t.offset);
                return add(std::move(n));
            }
            if (auto idx = variable_index(t.text)) {
                Expression::Node n;
                n.op = Op::variable;
                n.var = *idx;
                n.text = t.text;
                return add(std::move(n));
            }
            if (t.text == "pi") {
                Expression::Node n;
                n.op = Op::pi;
                n.text = "pi";
                return add(std::move(n));
            }
            if (t.text == "inf") fail("'inf' is only allowed as the right end of a piecewise guard", t.offset);
            fail("unknown identifier '" + t.text + "'", t.offset);
        }
        fail("unexpected '" + t.text + "'", t.offset);
    }

    Expression::Bound parse_bound(bool right) {
        Expression::Bound b;
        if (peek().kind == Tok::ident && peek().text == "inf") {
            if (!right) fail("'inf' is only allowed as the right end of a piecewise guard", peek().offset);
            next();
            b.infinite = true;
            b.value = Scalar(std::numeric_limits<double>::infinity());
            return b;
        }
        std::size_t at = peek().offset;
        std::size_t first_node = out_.nodes_.size();
        b.node = parse_sum();
        for (std::size_t k = first_node; k < out_.nodes_.size(); ++k)
            if (out_.nodes_[k].op == Op::variable) fail("piecewise guard bounds must be constant", at);
        std::vector<double> none(out_.variables_.size(), 0.0);
        std::vector<Rational> none_exact(out_.variables_.size(), Rational(0));
        b.value = Scalar(out_.eval_node(b.node, none), out_.exact_node(b.node, none_exact));
        return b;
    }

    int parse_piecewise() {
        expect("(");
        Expression::Node n;
        n.op = Op::piecewise;
        n.text = "piecewise";
        bool have_var = false;
        std::vector<std::size_t> guard_offsets;
        do {
            Token v = next();
            if (v.kind != Tok::ident) fail("expected guard variable", v.offset);
            auto idx = variable_index(v.text);
            if (!idx) fail("unknown identifier '" + v.text + "'", v.offset);
            if (have_var && *idx != n.var) fail("all piecewise guards must use the same variable", v.offset);
            n.var = *idx;
            have_var = true;
            Token in = next();
            if (in.kind != Tok::ident || in.text != "in") fail("expected 'in'", in.offset);
            guard_offsets.push_back(peek().offset);
            Expression::Branch br;
            bool lo_closed = true;
            if (accept("[")) lo_closed = true;
            else if (accept("(")) lo_closed = false;
            else fail("expected '[' or '('", peek().offset);
            br.lo = parse_bound(false);
            br.lo.closed = lo_closed;
            expect(",");
            br.hi = parse_bound(true);
            if (accept("]")) br.hi.closed = true;
            else if (accept(")")) br.hi.closed = false;
            else fail("expected ']' or ')'", peek().offset);
            if (br.hi.infinite && br.hi.closed) fail("interval cannot be closed at inf", guard_offsets.back());
            if (!(br.lo.value.value < br.hi.value.value ||
                  (br.lo.value.value == br.hi.value.value && br.lo.closed && br.hi.closed)))
                fail("empty piecewise guard", guard_offsets.back());
            expect(":");
            br.body = parse_sum();
            n.branches.push_back(br);
        } while (accept(";"));
        expect(")");

        // Guards must tile one interval: sort by left end, then every
        // right end must meet the next left end with exactly one side closed.
        std::vector<std::size_t> order(n.branches.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return less(n.branches[a].lo.value, n.branches[b].lo.value);
        });
        for (std::size_t k = 1; k < order.size(); ++k) {
            const auto& prev = n.branches[order[k - 1]];
            const auto& cur = n.branches[order[k]];
            std::size_t at = guard_offsets[order[k]];
            if (prev.hi.infinite) fail("piecewise guards overlap", at);
            bool meet = (prev.hi.value.exact && cur.lo.value.exact) ? *prev.hi.value.exact == *cur.lo.value.exact
                                                                     : prev.hi.value.value == cur.lo.value.value;
            if (!meet) {
                if (less(prev.hi.value, cur.lo.value)) fail("gap between piecewise guards", at);
                fail("piecewise guards overlap", at);
            }
            if (prev.hi.closed && cur.lo.closed) fail("piecewise guards overlap at a shared endpoint", at);
            if (!prev.hi.closed && !cur.lo.closed) fail("gap between piecewise guards at a shared endpoint", at);
        }
        return add(std::move(n));
    }

    std::string_view src_;
    Expression& out_;
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

Expression Expression::parse(std::string_view source, std::vector<std::string> variables) {
    Expression e;
    e.source_ = std::string(source);
    e.variables_ = std::move(variables);
    bool blank = std::all_of(source.begin(), source.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
    if (blank) throw ParseError("empty expression", 0, 1, 1);
    ExpressionParser p(e.source_, e);
    e.root_ = p.parse_all();
    return e;
}

Expression Expression::constant(const Rational& value, std::vector<std::string> variables) {
    Rational a = value < 0 ? Rational(-value) : value;
    std::string text = boost::multiprecision::numerator(a).str();
    if (boost::multiprecision::denominator(a) != 1) text += "/" + boost::multiprecision::denominator(a).str();
    if (value < 0) text = "-" + text;
    return parse(text, std::move(variables));
}

// ----- evaluation ---------------------------------------------------------

double Expression::eval(std::span<const double> values) const {
    if (values.size() < variables_.size()) throw std::invalid_argument("eval: missing variable bindings");
    return eval_node(root_, values);
}

double Expression::eval(const std::map<std::string, double>& bindings) const {
    std::vector<double> x;
    x.reserve(variables_.size());
    for (const auto& v : variables_) {
        auto it = bindings.find(v);
        if (it == bindings.end()) throw std::invalid_argument("eval: no binding for '" + v + "'");
        x.push_back(it->second);
    }
    return eval(x);
}

namespace {

template <class T>
bool inside(const Expression::Branch& b, const T& x, bool exact) {
    (void)exact;
    if constexpr (std::is_same_v<T, double>) {
        double lo = b.lo.value.value, hi = b.hi.value.value;
        bool okl = b.lo.closed ? x >= lo : x > lo;
        bool okh = b.hi.infinite || (b.hi.closed ? x <= hi : x < hi);
        return okl && okh;
    } else {
        auto cmp_lo = [&] {
            if (b.lo.value.exact) return b.lo.closed ? x >= *b.lo.value.exact : x > *b.lo.value.exact;
            double xd = to_double(x);
            return b.lo.closed ? xd >= b.lo.value.value : xd > b.lo.value.value;
        };
        auto cmp_hi = [&] {
            if (b.hi.infinite) return true;
            if (b.hi.value.exact) return b.hi.closed ? x <= *b.hi.value.exact : x < *b.hi.value.exact;
            double xd = to_double(x);
            return b.hi.closed ? xd <= b.hi.value.value : xd < b.hi.value.value;
        };
        return cmp_lo() && cmp_hi();
    }
}

}  // namespace

double Expression::eval_node(int idx, std::span<const double> x) const {
    const Node& n = nodes_[static_cast<std::size_t>(idx)];
    switch (n.op) {
        case Op::literal: return n.number;
        case Op::variable: return x[n.var];
        case Op::pi: return std::numbers::pi;
        case Op::neg: return -eval_node(n.args[0], x);
        case Op::add: return eval_node(n.args[0], x) + eval_node(n.args[1], x);
        case Op::sub: return eval_node(n.args[0], x) - eval_node(n.args[1], x);
        case Op::mul: return eval_node(n.args[0], x) * eval_node(n.args[1], x);
        case Op::div: {
            double a = eval_node(n.args[0], x);
            double b = eval_node(n.args[1], x);
            if (b == 0.0) throw DomainError("division by zero", print_node(idx));
            return a / b;
        }
        case Op::pow: {
            double a = eval_node(n.args[0], x);
            double b = eval_node(n.args[1], x);
            double r = std::pow(a, b);
            if (!std::isfinite(r)) throw DomainError("power is not finite", print_node(idx));
            return r;
        }
        case Op::call: {
            double a = eval_node(n.args[0], x);
            const std::string& f = n.text;
            if (f == "sqrt") {
                if (a < 0) throw DomainError("sqrt of negative value", print_node(idx));
                return std::sqrt(a);
            }
            if (f == "log") {
                if (a <= 0) throw DomainError("log of non-positive value", print_node(idx));
                return std::log(a);
            }
            if (f == "sin") return std::sin(a);
            if (f == "cos") return std::cos(a);
            if (f == "abs") return std::fabs(a);
            if (f == "exp") {
                double r = std::exp(a);
                if (!std::isfinite(r)) throw DomainError("exp overflow", print_node(idx));
                return r;
            }
            double b = eval_node(n.args[1], x);
            if (f == "min") return std::min(a, b);
            return std::max(a, b);
        }
        case Op::piecewise: {
            double v = x[n.var];
            for (const auto& b : n.branches)
                if (inside(b, v, false)) return eval_node(b.body, x);
            throw DomainError("point outside every piecewise guard", print_node(idx));
        }
    }
    return 0.0;
}

std::optional<Rational> Expression::eval_exact(std::span<const Rational> values) const {
    if (values.size() < variables_.size()) throw std::invalid_argument("eval_exact: missing variable bindings");
    return exact_node(root_, values);
}

std::optional<Rational> Expression::exact_node(int idx, std::span<const Rational> x) const {
    const Node& n = nodes_[static_cast<std::size_t>(idx)];
    auto arg = [&](std::size_t k) { return exact_node(n.args[k], x); };
    switch (n.op) {
        case Op::literal: return n.exact;
        case Op::variable: return x[n.var];
        case Op::pi: return std::nullopt;
        case Op::neg: {
            auto a = arg(0);
            if (!a) return std::nullopt;
            return Rational(-*a);
        }
        case Op::add:
        case Op::sub:
        case Op::mul:
        case Op::div: {
            auto a = arg(0), b = arg(1);
            if (!a || !b) return std::nullopt;
            if (n.op == Op::add) return Rational(*a + *b);
            if (n.op == Op::sub) return Rational(*a - *b);
            if (n.op == Op::mul) return Rational(*a * *b);
            if (*b == 0) throw DomainError("division by zero", print_node(idx));
            return Rational(*a / *b);
        }
        case Op::pow: {
            auto a = arg(0), b = arg(1);
            if (!a || !b || boost::multiprecision::denominator(*b) != 1) return std::nullopt;
            BigInt e = boost::multiprecision::numerator(*b);
            if (e > 4096 || e < -4096) return std::nullopt;
            long k = e.convert_to<long>();
            if (k < 0 && *a == 0) throw DomainError("power is not finite", print_node(idx));
            Rational r = 1;
            for (long i = 0; i < std::labs(k); ++i) r *= *a;
            if (k < 0) r = 1 / r;
            return r;
        }
        case Op::call: {
            const std::string& f = n.text;
            if (f == "abs") {
                auto a = arg(0);
                if (!a) return std::nullopt;
                return *a < 0 ? Rational(-*a) : *a;
            }
            if (f == "min" || f == "max") {
                auto a = arg(0), b = arg(1);
                if (!a || !b) return std::nullopt;
                return (f == "min") == (*a < *b) ? *a : *b;
            }
            return std::nullopt;
        }
        case Op::piecewise: {
            const Rational& v = x[n.var];
            for (const auto& b : n.branches)
                if (inside(b, v, true)) return exact_node(b.body, x);
            throw DomainError("point outside every piecewise guard", print_node(idx));
        }
    }
    return std::nullopt;
}

std::optional<Polynomial> Expression::to_polynomial() const {
    if (empty()) return std::nullopt;
    return poly_node(root_);
}

std::optional<Polynomial> Expression::poly_node(int idx) const {
    const Node& n = nodes_[static_cast<std::size_t>(idx)];
    const std::size_t nv = variables_.size();
    switch (n.op) {
        case Op::literal: return Polynomial::constant(nv, *n.exact);
        case Op::variable: return Polynomial::variable(nv, n.var);
        case Op::neg: {
            auto a = poly_node(n.args[0]);
            if (!a) return std::nullopt;
            return -*a;
        }
        case Op::add:
        case Op::sub:
        case Op::mul: {
            auto a = poly_node(n.args[0]), b = poly_node(n.args[1]);
            if (!a || !b) return std::nullopt;
            if (n.op == Op::add) return *a + *b;
            if (n.op == Op::sub) return *a - *b;
            return *a * *b;
        }
        case Op::div: {
            auto a = poly_node(n.args[0]), b = poly_node(n.args[1]);
            if (!a || !b) return std::nullopt;
            if (b->is_zero()) return std::nullopt;
            for (std::size_t v = 0; v < nv; ++v)
                if (b->degree(v) != 0) return std::nullopt;
            Rational d = b->terms().begin()->second;
            return a->scaled(1 / d);
        }
        case Op::pow: {
            auto a = poly_node(n.args[0]), b = poly_node(n.args[1]);
            if (!a || !b) return std::nullopt;
            for (std::size_t v = 0; v < nv; ++v)
                if (b->degree(v) != 0) return std::nullopt;
            Rational e = b->is_zero() ? Rational(0) : b->terms().begin()->second;
            if (boost::multiprecision::denominator(e) != 1 || e < 0 || e > 64) return std::nullopt;
            return a->pow(static_cast<unsigned>(e.convert_to<long>()));
        }
        default: return std::nullopt;
    }
}

// ----- printing ------------------------------------------------------------

std::string Expression::to_string() const { return empty() ? std::string() : print_node(root_); }

std::string Expression::print_node(int idx) const {
    const Node& n = nodes_[static_cast<std::size_t>(idx)];
    auto wrap = [&](int child, bool paren) {
        std::string s = print_node(child);
        return paren ? "(" + s + ")" : s;
    };
    auto prec_of = [&](int child) { return precedence(nodes_[static_cast<std::size_t>(child)].op); };
    switch (n.op) {
        case Op::literal: return n.text;
        case Op::variable: return variables_[n.var];
        case Op::pi: return "pi";
        case Op::neg: return "-" + wrap(n.args[0], prec_of(n.args[0]) < 3);
        case Op::add:
        case Op::sub:
        case Op::mul:
        case Op::div: {
            int p = precedence(n.op);
            const char* sym = n.op == Op::add ? " + " : n.op == Op::sub ? " - " : n.op == Op::mul ? "*" : "/";
            return wrap(n.args[0], prec_of(n.args[0]) < p) + sym + wrap(n.args[1], prec_of(n.args[1]) <= p);
        }
        case Op::pow: return wrap(n.args[0], prec_of(n.args[0]) < 5) + "^" + wrap(n.args[1], prec_of(n.args[1]) < 3);
        case Op::call: {
            std::string s = n.text + "(";
            for (std::size_t k = 0; k < n.args.size(); ++k) {
                if (k) s += ", ";
                s += print_node(n.args[k]);
            }
            return s + ")";
        }
        case Op::piecewise: {
            std::string s = "piecewise(";
            for (std::size_t k = 0; k < n.branches.size(); ++k) {
                const auto& b = n.branches[k];
                if (k) s += "; ";
                s += variables_[n.var] + " in " + (b.lo.closed ? "[" : "(") + print_node(b.lo.node) + ", " +
                     (b.hi.infinite ? std::string("inf") : print_node(b.hi.node)) + (b.hi.closed ? "]" : ")") +
                     ": " + print_node(b.body);
            }
            return s + ")";
        }
    }
    return {};
}

std::vector<double> Expression::breakpoints(std::size_t var) const {
    std::vector<double> out;
    for (const auto& n : nodes_) {
        if (n.op != Op::piecewise || n.var != var) continue;
        for (const auto& b : n.branches) {
            out.push_back(b.lo.value.value);
            if (!b.hi.infinite) out.push_back(b.hi.value.value);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool Expression::uses(std::size_t var) const {
    return std::any_of(nodes_.begin(), nodes_.end(), [&](const Node& n) {
        return (n.op == Op::variable || n.op == Op::piecewise) && n.var == var;
    });
}

bool Expression::equal_node(int a, const Expression& other, int b) const {
    const Node& x = nodes_[static_cast<std::size_t>(a)];
    const Node& y = other.nodes_[static_cast<std::size_t>(b)];
    if (x.op != y.op || x.args.size() != y.args.size() || x.branches.size() != y.branches.size()) return false;
    switch (x.op) {
        case Op::literal:
            if (x.exact != y.exact || x.text != y.text) return false;
            break;
        case Op::variable:
            if (variables_[x.var] != other.variables_[y.var]) return false;
            break;
        case Op::call:
            if (x.text != y.text) return false;
            break;
        case Op::piecewise:
            if (variables_[x.var] != other.variables_[y.var]) return false;
            for (std::size_t k = 0; k < x.branches.size(); ++k) {
                const auto& p = x.branches[k];
                const auto& q = y.branches[k];
                if (p.lo.closed != q.lo.closed || p.hi.closed != q.hi.closed || p.hi.infinite != q.hi.infinite)
                    return false;
                if (!equal_node(p.lo.node, other, q.lo.node)) return false;
                if (!p.hi.infinite && !equal_node(p.hi.node, other, q.hi.node)) return false;
                if (!equal_node(p.body, other, q.body)) return false;
            }
            break;
        default: break;
    }
    for (std::size_t k = 0; k < x.args.size(); ++k)
        if (!equal_node(x.args[k], other, y.args[k])) return false;
    return true;
}

bool operator==(const Expression& a, const Expression& b) {
    if (a.empty() || b.empty()) return a.empty() && b.empty();
    return a.equal_node(a.root_, b, b.root_);
}

}  // namespace conekit
