#pragma once

// Scalar expressions over chart coordinates x0..x{d-1}, parsed from text and
// evaluated as third-order jets.
//
// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' factor)?
//   base   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' factor

#include "rcurv/error.hpp"
#include "rcurv/jet.hpp"

#include <bit>
#include <cctype>
#include <cstdint>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace rcurv {

enum class Op {
    Const,
    Var,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    PowConst,
    Pow,
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Tanh,
    Bump,
};

struct ExprNode {
    Op op = Op::Const;
    double value = 0.0; // constant, or exponent for PowConst
    int var = -1;
    std::shared_ptr<const ExprNode> a;
    std::shared_ptr<const ExprNode> b;
};

using NodePtr = std::shared_ptr<const ExprNode>;

namespace detail {

struct FunctionInfo {
    std::string_view name;
    Op op;
};

inline constexpr FunctionInfo kFunctions[] = {
    {"sin", Op::Sin},   {"cos", Op::Cos},   {"tan", Op::Tan},   {"exp", Op::Exp},
    {"log", Op::Log},   {"sqrt", Op::Sqrt}, {"tanh", Op::Tanh}, {"bump", Op::Bump},
};

inline std::string_view function_name(Op op)
{
    for (const auto& f : kFunctions)
        if (f.op == op) return f.name;
    return "?";
}

inline std::string format_number(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline NodePtr make_node(Op op, NodePtr a = nullptr, NodePtr b = nullptr)
{
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline NodePtr make_const(double c)
{
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Const;
    n->value = c;
    return n;
}

inline NodePtr make_var(int i)
{
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Var;
    n->var = i;
    return n;
}

inline bool depends_on_vars(const ExprNode& n)
{
    if (n.op == Op::Var) return true;
    if (n.a && depends_on_vars(*n.a)) return true;
    if (n.b && depends_on_vars(*n.b)) return true;
    return false;
}

inline std::string node_to_string(const ExprNode& n)
{
    switch (n.op) {
    case Op::Const: {
        auto s = format_number(n.value);
        return n.value < 0 ? "(" + s + ")" : s;
    }
    case Op::Var: return "x" + std::to_string(n.var);
    case Op::Add: return "(" + node_to_string(*n.a) + "+" + node_to_string(*n.b) + ")";
    case Op::Sub: return "(" + node_to_string(*n.a) + "-" + node_to_string(*n.b) + ")";
    case Op::Mul: return "(" + node_to_string(*n.a) + "*" + node_to_string(*n.b) + ")";
    case Op::Div: return "(" + node_to_string(*n.a) + "/" + node_to_string(*n.b) + ")";
    case Op::Neg: return "(-" + node_to_string(*n.a) + ")";
    case Op::PowConst: {
        auto e = format_number(n.value);
        if (n.value < 0) e = "(" + e + ")";
        return "(" + node_to_string(*n.a) + "^" + e + ")";
    }
    case Op::Pow: return "(" + node_to_string(*n.a) + "^" + node_to_string(*n.b) + ")";
    default:
        return std::string(function_name(n.op)) + "(" + node_to_string(*n.a) + ")";
    }
}

// phi^(k)(u) for the primitive functions, k = 0..3.
struct Taylor4 {
    double f0, f1, f2, f3;
};

inline Taylor4 bump_taylor(double t)
{
    if (!(std::abs(t) < 1.0)) return {0, 0, 0, 0};
    const double u = 1.0 - t * t;
    const double psi = 1.0 - 1.0 / u;
    if (psi < -700.0) return {0, 0, 0, 0};
    // phi = exp(psi(t)), psi = 1 - 1/u, u = 1 - t^2, composed as 1-d jets.
    Jet tj = Jet::variable(1, 3, 0, t);
    Jet uj = -(tj * tj) + 1.0;
    const double r = 1.0 / u;
    Jet rj = compose(uj, r, -r * r, 2 * r * r * r, -6 * r * r * r * r);
    Jet pj = -rj + 1.0;
    const double e = std::exp(pj.v);
    Jet bj = compose(pj, e, e, e, e);
    return {bj.v, bj.d1[0], bj.d2[0][0], bj.d3[0][0][0]};
}

inline Taylor4 powconst_taylor(double u, double p, const ExprNode& n)
{
    const bool integral = std::floor(p) == p && std::abs(p) < 1e9;
    if (!integral && u < 0.0)
        throw DomainError("negative base with non-integer exponent in '" + node_to_string(n) + "'");
    double c[4];
    double coef = 1.0;
    for (int k = 0; k < 4; ++k) {
        const double e = p - k;
        if (coef == 0.0) {
            c[k] = 0.0;
        } else if (u == 0.0 && e < 0.0) {
            throw DomainError("power of zero with negative exponent in '" + node_to_string(n)
                              + "'");
        } else if (integral) {
            c[k] = coef * std::pow(u, static_cast<int>(e));
        } else {
            c[k] = coef * std::pow(u, e);
        }
        coef *= e;
    }
    return {c[0], c[1], c[2], c[3]};
}

} // namespace detail

struct ParseOptions {
    int dim = 1;
    std::map<std::string, double> params;
    /// Extra coordinate names, e.g. {"theta", 0}.
    std::map<std::string, int> coords;
};

namespace detail {

/// One step of a flattened expression; operands index earlier steps.
struct Instr {
    Op op = Op::Const;
    double value = 0.0;
    int var = -1;
    int a = -1;
    int b = -1;
    const ExprNode* src = nullptr;
};

/// Flattens the tree bottom-up, sharing structurally identical subtrees.
class Compiler {
public:
    std::vector<Instr> code;

    int add(const ExprNode& n)
    {
        Instr in;
        in.op = n.op;
        in.value = n.value;
        in.var = n.var;
        in.src = &n;
        if (n.a) in.a = add(*n.a);
        if (n.b) in.b = add(*n.b);
        const Key key{static_cast<int>(in.op), std::bit_cast<std::uint64_t>(in.value), in.var, in.a,
                      in.b};
        if (auto it = seen_.find(key); it != seen_.end()) return it->second;
        code.push_back(in);
        const int id = static_cast<int>(code.size()) - 1;
        seen_.emplace(key, id);
        return id;
    }

private:
    using Key = std::tuple<int, std::uint64_t, int, int, int>;
    std::map<Key, int> seen_;
};

} // namespace detail

/// Immutable scalar expression in `dim` chart coordinates.
class Expr {
public:
    Expr() = default;
    Expr(NodePtr root, int dim) : root_(std::move(root)), dim_(dim)
    {
        if (root_) {
            detail::Compiler c;
            c.add(*root_);
            code_ = std::make_shared<const std::vector<detail::Instr>>(std::move(c.code));
        }
    }

    static Expr constant(double c, int dim) { return Expr(detail::make_const(c), dim); }
    static Expr coordinate(int i, int dim) { return Expr(detail::make_var(i), dim); }

    int dim() const noexcept { return dim_; }
    const ExprNode& root() const { return *root_; }
    bool empty() const noexcept { return !root_; }
    std::string to_string() const { return root_ ? detail::node_to_string(*root_) : ""; }

    bool is_constant() const { return root_ && !detail::depends_on_vars(*root_); }

    /// Value and partials up to `order` at `p`; throws DomainError off-domain.
    Jet eval_jet(std::span<const double> p, int order = 3) const
    {
        thread_local std::vector<Jet> slots;
        const auto& code = *code_;
        if (slots.size() < code.size()) slots.resize(code.size());
        for (std::size_t i = 0; i < code.size(); ++i) slots[i] = step(code[i], slots, p, order);
        const Jet& j = slots[code.size() - 1];
        if (!j.finite())
            throw DomainError("non-finite jet in '" + to_string() + "'");
        return j;
    }

    double eval(std::span<const double> p) const { return eval_jet(p, 0).v; }

    friend Expr operator*(const Expr& a, const Expr& b)
    {
        return Expr(detail::make_node(Op::Mul, a.root_, b.root_), a.dim_);
    }
    friend Expr operator+(const Expr& a, const Expr& b)
    {
        return Expr(detail::make_node(Op::Add, a.root_, b.root_), a.dim_);
    }
    friend Expr operator-(const Expr& a, const Expr& b)
    {
        return Expr(detail::make_node(Op::Sub, a.root_, b.root_), a.dim_);
    }

private:
    Jet step(const detail::Instr& in, const std::vector<Jet>& s, std::span<const double> p,
             int order) const
    {
        using detail::node_to_string;
        const auto& code = *code_;
        const ExprNode& n = *in.src;
        const auto is_const = [&](int k) { return code[k].op == Op::Const; };
        switch (in.op) {
        case Op::Const: return Jet::constant(dim_, order, in.value);
        case Op::Var: return Jet::variable(dim_, order, in.var, p[in.var]);
        case Op::Add: return s[in.a] + s[in.b];
        case Op::Sub: return s[in.a] - s[in.b];
        case Op::Neg: return -s[in.a];
        case Op::Mul: {
            if (is_const(in.a)) return code[in.a].value * s[in.b];
            if (is_const(in.b)) return code[in.b].value * s[in.a];
            return s[in.a] * s[in.b];
        }
        case Op::Div: {
            const Jet& den = s[in.b];
            if (den.v == 0.0)
                throw DomainError("division by zero in '" + node_to_string(*n.b) + "'");
            const double r = 1.0 / den.v;
            Jet inv = compose(den, r, -r * r, 2 * r * r * r, -6 * r * r * r * r);
            if (is_const(in.a)) return code[in.a].value * inv;
            return s[in.a] * inv;
        }
        case Op::PowConst: {
            const Jet& u = s[in.a];
            auto t = detail::powconst_taylor(u.v, in.value, n);
            return compose(u, t.f0, t.f1, t.f2, t.f3);
        }
        case Op::Pow: {
            const Jet& base = s[in.a];
            if (base.v <= 0.0)
                throw DomainError("non-positive base of variable power in '"
                                  + node_to_string(n) + "'");
            const double r = 1.0 / base.v;
            Jet lg = compose(base, std::log(base.v), r, -r * r, 2 * r * r * r);
            Jet arg = s[in.b] * lg;
            const double e = std::exp(arg.v);
            return compose(arg, e, e, e, e);
        }
        default: break;
        }

        const Jet& u = s[in.a];
        const double x = u.v;
        switch (in.op) {
        case Op::Sin: {
            const double sn = std::sin(x), c = std::cos(x);
            return compose(u, sn, c, -sn, -c);
        }
        case Op::Cos: {
            const double sn = std::sin(x), c = std::cos(x);
            return compose(u, c, -sn, -c, sn);
        }
        case Op::Tan: {
            if (std::cos(x) == 0.0)
                throw DomainError("tan pole in '" + node_to_string(n) + "'");
            const double t = std::tan(x), q = 1 + t * t;
            return compose(u, t, q, 2 * t * q, q * (2 + 6 * t * t));
        }
        case Op::Exp: {
            const double e = std::exp(x);
            return compose(u, e, e, e, e);
        }
        case Op::Log: {
            if (x <= 0.0)
                throw DomainError("log of non-positive value in '" + node_to_string(n) + "'");
            const double r = 1.0 / x;
            return compose(u, std::log(x), r, -r * r, 2 * r * r * r);
        }
        case Op::Sqrt: {
            if (x < 0.0 || (x == 0.0 && order >= 1))
                throw DomainError("sqrt outside its domain in '" + node_to_string(n) + "'");
            const double q = std::sqrt(x);
            if (order == 0) return Jet::constant(dim_, 0, q);
            return compose(u, q, 0.5 / q, -0.25 / (q * x), 0.375 / (q * x * x));
        }
        case Op::Tanh: {
            const double t = std::tanh(x), q = 1 - t * t;
            return compose(u, t, q, -2 * t * q, q * (6 * t * t - 2));
        }
        case Op::Bump: {
            auto t = detail::bump_taylor(x);
            return compose(u, t.f0, t.f1, t.f2, t.f3);
        }
        default: throw Error("corrupt expression node");
        }
    }

    NodePtr root_;
    std::shared_ptr<const std::vector<detail::Instr>> code_;
    int dim_ = 1;
};

namespace detail {

class Parser {
public:
    Parser(std::string_view text, const ParseOptions& opts) : s_(text), opts_(opts) {}

    NodePtr parse()
    {
        skip_ws();
        if (pos_ >= s_.size()) throw ParseError("empty expression", pos_);
        NodePtr n = expr();
        skip_ws();
        if (pos_ < s_.size())
            throw ParseError(std::string("unexpected '") + s_[pos_] + "'", pos_);
        return n;
    }

private:
    void skip_ws()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) {
            if (pos_ >= s_.size())
                throw ParseError(std::string("expected '") + c + "' but reached end", pos_);
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
    }

    NodePtr expr()
    {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = make_node(Op::Add, lhs, term());
            else if (accept('-'))
                lhs = make_node(Op::Sub, lhs, term());
            else
                return lhs;
        }
    }

    NodePtr term()
    {
        NodePtr lhs = factor();
        for (;;) {
            if (accept('*'))
                lhs = make_node(Op::Mul, lhs, factor());
            else if (accept('/'))
                lhs = make_node(Op::Div, lhs, factor());
            else
                return lhs;
        }
    }

    NodePtr factor()
    {
        NodePtr b = base();
        if (!accept('^')) return b;
        const std::size_t at = pos_;
        NodePtr e = factor();
        if (!depends_on_vars(*e)) {
            double p = 0.0;
            try {
                p = Expr(e, opts_.dim).eval(std::vector<double>(opts_.dim, 0.0));
            } catch (const DomainError& err) {
                throw ParseError(std::string("invalid constant exponent: ") + err.what(), at);
            }
            auto n = std::make_shared<ExprNode>();
            n->op = Op::PowConst;
            n->value = p;
            n->a = b;
            return n;
        }
        return make_node(Op::Pow, b, e);
    }

    NodePtr base()
    {
        skip_ws();
        if (pos_ >= s_.size()) throw ParseError("unexpected end of expression", pos_);
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr n = expr();
            expect(')');
            return n;
        }
        if (c == '-') {
            ++pos_;
            return make_node(Op::Neg, factor());
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }

    NodePtr number()
    {
        const std::size_t start = pos_;
        std::string buf(s_.substr(pos_));
        char* end = nullptr;
        const double v = std::strtod(buf.c_str(), &end);
        const std::size_t used = static_cast<std::size_t>(end - buf.c_str());
        if (used == 0) throw ParseError("malformed number", start);
        pos_ += used;
        return make_const(v);
    }

    NodePtr identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < s_.size()
               && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            ++pos_;
        const std::string name(s_.substr(start, pos_ - start));
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == '(') {
            const FunctionInfo* fn = nullptr;
            for (const auto& f : kFunctions)
                if (f.name == name) fn = &f;
            if (!fn) throw ParseError("unknown function '" + name + "'", start);
            ++pos_;
            std::vector<NodePtr> args;
            skip_ws();
            if (pos_ < s_.size() && s_[pos_] != ')') {
                args.push_back(expr());
                while (accept(',')) args.push_back(expr());
            }
            expect(')');
            if (args.size() != 1)
                throw ParseError("function '" + name + "' takes 1 argument, got "
                                     + std::to_string(args.size()),
                                 start);
            return make_node(fn->op, args[0]);
        }
        if (auto it = opts_.coords.find(name); it != opts_.coords.end()) {
            if (it->second < 0 || it->second >= opts_.dim)
                throw ParseError("coordinate '" + name + "' out of range", start);
            return make_var(it->second);
        }
        if (name.size() == 2 && name[0] == 'x' && std::isdigit(static_cast<unsigned char>(name[1]))) {
            const int i = name[1] - '0';
            if (i >= opts_.dim)
                throw ParseError("unknown identifier '" + name + "' (dimension "
                                     + std::to_string(opts_.dim) + ")",
                                 start);
            return make_var(i);
        }
        if (auto it = opts_.params.find(name); it != opts_.params.end())
            return make_const(it->second);
        if (name == "pi") return make_const(std::numbers::pi);
        for (const auto& f : kFunctions)
            if (f.name == name)
                throw ParseError("function '" + name + "' takes 1 argument, got 0", start);
        throw ParseError("unknown identifier '" + name + "'", start);
    }

    std::string_view s_;
    const ParseOptions& opts_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline Expr parse_expr(std::string_view text, const ParseOptions& opts)
{
    if (opts.dim < 1 || opts.dim > kMaxDim)
        throw Error("expression dimension must be in 1.." + std::to_string(kMaxDim));
    detail::Parser p(text, opts);
    return Expr(p.parse(), opts.dim);
}

inline Expr parse_expr(std::string_view text, int dim,
                       const std::map<std::string, double>& params = {})
{
    ParseOptions opts;
    opts.dim = dim;
    opts.params = params;
    return parse_expr(text, opts);
}

} // namespace rcurv
