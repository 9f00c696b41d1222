#include "rfilter/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

namespace rfilter {

enum class Op { constant, variable, neg, add, sub, mul, div, pow, func };
enum class Fn { tanh, exp, log, sin, cos, sqrt, atan, sinh, cosh };

struct Expression::Node {
    Op op;
    double value = 0.0;
    std::size_t var = 0;
    Fn fn = Fn::exp;
    std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make_const(double v) {
    auto n = std::make_shared<Expression::Node>();
    n->op = Op::constant;
    n->value = v;
    return n;
}

NodePtr make_var(std::size_t i) {
    auto n = std::make_shared<Expression::Node>();
    n->op = Op::variable;
    n->var = i;
    return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::constant && n->value == v; }

double eval_fn(Fn fn, double x) {
    switch (fn) {
    case Fn::tanh: return std::tanh(x);
    case Fn::exp: return std::exp(x);
    case Fn::log: return std::log(x);
    case Fn::sin: return std::sin(x);
    case Fn::cos: return std::cos(x);
    case Fn::sqrt: return std::sqrt(x);
    case Fn::atan: return std::atan(x);
    case Fn::sinh: return std::sinh(x);
    case Fn::cosh: return std::cosh(x);
    }
    return 0.0;
}

double eval_node(const Expression::Node& n, std::span<const double> v) {
    switch (n.op) {
    case Op::constant: return n.value;
    case Op::variable: return v[n.var];
    case Op::neg: return -eval_node(*n.a, v);
    case Op::add: return eval_node(*n.a, v) + eval_node(*n.b, v);
    case Op::sub: return eval_node(*n.a, v) - eval_node(*n.b, v);
    case Op::mul: return eval_node(*n.a, v) * eval_node(*n.b, v);
    case Op::div: return eval_node(*n.a, v) / eval_node(*n.b, v);
    case Op::pow: {
        const double base = eval_node(*n.a, v);
        if (n.b->op == Op::constant && n.b->value == 2.0) return base * base;
        return std::pow(base, eval_node(*n.b, v));
    }
    case Op::func: return eval_fn(n.fn, eval_node(*n.a, v));
    }
    return 0.0;
}

NodePtr make_unary(Op op, NodePtr a) {
    if (op == Op::neg && a->op == Op::constant) return make_const(-a->value);
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->a = std::move(a);
    return n;
}

NodePtr make_binary(Op op, NodePtr a, NodePtr b) {
    if (a->op == Op::constant && b->op == Op::constant) {
        Expression::Node tmp{op, 0.0, 0, Fn::exp, a, b};
        return make_const(eval_node(tmp, {}));
    }
    switch (op) {
    case Op::add:
        if (is_const(a, 0.0)) return b;
        if (is_const(b, 0.0)) return a;
        break;
    case Op::sub:
        if (is_const(b, 0.0)) return a;
        if (is_const(a, 0.0)) return make_unary(Op::neg, b);
        break;
    case Op::mul:
        if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
        if (is_const(a, 1.0)) return b;
        if (is_const(b, 1.0)) return a;
        break;
    case Op::div:
        if (is_const(a, 0.0)) return make_const(0.0);
        if (is_const(b, 1.0)) return a;
        break;
    case Op::pow:
        if (is_const(b, 1.0)) return a;
        if (is_const(b, 0.0)) return make_const(1.0);
        break;
    default: break;
    }
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr make_fn(Fn fn, NodePtr a) {
    if (a->op == Op::constant) return make_const(eval_fn(fn, a->value));
    auto n = std::make_shared<Expression::Node>();
    n->op = Op::func;
    n->fn = fn;
    n->a = std::move(a);
    return n;
}

NodePtr diff(const NodePtr& n, std::size_t var) {
    switch (n->op) {
    case Op::constant: return make_const(0.0);
    case Op::variable: return make_const(n->var == var ? 1.0 : 0.0);
    case Op::neg: return make_unary(Op::neg, diff(n->a, var));
    case Op::add: return make_binary(Op::add, diff(n->a, var), diff(n->b, var));
    case Op::sub: return make_binary(Op::sub, diff(n->a, var), diff(n->b, var));
    case Op::mul:
        return make_binary(Op::add, make_binary(Op::mul, diff(n->a, var), n->b),
                           make_binary(Op::mul, n->a, diff(n->b, var)));
    case Op::div: {
        const NodePtr num = make_binary(Op::sub, make_binary(Op::mul, diff(n->a, var), n->b),
                                        make_binary(Op::mul, n->a, diff(n->b, var)));
        return make_binary(Op::div, num, make_binary(Op::mul, n->b, n->b));
    }
    case Op::pow: {
        const NodePtr da = diff(n->a, var);
        if (n->b->op == Op::constant) {
            const double c = n->b->value;
            return make_binary(Op::mul, make_binary(Op::mul, make_const(c), make_binary(Op::pow, n->a, make_const(c - 1.0))),
                               da);
        }
        // d(u^v) = u^v (v' log u + v u' / u)
        const NodePtr inner = make_binary(Op::add, make_binary(Op::mul, diff(n->b, var), make_fn(Fn::log, n->a)),
                                          make_binary(Op::div, make_binary(Op::mul, n->b, da), n->a));
        return make_binary(Op::mul, n, inner);
    }
    case Op::func: {
        const NodePtr u = n->a;
        const NodePtr du = diff(u, var);
        if (is_const(du, 0.0)) return make_const(0.0);
        NodePtr outer;
        switch (n->fn) {
        case Fn::tanh: outer = make_binary(Op::sub, make_const(1.0), make_binary(Op::mul, n, n)); break;
        case Fn::exp: outer = n; break;
        case Fn::log: outer = make_binary(Op::div, make_const(1.0), u); break;
        case Fn::sin: outer = make_fn(Fn::cos, u); break;
        case Fn::cos: outer = make_unary(Op::neg, make_fn(Fn::sin, u)); break;
        case Fn::sqrt: outer = make_binary(Op::div, make_const(0.5), n); break;
        case Fn::atan:
            outer = make_binary(Op::div, make_const(1.0), make_binary(Op::add, make_const(1.0), make_binary(Op::mul, u, u)));
            break;
        case Fn::sinh: outer = make_fn(Fn::cosh, u); break;
        case Fn::cosh: outer = make_fn(Fn::sinh, u); break;
        }
        return make_binary(Op::mul, outer, du);
    }
    }
    return make_const(0.0);
}

const char* fn_name(Fn fn) {
    switch (fn) {
    case Fn::tanh: return "tanh";
    case Fn::exp: return "exp";
    case Fn::log: return "log";
    case Fn::sin: return "sin";
    case Fn::cos: return "cos";
    case Fn::sqrt: return "sqrt";
    case Fn::atan: return "atan";
    case Fn::sinh: return "sinh";
    case Fn::cosh: return "cosh";
    }
    return "?";
}

void print(const Expression::Node& n, std::ostream& out) {
    switch (n.op) {
    case Op::constant: out << n.value; return;
    case Op::variable: out << "v" << n.var; return;
    case Op::neg: out << "(-"; print(*n.a, out); out << ")"; return;
    case Op::func: out << fn_name(n.fn) << "("; print(*n.a, out); out << ")"; return;
    default: break;
    }
    const char* sym = n.op == Op::add ? "+" : n.op == Op::sub ? "-" : n.op == Op::mul ? "*" : n.op == Op::div ? "/" : "^";
    out << "(";
    print(*n.a, out);
    out << sym;
    print(*n.b, out);
    out << ")";
}

class Parser {
public:
    Parser(const std::string& text, const std::vector<std::string>& vars,
           const std::vector<std::pair<std::string, std::size_t>>& aliases)
        : s_(text), vars_(vars), aliases_(aliases) {}

    NodePtr parse() {
        NodePtr n = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("expression '" + s_ + "': " + msg + " at position " + std::to_string(pos_));
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        NodePtr n = term();
        for (;;) {
            if (accept('+')) n = make_binary(Op::add, n, term());
            else if (accept('-')) n = make_binary(Op::sub, n, term());
            else return n;
        }
    }

    NodePtr term() {
        NodePtr n = unary();
        for (;;) {
            if (accept('*')) n = make_binary(Op::mul, n, unary());
            else if (accept('/')) n = make_binary(Op::div, n, unary());
            else return n;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make_unary(Op::neg, unary());
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return make_binary(Op::pow, base, unary());
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr n = expr();
            if (!accept(')')) fail("missing ')'");
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("bad number");
            pos_ += static_cast<std::size_t>(end - begin);
            return make_const(v);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            const std::string name = s_.substr(start, pos_ - start);
            skip();
            if (pos_ < s_.size() && s_[pos_] == '(') {
                ++pos_;
                const Fn fn = function(name);
                NodePtr arg = expr();
                if (!accept(')')) fail("missing ')' after function argument");
                return make_fn(fn, arg);
            }
            if (name == "pi") return make_const(std::numbers::pi);
            for (std::size_t i = 0; i < vars_.size(); ++i)
                if (vars_[i] == name) return make_var(i);
            for (const auto& [alias, slot] : aliases_)
                if (alias == name) return make_var(slot);
            pos_ = start;
            fail("unknown variable '" + name + "'");
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    Fn function(const std::string& name) {
        static const std::pair<const char*, Fn> table[] = {
            {"tanh", Fn::tanh}, {"exp", Fn::exp},   {"log", Fn::log},   {"sin", Fn::sin},  {"cos", Fn::cos},
            {"sqrt", Fn::sqrt}, {"atan", Fn::atan}, {"sinh", Fn::sinh}, {"cosh", Fn::cosh}};
        for (const auto& [n, f] : table)
            if (name == n) return f;
        fail("unknown function '" + name + "'");
    }

    const std::string& s_;
    const std::vector<std::string>& vars_;
    const std::vector<std::pair<std::string, std::size_t>>& aliases_;
    std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, const std::vector<std::string>& variables,
                             const std::vector<std::pair<std::string, std::size_t>>& aliases) {
    return Expression(Parser(text, variables, aliases).parse());
}

Expression Expression::constant(double v) { return Expression(make_const(v)); }

double Expression::eval(std::span<const double> vars) const { return eval_node(*root_, vars); }

Expression Expression::derivative(std::size_t var) const { return Expression(diff(root_, var)); }

bool Expression::is_constant() const { return root_->op == Op::constant; }

std::string Expression::str() const {
    std::ostringstream out;
    out.precision(17);
    print(*root_, out);
    return out.str();
}

Field expression_field(const std::vector<Expression>& components, std::size_t in_dim) {
    std::vector<Expression> jac;
    jac.reserve(components.size() * in_dim);
    for (const auto& c : components)
        for (std::size_t j = 0; j < in_dim; ++j) jac.push_back(c.derivative(j));
    return Field(
        in_dim, components.size(),
        [components](std::span<const double> x, std::span<double> out) {
            for (std::size_t i = 0; i < components.size(); ++i) out[i] = components[i].eval(x);
        },
        [jac](std::span<const double> x, std::span<double> out) {
            for (std::size_t i = 0; i < jac.size(); ++i) out[i] = jac[i].eval(x);
        });
}

}  // namespace rfilter
