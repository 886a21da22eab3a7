#include "neumann/expr.hpp"

#include "neumann/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

namespace neumann {

struct Expr::Node {
    enum class Kind { number, variable, negate, add, sub, mul, div, pow, call };
    enum class Var { x, y, r, theta, s };
    enum class Func { sin, cos, exp, log, abs, sqrt };

    Kind kind = Kind::number;
    double value = 0.0;
    Var var = Var::x;
    Func func = Func::sin;
    std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using Node = Expr::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make_number(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::number;
    n->value = v;
    return n;
}

NodePtr make_var(Node::Var v) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::variable;
    n->var = v;
    return n;
}

NodePtr make_unary(Node::Kind kind, NodePtr arg, Node::Func f = Node::Func::sin) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->func = f;
    n->lhs = std::move(arg);
    return n;
}

NodePtr make_binary(Node::Kind kind, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr parse() {
        skip();
        if (pos_ >= text_.size()) throw SyntaxError(pos_, "empty expression");
        NodePtr e = expr(0);
        skip();
        if (pos_ != text_.size()) throw SyntaxError(pos_, "unexpected character");
        return e;
    }

private:
    // Bounds recursion on adversarial input such as "((((((...".
    static constexpr int kMaxDepth = 200;

    void skip() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r')) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) throw SyntaxError(pos_, std::string("expected '") + c + "'");
    }

    void guard(int depth) {
        if (depth > kMaxDepth) throw SyntaxError(pos_, "expression nested too deeply");
    }

    NodePtr expr(int depth) {
        guard(depth);
        NodePtr lhs = term(depth + 1);
        for (;;) {
            if (accept('+')) {
                lhs = make_binary(Node::Kind::add, lhs, term(depth + 1));
            } else if (accept('-')) {
                lhs = make_binary(Node::Kind::sub, lhs, term(depth + 1));
            } else {
                return lhs;
            }
        }
    }

    NodePtr term(int depth) {
        guard(depth);
        NodePtr lhs = factor(depth + 1);
        for (;;) {
            if (accept('*')) {
                lhs = make_binary(Node::Kind::mul, lhs, factor(depth + 1));
            } else if (accept('/')) {
                lhs = make_binary(Node::Kind::div, lhs, factor(depth + 1));
            } else {
                return lhs;
            }
        }
    }

    NodePtr factor(int depth) {
        guard(depth);
        NodePtr b = base(depth + 1);
        if (accept('^')) return make_binary(Node::Kind::pow, b, factor(depth + 1));
        return b;
    }

    NodePtr base(int depth) {
        guard(depth);
        skip();
        if (pos_ >= text_.size()) throw SyntaxError(pos_, "unexpected end of expression");
        const char c = text_[pos_];
        if (c == '-') {
            ++pos_;
            return make_unary(Node::Kind::negate, factor(depth + 1));
        }
        if (c == '(') {
            ++pos_;
            NodePtr e = expr(depth + 1);
            expect(')');
            return e;
        }
        if ((c >= '0' && c <= '9') || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier(depth);
        throw SyntaxError(pos_, "unexpected character");
    }

    NodePtr number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t n = digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            n += digits();
        }
        if (n == 0) throw SyntaxError(start, "malformed number");
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            // exponent only when followed by digits; otherwise 'e' starts an
            // identifier and the missing operator is reported below
            std::size_t look = pos_ + 1;
            if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
            if (look < text_.size() && text_[look] >= '0' && text_[look] <= '9') {
                pos_ = look;
                digits();
            }
        }
        const std::string token(text_.substr(start, pos_ - start));
        char* end = nullptr;
        const double v = std::strtod(token.c_str(), &end);
        if (end != token.c_str() + token.size() || !std::isfinite(v)) {
            throw SyntaxError(start, "malformed number");
        }
        skip();
        if (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '(' || text_[pos_] == '_')) {
            throw SyntaxError(pos_, "implicit multiplication is not supported");
        }
        return make_number(v);
    }

    NodePtr identifier(int depth) {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
        }
        const std::string_view name = text_.substr(start, pos_ - start);
        static const std::pair<std::string_view, Node::Func> funcs[] = {
            {"sin", Node::Func::sin}, {"cos", Node::Func::cos}, {"exp", Node::Func::exp},
            {"log", Node::Func::log}, {"abs", Node::Func::abs}, {"sqrt", Node::Func::sqrt}};
        for (const auto& [fname, f] : funcs) {
            if (name == fname) {
                expect('(');
                NodePtr arg = expr(depth + 1);
                expect(')');
                return make_unary(Node::Kind::call, arg, f);
            }
        }
        if (name == "x") return make_var(Node::Var::x);
        if (name == "y") return make_var(Node::Var::y);
        if (name == "r") return make_var(Node::Var::r);
        if (name == "theta") return make_var(Node::Var::theta);
        if (name == "s") return make_var(Node::Var::s);
        if (name == "pi") return make_number(std::numbers::pi);
        if (name == "e") return make_number(std::numbers::e);
        throw UnknownIdentifier("unknown identifier '" + std::string(name) + "' at byte " +
                                std::to_string(start));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw DomainError(std::string("non-finite result in ") + what);
    return v;
}

double evaluate(const Node& n, const NodeCoords& at) {
    switch (n.kind) {
        case Node::Kind::number: return n.value;
        case Node::Kind::variable:
            switch (n.var) {
                case Node::Var::x: return at.x;
                case Node::Var::y: return at.y;
                case Node::Var::r: return at.r;
                case Node::Var::theta: return at.theta;
                case Node::Var::s: return at.s;
            }
            break;
        case Node::Kind::negate: return -evaluate(*n.lhs, at);
        case Node::Kind::add: return checked(evaluate(*n.lhs, at) + evaluate(*n.rhs, at), "addition");
        case Node::Kind::sub: return checked(evaluate(*n.lhs, at) - evaluate(*n.rhs, at), "subtraction");
        case Node::Kind::mul: return checked(evaluate(*n.lhs, at) * evaluate(*n.rhs, at), "multiplication");
        case Node::Kind::div: {
            const double num = evaluate(*n.lhs, at);
            const double den = evaluate(*n.rhs, at);
            if (den == 0.0) throw DomainError("division by zero");
            return checked(num / den, "division");
        }
        case Node::Kind::pow: return checked(std::pow(evaluate(*n.lhs, at), evaluate(*n.rhs, at)), "power");
        case Node::Kind::call: {
            const double a = evaluate(*n.lhs, at);
            switch (n.func) {
                case Node::Func::sin: return std::sin(a);
                case Node::Func::cos: return std::cos(a);
                case Node::Func::exp: return checked(std::exp(a), "exp");
                case Node::Func::abs: return std::abs(a);
                case Node::Func::log:
                    if (!(a > 0.0)) throw DomainError("log of non-positive argument");
                    return std::log(a);
                case Node::Func::sqrt:
                    if (a < 0.0) throw DomainError("sqrt of negative argument");
                    return std::sqrt(a);
            }
            break;
        }
    }
    throw DomainError("malformed expression tree");
}

void print(const Node& n, std::string& out) {
    switch (n.kind) {
        case Node::Kind::number: {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", n.value);
            out += buf;
            return;
        }
        case Node::Kind::variable: {
            static const char* names[] = {"x", "y", "r", "theta", "s"};
            out += names[static_cast<int>(n.var)];
            return;
        }
        case Node::Kind::negate:
            out += "(-";
            print(*n.lhs, out);
            out += ')';
            return;
        case Node::Kind::call: {
            static const char* names[] = {"sin", "cos", "exp", "log", "abs", "sqrt"};
            out += names[static_cast<int>(n.func)];
            out += '(';
            print(*n.lhs, out);
            out += ')';
            return;
        }
        default: break;
    }
    static const char ops[] = {'?', '?', '?', '+', '-', '*', '/', '^'};
    out += '(';
    print(*n.lhs, out);
    out += ops[static_cast<int>(n.kind)];
    print(*n.rhs, out);
    out += ')';
}

bool equal(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Node::Kind::number: return a.value == b.value;
        case Node::Kind::variable: return a.var == b.var;
        case Node::Kind::negate: return equal(*a.lhs, *b.lhs);
        case Node::Kind::call: return a.func == b.func && equal(*a.lhs, *b.lhs);
        default: return equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
    }
}

}  // namespace

Expr Expr::parse(std::string_view text) { return Expr(Parser(text).parse()); }

double Expr::eval(const NodeCoords& at) const { return evaluate(*root_, at); }

std::string Expr::print() const {
    std::string out;
    neumann::print(*root_, out);
    return out;
}

bool Expr::operator==(const Expr& other) const { return equal(*root_, *other.root_); }

GridFunction sample(MeshPtr mesh, const Expr& e) {
    return GridFunction::sample(std::move(mesh), [&](const NodeCoords& c) { return e.eval(c); });
}

BoundaryFunction sample_boundary(MeshPtr mesh, const Expr& e) {
    return BoundaryFunction::sample(std::move(mesh), [&](const NodeCoords& c) { return e.eval(c); });
}

}  // namespace neumann
