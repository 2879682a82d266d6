#include "dncalc/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

namespace dncalc {

struct Expression::Node {
    enum class Kind { number, variable, unary, binary, call } kind;
    cplx value{};
    int variable = 0;
    char op = 0;
    std::string name;
    std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make_number(cplx v) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = Kind::number;
    n->value = v;
    return n;
}

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse() {
        auto n = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

private:
    const std::string& s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw InvalidArgument("expression '" + s_ + "' column " + std::to_string(pos_ + 1) +
                              ": " + msg);
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

    NodePtr binary(char op, NodePtr a, NodePtr b) {
        auto n = std::make_shared<Expression::Node>();
        n->kind = Kind::binary;
        n->op = op;
        n->args = {std::move(a), std::move(b)};
        return n;
    }

    NodePtr expr() {
        auto lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = binary('+', lhs, term());
            else if (accept('-'))
                lhs = binary('-', lhs, term());
            else
                return lhs;
        }
    }

    NodePtr term() {
        auto lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = binary('*', lhs, unary());
            else if (accept('/'))
                lhs = binary('/', lhs, unary());
            else
                return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) {
            auto n = std::make_shared<Expression::Node>();
            n->kind = Kind::unary;
            n->op = '-';
            n->args = {unary()};
            return n;
        }
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        auto base = primary();
        if (accept('^')) return binary('^', base, unary());
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of expression");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            auto n = expr();
            if (!accept(')')) fail("expected ')'");
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            if (end == begin) fail("bad number");
            pos_ += static_cast<std::size_t>(end - begin);
            return make_number(v);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                ++pos_;
            std::string id = s_.substr(start, pos_ - start);
            if (accept('(')) {
                static const char* known[] = {"sin",  "cos",  "tan",  "exp", "log",  "sqrt",
                                              "sinh", "cosh", "tanh", "abs", "conj", "re", "im"};
                bool ok = false;
                for (auto* k : known) ok = ok || id == k;
                if (!ok) {
                    pos_ = start;
                    fail("unknown function '" + id + "'");
                }
                auto n = std::make_shared<Expression::Node>();
                n->kind = Kind::call;
                n->name = id;
                n->args = {expr()};
                if (!accept(')')) fail("expected ')'");
                return n;
            }
            if (id == "i") return make_number(cplx(0.0, 1.0));
            if (id == "pi") return make_number(pi);
            if (id == "e") return make_number(std::numbers::e);
            int var = -1;
            if (id == "x" || id == "x1") var = 0;
            if (id == "y" || id == "x2") var = 1;
            if (var < 0) {
                pos_ = start;
                fail("unknown identifier '" + id + "'");
            }
            auto n = std::make_shared<Expression::Node>();
            n->kind = Kind::variable;
            n->variable = var;
            return n;
        }
        fail("unexpected character '" + std::string(1, c) + "'");
    }
};

cplx eval(const Expression::Node& n, const std::array<double, 2>& x) {
    switch (n.kind) {
        case Kind::number:
            return n.value;
        case Kind::variable:
            return x[n.variable];
        case Kind::unary:
            return -eval(*n.args[0], x);
        case Kind::binary: {
            cplx a = eval(*n.args[0], x);
            cplx b = eval(*n.args[1], x);
            switch (n.op) {
                case '+': return a + b;
                case '-': return a - b;
                case '*': return a * b;
                case '/': return a / b;
                default: {
                    // keep integer powers of real bases exact
                    if (b.imag() == 0.0 && b.real() == std::round(b.real()) &&
                        std::abs(b.real()) <= 64) {
                        int k = static_cast<int>(b.real());
                        cplx r = 1.0;
                        for (int j = 0; j < std::abs(k); ++j) r *= a;
                        return k < 0 ? 1.0 / r : r;
                    }
                    return std::pow(a, b);
                }
            }
        }
        case Kind::call: {
            cplx a = eval(*n.args[0], x);
            const auto& f = n.name;
            if (f == "sin") return std::sin(a);
            if (f == "cos") return std::cos(a);
            if (f == "tan") return std::tan(a);
            if (f == "exp") return std::exp(a);
            if (f == "log") return std::log(a);
            if (f == "sqrt") return std::sqrt(a);
            if (f == "sinh") return std::sinh(a);
            if (f == "cosh") return std::cosh(a);
            if (f == "tanh") return std::tanh(a);
            if (f == "abs") return std::abs(a);
            if (f == "conj") return std::conj(a);
            if (f == "re") return a.real();
            return a.imag();
        }
    }
    return 0.0;
}

}  // namespace

Expression Expression::parse(const std::string& text) {
    Expression e;
    e.text_ = text;
    e.root_ = Parser(text).parse();
    return e;
}

cplx Expression::evaluate(const std::array<double, 2>& x) const { return eval(*root_, x); }

}  // namespace dncalc
