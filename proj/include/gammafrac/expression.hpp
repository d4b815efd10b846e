#pragma once

// Small arithmetic expression language for scenario files.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := atom ('^' unary)?
//   atom    := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// Variables are x and y; constants pi and e. Functions: step (1 for arguments >= 0, else 0),
// min, max, sqrt, abs, sin, cos, exp, log, tanh.

#include "gammafrac/types.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace gammafrac {

class Expression {
public:
    Expression() : fn_([](double, double) { return 0.0; }), text_("0") {}

    static Expression parse(const std::string& text) {
        Parser p{text, 0};
        auto fn = p.expr();
        p.skip_ws();
        if (p.pos != text.size()) p.fail("unexpected trailing input");
        Expression e;
        e.fn_ = std::move(fn);
        e.text_ = text;
        return e;
    }

    static Expression constant(double c) {
        Expression e;
        e.fn_ = [c](double, double) { return c; };
        e.text_ = std::to_string(c);
        return e;
    }

    double operator()(double x, double y) const { return fn_(x, y); }
    double operator()(const Point& p) const { return fn_(p.x, p.y); }
    const std::string& text() const { return text_; }

private:
    using Fn = std::function<double(double, double)>;

    struct Parser {
        const std::string& s;
        std::size_t pos;

        [[noreturn]] void fail(const std::string& msg) const {
            throw Error(ErrorKind::Config, "expression '" + s + "': " + msg + " at offset " + std::to_string(pos));
        }

        void skip_ws() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }

        bool eat(char c) {
            skip_ws();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        Fn expr() {
            Fn lhs = term();
            for (;;) {
                if (eat('+')) {
                    Fn rhs = term();
                    lhs = [lhs, rhs](double x, double y) { return lhs(x, y) + rhs(x, y); };
                } else if (eat('-')) {
                    Fn rhs = term();
                    lhs = [lhs, rhs](double x, double y) { return lhs(x, y) - rhs(x, y); };
                } else {
                    return lhs;
                }
            }
        }

        Fn term() {
            Fn lhs = unary();
            for (;;) {
                if (eat('*')) {
                    Fn rhs = unary();
                    lhs = [lhs, rhs](double x, double y) { return lhs(x, y) * rhs(x, y); };
                } else if (eat('/')) {
                    Fn rhs = unary();
                    lhs = [lhs, rhs](double x, double y) { return lhs(x, y) / rhs(x, y); };
                } else {
                    return lhs;
                }
            }
        }

        Fn unary() {
            if (eat('-')) {
                Fn a = unary();
                return [a](double x, double y) { return -a(x, y); };
            }
            if (eat('+')) return unary();
            return power();
        }

        Fn power() {
            Fn base = atom();
            if (eat('^')) {
                Fn ex = unary();
                return [base, ex](double x, double y) { return std::pow(base(x, y), ex(x, y)); };
            }
            return base;
        }

        Fn atom() {
            skip_ws();
            if (pos >= s.size()) fail("unexpected end of input");
            if (eat('(')) {
                Fn inner = expr();
                if (!eat(')')) fail("expected ')'");
                return inner;
            }
            const char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
            fail(std::string("unexpected character '") + c + "'");
        }

        Fn number() {
            const char* begin = s.c_str() + pos;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("bad number");
            pos += static_cast<std::size_t>(end - begin);
            return [v](double, double) { return v; };
        }

        Fn name() {
            const std::size_t start = pos;
            while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
            const std::string id = s.substr(start, pos - start);
            if (eat('(')) {
                std::vector<Fn> args;
                if (!eat(')')) {
                    do {
                        args.push_back(expr());
                    } while (eat(','));
                    if (!eat(')')) fail("expected ')' after arguments");
                }
                return call(id, std::move(args));
            }
            if (id == "x") return [](double x, double) { return x; };
            if (id == "y") return [](double, double y) { return y; };
            if (id == "pi") return [](double, double) { return std::numbers::pi; };
            if (id == "e") return [](double, double) { return std::numbers::e; };
            fail("unknown identifier '" + id + "'");
        }

        Fn call(const std::string& id, std::vector<Fn> a) {
            auto arity = [&](std::size_t n) {
                if (a.size() != n) fail(id + " expects " + std::to_string(n) + " argument(s)");
            };
            auto unary_fn = [&](double (*f)(double)) -> Fn {
                arity(1);
                Fn g = a[0];
                return [f, g](double x, double y) { return f(g(x, y)); };
            };
            if (id == "step") {
                arity(1);
                Fn g = a[0];
                return [g](double x, double y) { return g(x, y) >= 0.0 ? 1.0 : 0.0; };
            }
            if (id == "min" || id == "max") {
                if (a.size() < 2) fail(id + " expects at least 2 arguments");
                const bool is_min = id == "min";
                return [a, is_min](double x, double y) {
                    double r = a[0](x, y);
                    for (std::size_t i = 1; i < a.size(); ++i) {
                        const double v = a[i](x, y);
                        r = is_min ? std::min(r, v) : std::max(r, v);
                    }
                    return r;
                };
            }
            if (id == "sqrt") return unary_fn([](double v) { return std::sqrt(v); });
            if (id == "abs") return unary_fn([](double v) { return std::abs(v); });
            if (id == "sin") return unary_fn([](double v) { return std::sin(v); });
            if (id == "cos") return unary_fn([](double v) { return std::cos(v); });
            if (id == "exp") return unary_fn([](double v) { return std::exp(v); });
            if (id == "log") return unary_fn([](double v) { return std::log(v); });
            if (id == "tanh") return unary_fn([](double v) { return std::tanh(v); });
            fail("unknown function '" + id + "'");
        }
    };

    Fn fn_;
    std::string text_;
};

}  // namespace gammafrac
