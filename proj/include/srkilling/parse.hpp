#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "srkilling/error.hpp"
#include "srkilling/expr.hpp"

namespace srk {

namespace detail {

//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := ("-")? atom ("^" integer)?
//   atom   := number | ident | ident "(" expr ")" | "(" expr ")" | "pow" "(" expr "," rational ")"
class Parser {
  public:
    Parser(std::string_view text, const std::vector<std::string>& vars) : s_(text), vars_(vars) {}

    Expr run() {
        Expr e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

  private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!eat(c)) {
            if (pos_ >= s_.size()) fail(std::string("expected '") + c + "' but input ended");
            fail(std::string("expected '") + c + "'");
        }
    }

    Expr expr() {
        std::vector<Expr> terms{term()};
        while (true) {
            if (eat('+'))
                terms.push_back(term());
            else if (eat('-'))
                terms.push_back(-term());
            else
                break;
        }
        return add(std::move(terms));
    }

    Expr term() {
        Expr acc = factor();
        while (true) {
            if (eat('*')) {
                acc = acc * factor();
            } else if (eat('/')) {
                skip();
                if (pos_ >= s_.size()) fail("division with empty denominator");
                std::size_t at = pos_;
                Expr d = factor();
                if (d.is_zero()) throw ParseError("division by literal zero", at);
                acc = acc / d;
            } else {
                break;
            }
        }
        return acc;
    }

    Expr factor() {
        bool negate = eat('-');
        Expr a = atom();
        if (eat('^')) {
            skip();
            bool neg = eat('-');
            skip();
            std::int64_t k = integer();
            a = pow(a, Rational(neg ? -k : k));
        }
        return negate ? -a : a;
    }

    std::int64_t integer() {
        skip();
        std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (start == pos_) fail("expected integer");
        std::string digits(s_.substr(start, pos_ - start));
        if (digits.size() > 18) throw ParseError("integer literal too large", start);
        return std::stoll(digits);
    }

    Rational number() {
        std::int64_t whole = integer();
        Rational r(whole);
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            std::string frac(s_.substr(start, pos_ - start));
            if (frac.empty()) fail("expected digits after '.'");
            if (frac.size() > 18) throw ParseError("decimal literal too long", start);
            r = r + Rational(std::stoll(frac), Rational(10).pow(static_cast<std::int64_t>(frac.size())).num());
        }
        return r;
    }

    Rational rational() {
        skip();
        bool neg = eat('-');
        Rational r = number();
        if (eat('/')) {
            std::size_t at = pos_;
            std::int64_t d = integer();
            if (d == 0) throw ParseError("zero denominator in exponent", at);
            r = r / Rational(d);
        }
        return neg ? -r : r;
    }

    std::string ident() {
        std::size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            ++pos_;
        return std::string(s_.substr(start, pos_ - start));
    }

    Expr atom() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c))) return Expr(number());
        if (c == '(') {
            ++pos_;
            Expr e = expr();
            expect(')');
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            std::string id = ident();
            skip();
            bool call = pos_ < s_.size() && s_[pos_] == '(';
            if (call && (id == "sin" || id == "cos" || id == "exp")) {
                ++pos_;
                Expr arg = expr();
                expect(')');
                if (id == "sin") return sin(arg);
                if (id == "cos") return cos(arg);
                return exp(arg);
            }
            if (call && id == "pow") {
                ++pos_;
                Expr base = expr();
                expect(',');
                Rational r = rational();
                expect(')');
                return pow(base, r);
            }
            for (std::size_t i = 0; i < vars_.size(); ++i)
                if (vars_[i] == id) return variable(static_cast<int>(i), id);
            throw ParseError("unknown identifier `" + id + "`", start);
        }
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    std::string_view s_;
    const std::vector<std::string>& vars_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Parses `text` over the declared variables; variable i gets index i.
inline Expr parse_expression(std::string_view text, const std::vector<std::string>& vars) {
    return detail::Parser(text, vars).run();
}

} // namespace srk
