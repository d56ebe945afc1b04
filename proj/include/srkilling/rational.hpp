#pragma once

#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>

#include "srkilling/error.hpp"

namespace srk {

/// Exact rational number with 64-bit numerator and denominator.
///
/// Always stored reduced with a positive denominator. Every operation that
/// would leave the int64 range throws OverflowError.
class Rational {
  public:
    constexpr Rational() = default;
    constexpr Rational(std::int64_t n) : num_(n) {} // NOLINT(implicit)
    Rational(std::int64_t n, std::int64_t d) { assign(n, d); }

    std::int64_t num() const noexcept { return num_; }
    std::int64_t den() const noexcept { return den_; }

    bool is_zero() const noexcept { return num_ == 0; }
    bool is_one() const noexcept { return num_ == 1 && den_ == 1; }
    bool is_integer() const noexcept { return den_ == 1; }
    int sign() const noexcept { return (num_ > 0) - (num_ < 0); }
    double to_double() const noexcept {
        return static_cast<double>(num_) / static_cast<double>(den_);
    }

    friend Rational operator+(const Rational& a, const Rational& b) {
        __int128 n = static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_;
        __int128 d = static_cast<__int128>(a.den_) * b.den_;
        return from_wide(n, d);
    }
    friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return from_wide(static_cast<__int128>(a.num_) * b.num_,
                         static_cast<__int128>(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw EvalError("rational division by zero");
        return from_wide(static_cast<__int128>(a.num_) * b.den_,
                         static_cast<__int128>(a.den_) * b.num_);
    }
    Rational operator-() const {
        if (num_ == INT64_MIN) throw OverflowError("rational negation overflow");
        Rational r;
        r.num_ = -num_;
        r.den_ = den_;
        return r;
    }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }

    friend bool operator==(const Rational& a, const Rational& b) noexcept {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator<(const Rational& a, const Rational& b) noexcept {
        return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
    }

    /// Integer power; negative exponents invert.
    Rational pow(std::int64_t k) const {
        if (k < 0) return Rational(1) / pow(-k);
        Rational result(1), base = *this;
        while (k > 0) {
            if (k & 1) result *= base;
            k >>= 1;
            if (k > 0) base *= base;
        }
        return result;
    }

    std::string str() const {
        return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
    }
    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

  private:
    void assign(std::int64_t n, std::int64_t d) {
        if (d == 0) throw EvalError("rational with zero denominator");
        *this = from_wide(n, d);
    }

    static Rational from_wide(__int128 n, __int128 d) {
        if (d == 0) throw EvalError("rational with zero denominator");
        if (d < 0) {
            n = -n;
            d = -d;
        }
        __int128 a = n < 0 ? -n : n, b = d;
        while (b != 0) {
            __int128 t = a % b;
            a = b;
            b = t;
        }
        if (a > 1) {
            n /= a;
            d /= a;
        }
        if (n > INT64_MAX || n < -INT64_MAX || d > INT64_MAX)
            throw OverflowError("rational constant exceeds 64-bit range");
        Rational r;
        r.num_ = static_cast<std::int64_t>(n);
        r.den_ = static_cast<std::int64_t>(d);
        return r;
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

} // namespace srk
