#pragma once

// Truncated multivariate Taylor polynomials ("jets") about a point. They push
// exact derivatives through the connection when symbolic expressions grow too
// large to differentiate repeatedly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <span>
#include <unordered_map>
#include <vector>

#include "srkilling/expr.hpp"

namespace srk {

/// Monomial bookkeeping for jets in d variables up to total degree K.
/// Monomials are ordered by degree, so a jet of order r is a prefix.
struct JetSpace {
    int d = 0;
    int K = 0;
    std::vector<std::vector<int>> mono;
    std::vector<int> deg;
    std::vector<std::size_t> upto;                      // upto[k]: number of monomials of degree ≤ k
    std::vector<std::vector<std::pair<int, int>>> mult; // mult[a]: (b, a·b) with deg b ascending
    std::vector<std::vector<int>> shift;                // shift[i][m]: index of m + e_i, or -1

    static const JetSpace& get(int d, int K) {
        static std::mutex mu;
        static std::map<std::pair<int, int>, std::unique_ptr<JetSpace>> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto& slot = cache[{d, K}];
        if (!slot) slot = std::make_unique<JetSpace>(d, K);
        return *slot;
    }

    JetSpace(int d_, int K_) : d(d_), K(K_) {
        std::map<std::vector<int>, int> index;
        for (int total = 0; total <= K; ++total) {
            std::vector<int> e(static_cast<std::size_t>(d), 0);
            enumerate(e, 0, total, total, index);
            upto.push_back(mono.size());
        }
        const std::size_t M = mono.size();
        mult.resize(M);
        for (std::size_t a = 0; a < M; ++a)
            for (std::size_t b = 0; b < M; ++b) {
                if (deg[a] + deg[b] > K) break;
                std::vector<int> p(static_cast<std::size_t>(d));
                for (int i = 0; i < d; ++i) p[i] = mono[a][i] + mono[b][i];
                mult[a].emplace_back(static_cast<int>(b), index.at(p));
            }
        shift.assign(static_cast<std::size_t>(d), std::vector<int>(M, -1));
        for (int i = 0; i < d; ++i)
            for (std::size_t m = 0; m < M; ++m) {
                if (deg[m] == K) continue;
                auto p = mono[m];
                ++p[i];
                shift[i][m] = index.at(p);
            }
    }

  private:
    void enumerate(std::vector<int>& e, int var, int left, int total, std::map<std::vector<int>, int>& index) {
        if (var == d - 1) {
            e[var] = left;
            index.emplace(e, static_cast<int>(mono.size()));
            mono.push_back(e);
            deg.push_back(total);
            return;
        }
        for (int k = left; k >= 0; --k) {
            e[var] = k;
            enumerate(e, var + 1, left - k, total, index);
        }
    }
};

/// Taylor polynomial of a scalar field about a base point, exact through
/// total degree `order()`. A default-constructed jet is the exact zero.
class Jet {
  public:
    Jet() = default;

    static Jet constant(const JetSpace& s, double v) {
        Jet j(s, s.K);
        j.c_[0] = v;
        return j;
    }
    /// The coordinate function x_i about a base value.
    static Jet variable(const JetSpace& s, int i, double base) {
        Jet j = constant(s, base);
        if (s.K > 0) j.c_[static_cast<std::size_t>(s.shift[i][0])] = 1.0;
        return j;
    }

    bool is_zero() const { return s_ == nullptr; }
    double value() const { return s_ ? c_[0] : 0.0; }
    int order() const { return order_; }
    const JetSpace* space() const { return s_; }
    std::span<const double> coefficients() const { return c_; }

    /// ∂/∂x_i, one order lower.
    Jet derivative(int i) const {
        if (!s_) return {};
        if (order_ == 0) throw Error("jet order exhausted: raise the jet order");
        Jet out(*s_, order_ - 1);
        for (std::size_t m = 0; m < out.c_.size(); ++m) {
            int up = s_->shift[i][m];
            out.c_[m] = (s_->mono[static_cast<std::size_t>(up)][i]) * c_[static_cast<std::size_t>(up)];
        }
        return out;
    }

    Jet truncated(int order) const {
        if (!s_ || order >= order_) return *this;
        Jet out(*s_, order);
        std::copy_n(c_.begin(), out.c_.size(), out.c_.begin());
        return out;
    }

    friend Jet operator+(const Jet& a, const Jet& b) {
        if (!a.s_) return b;
        if (!b.s_) return a;
        Jet out(*a.s_, std::min(a.order_, b.order_));
        for (std::size_t m = 0; m < out.c_.size(); ++m) out.c_[m] = a.c_[m] + b.c_[m];
        return out;
    }
    friend Jet operator-(const Jet& a) {
        Jet out = a;
        for (auto& v : out.c_) v = -v;
        return out;
    }
    friend Jet operator-(const Jet& a, const Jet& b) { return a + (-b); }
    friend Jet operator*(const Jet& a, const Jet& b) {
        if (!a.s_ || !b.s_) return {};
        const JetSpace& s = *a.s_;
        const int r = std::min(a.order_, b.order_);
        Jet out(s, r);
        const std::size_t n = out.c_.size();
        for (std::size_t i = 0; i < n; ++i) {
            double ai = a.c_[i];
            if (ai == 0.0) continue;
            const int budget = r - s.deg[i];
            for (const auto& [bj, p] : s.mult[i]) {
                if (s.deg[static_cast<std::size_t>(bj)] > budget) break;
                out.c_[static_cast<std::size_t>(p)] += ai * b.c_[static_cast<std::size_t>(bj)];
            }
        }
        return out;
    }
    friend Jet operator*(double k, const Jet& a) {
        if (!a.s_ || k == 0.0) return {};
        Jet out = a;
        for (auto& v : out.c_) v *= k;
        return out;
    }
    friend Jet operator*(const Rational& k, const Jet& a) { return k.to_double() * a; }

    /// Σ_k coef[k] (a − a₀)^k: composition with a scalar Taylor series.
    Jet compose(const std::vector<double>& series) const {
        Jet delta = *this;
        delta.c_[0] = 0.0;
        Jet out = constant(*s_, series[0]).truncated(order_);
        Jet power = constant(*s_, 1.0).truncated(order_);
        for (std::size_t k = 1; k < series.size() && static_cast<int>(k) <= order_; ++k) {
            power = power * delta;
            out = out + series[k] * power;
        }
        return out;
    }

  private:
    Jet(const JetSpace& s, int order) : s_(&s), order_(order), c_(s.upto[static_cast<std::size_t>(order)], 0.0) {}

    const JetSpace* s_ = nullptr;
    int order_ = 1 << 20;
    std::vector<double> c_;
};

inline Jet add(std::vector<Jet> terms) {
    Jet out;
    for (const auto& t : terms) out = out + t;
    return out;
}

inline Jet jet_pow(const Jet& u, const Rational& r) {
    if (u.is_zero()) {
        if (r.sign() > 0) return {};
        throw EvalError("division by zero");
    }
    const int K = u.order();
    if (r.is_integer() && r.sign() >= 0) {
        Jet out = Jet::constant(*u.space(), 1.0).truncated(K), base = u;
        for (std::int64_t e = r.num(); e > 0; e >>= 1) {
            if (e & 1) out = out * base;
            if (e > 1) base = base * base;
        }
        return out;
    }
    const double u0 = u.value();
    if (u0 == 0.0) throw EvalError("division by zero");
    if (u0 < 0 && r.den() % 2 == 0) throw EvalError("even root of a negative value");
    // u^r = u0^r (1 + t)^r with t = (u − u0)/u0
    const double base = (u0 < 0 && r.num() % 2 != 0 ? -1.0 : 1.0) * std::pow(std::abs(u0), r.to_double());
    std::vector<double> series(static_cast<std::size_t>(K) + 1);
    double binom = 1.0, rr = r.to_double();
    for (int k = 0; k <= K; ++k) {
        series[static_cast<std::size_t>(k)] = base * binom / std::pow(u0, k);
        binom *= (rr - k) / (k + 1);
    }
    return u.compose(series);
}

inline Jet jet_sin_cos(const Jet& u, bool cosine) {
    const int K = u.order();
    const double s = std::sin(u.value()), c = std::cos(u.value());
    // derivatives of sin cycle through sin, cos, −sin, −cos
    const double cyc_sin[4] = {s, c, -s, -c};
    const double cyc_cos[4] = {c, -s, -c, s};
    std::vector<double> series(static_cast<std::size_t>(K) + 1);
    double fact = 1.0;
    for (int k = 0; k <= K; ++k) {
        if (k > 0) fact *= k;
        series[static_cast<std::size_t>(k)] = (cosine ? cyc_cos[k % 4] : cyc_sin[k % 4]) / fact;
    }
    return u.compose(series);
}

inline Jet jet_exp(const Jet& u) {
    const int K = u.order();
    const double e = std::exp(u.value());
    std::vector<double> series(static_cast<std::size_t>(K) + 1);
    double fact = 1.0;
    for (int k = 0; k <= K; ++k) {
        if (k > 0) fact *= k;
        series[static_cast<std::size_t>(k)] = e / fact;
    }
    return u.compose(series);
}

/// A batch of expressions compiled for jet evaluation about arbitrary points.
class JetTape {
  public:
    JetTape() = default;
    explicit JetTape(std::span<const Expr> exprs) {
        std::unordered_map<const detail::Node*, int> slot;
        for (const auto& e : exprs) outputs_.push_back(emit(e, slot));
    }

    std::size_t size() const { return outputs_.size(); }

    /// Jets of every expression about `point`, exact through `order`.
    std::vector<Jet> eval(std::span<const double> point, int order) const {
        const JetSpace& s = JetSpace::get(static_cast<int>(point.size()), order);
        std::vector<Jet> v(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const Node& n = nodes_[i];
            auto arg = [&](int k) -> const Jet& { return v[static_cast<std::size_t>(n.args[static_cast<std::size_t>(k)])]; };
            switch (n.op) {
            case Op::Const:
                v[i] = n.value == 0.0 ? Jet() : Jet::constant(s, n.value);
                break;
            case Op::Var:
                if (static_cast<std::size_t>(n.var) >= point.size()) throw EvalError("unbound variable");
                v[i] = Jet::variable(s, n.var, point[static_cast<std::size_t>(n.var)]);
                break;
            case Op::Add: {
                Jet t;
                for (std::size_t k = 0; k < n.args.size(); ++k) t = t + arg(static_cast<int>(k));
                v[i] = t;
                break;
            }
            case Op::Mul: {
                Jet t = arg(0);
                for (std::size_t k = 1; k < n.args.size(); ++k) t = t * arg(static_cast<int>(k));
                v[i] = t;
                break;
            }
            case Op::Pow:
                v[i] = jet_pow(arg(0), n.exponent);
                break;
            case Op::Sin:
                v[i] = jet_sin_cos(arg(0), false);
                break;
            case Op::Cos:
                v[i] = jet_sin_cos(arg(0), true);
                break;
            case Op::Exp:
                v[i] = jet_exp(arg(0));
                break;
            }
            for (double c : v[i].coefficients())
                if (!std::isfinite(c)) throw EvalError("non-finite result");
        }
        std::vector<Jet> out;
        out.reserve(outputs_.size());
        for (int o : outputs_) out.push_back(v[static_cast<std::size_t>(o)]);
        return out;
    }

  private:
    struct Node {
        Op op;
        double value = 0.0;
        Rational exponent;
        int var = -1;
        std::vector<int> args;
    };

    int emit(const Expr& e, std::unordered_map<const detail::Node*, int>& slot) {
        if (auto it = slot.find(e.node()); it != slot.end()) return it->second;
        Node n{e.op()};
        for (const auto& a : e.args()) n.args.push_back(emit(a, slot));
        if (e.op() == Op::Const) n.value = e.value().to_double();
        if (e.op() == Op::Var) n.var = e.var();
        if (e.op() == Op::Pow) n.exponent = e.value();
        nodes_.push_back(std::move(n));
        int id = static_cast<int>(nodes_.size()) - 1;
        slot.emplace(e.node(), id);
        return id;
    }

    std::vector<Node> nodes_;
    std::vector<int> outputs_;
};

} // namespace srk
