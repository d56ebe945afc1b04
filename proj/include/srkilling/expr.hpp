#pragma once

// Exact symbolic scalar expressions over chart coordinates.
//
// Nodes are immutable and shared. Sums and products are stored n-ary and are
// normalized on construction: constants fold, like terms collect, equal bases
// merge their exponents, and small products of sums are expanded. The
// simplifier is best-effort; numerical claims always rest on evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "srkilling/error.hpp"
#include "srkilling/rational.hpp"

namespace srk {

enum class Op : std::uint8_t { Const, Var, Add, Mul, Pow, Sin, Cos, Exp };

class Expr;

namespace detail {

struct Node {
    Op op = Op::Const;
    Rational value;           // constant value, or exponent for Pow
    int var = -1;             // variable index for Var
    std::string name;         // variable name for Var
    std::vector<Expr> args;   // children
    std::uint64_t hash = 0;
    std::uint64_t var_mask = 0; // bit i set when variable i occurs
};

inline std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    v += 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    v ^= v >> 30;
    v *= 0xbf58476d1ce4e5b9ULL;
    v ^= v >> 27;
    v *= 0x94d049bb133111ebULL;
    v ^= v >> 31;
    return h ^ v;
}

} // namespace detail

/// Handle to an immutable expression node. Default-constructed handles are 0.
class Expr {
  public:
    Expr();
    Expr(const Rational& r); // NOLINT(implicit)
    Expr(std::int64_t v) : Expr(Rational(v)) {} // NOLINT(implicit)
    Expr(int v) : Expr(Rational(v)) {}          // NOLINT(implicit)

    Op op() const noexcept { return node_->op; }
    const Rational& value() const noexcept { return node_->value; }
    int var() const noexcept { return node_->var; }
    const std::string& name() const noexcept { return node_->name; }
    const std::vector<Expr>& args() const noexcept { return node_->args; }
    std::uint64_t hash() const noexcept { return node_->hash; }
    std::uint64_t var_mask() const noexcept { return node_->var_mask; }
    const detail::Node* node() const noexcept { return node_.get(); }

    bool is_const() const noexcept { return op() == Op::Const; }
    bool is_zero() const noexcept { return is_const() && value().is_zero(); }
    bool is_one() const noexcept { return is_const() && value().is_one(); }

    static Expr make(detail::Node n);

  private:
    explicit Expr(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const detail::Node> node_;
};

inline Expr Expr::make(detail::Node n) {
    std::uint64_t h = detail::mix(static_cast<std::uint64_t>(n.op) + 1, 0);
    std::uint64_t mask = 0;
    switch (n.op) {
    case Op::Const:
        h = detail::mix(h, static_cast<std::uint64_t>(n.value.num()));
        h = detail::mix(h, static_cast<std::uint64_t>(n.value.den()));
        break;
    case Op::Var:
        h = detail::mix(h, static_cast<std::uint64_t>(n.var));
        if (n.var >= 0 && n.var < 64) mask = 1ULL << n.var;
        break;
    case Op::Pow:
        h = detail::mix(h, static_cast<std::uint64_t>(n.value.num()));
        h = detail::mix(h, static_cast<std::uint64_t>(n.value.den()));
        break;
    default:
        break;
    }
    for (const auto& a : n.args) {
        h = detail::mix(h, a.hash());
        mask |= a.var_mask();
    }
    n.hash = h;
    n.var_mask = mask;
    return Expr(std::make_shared<const detail::Node>(std::move(n)));
}

inline Expr::Expr(const Rational& r) {
    detail::Node n;
    n.op = Op::Const;
    n.value = r;
    *this = make(std::move(n));
}

inline Expr::Expr() : Expr(Rational(0)) {}

/// Total structural order; 0 iff structurally equal.
inline int compare(const Expr& a, const Expr& b) {
    if (a.node() == b.node()) return 0;
    if (a.op() != b.op()) return a.op() < b.op() ? -1 : 1;
    if (a.hash() != b.hash()) return a.hash() < b.hash() ? -1 : 1;
    switch (a.op()) {
    case Op::Const:
        if (a.value() == b.value()) return 0;
        return a.value() < b.value() ? -1 : 1;
    case Op::Var:
        if (a.var() != b.var()) return a.var() < b.var() ? -1 : 1;
        return a.name().compare(b.name());
    case Op::Pow:
        if (!(a.value() == b.value())) return a.value() < b.value() ? -1 : 1;
        break;
    default:
        break;
    }
    const auto& x = a.args();
    const auto& y = b.args();
    if (x.size() != y.size()) return x.size() < y.size() ? -1 : 1;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (int c = compare(x[i], y[i]); c != 0) return c;
    return 0;
}

inline bool operator==(const Expr& a, const Expr& b) { return compare(a, b) == 0; }

struct ExprLess {
    bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

inline Expr variable(int index, std::string name) {
    detail::Node n;
    n.op = Op::Var;
    n.var = index;
    n.name = std::move(name);
    return Expr::make(std::move(n));
}

Expr add(std::vector<Expr> terms);
Expr mul(std::vector<Expr> factors);
Expr pow(const Expr& base, const Rational& exponent);

namespace detail {

/// Products of sums are expanded only when they produce at most this many terms.
inline constexpr std::size_t kExpandLimit = 64;

inline Expr raw(Op op, std::vector<Expr> args, Rational value = Rational(0)) {
    Node n;
    n.op = op;
    n.args = std::move(args);
    n.value = value;
    return Expr::make(std::move(n));
}

// term = coef * key, key free of a numeric coefficient
inline std::pair<Rational, Expr> split_term(const Expr& t) {
    if (t.op() == Op::Mul && t.args().front().is_const()) {
        Rational c = t.args().front().value();
        std::vector<Expr> rest(t.args().begin() + 1, t.args().end());
        if (rest.size() == 1) return {c, rest.front()};
        return {c, raw(Op::Mul, std::move(rest))};
    }
    return {Rational(1), t};
}

inline Expr scale(const Rational& c, const Expr& key) {
    if (c.is_zero()) return Expr(0);
    if (c.is_one()) return key;
    if (key.is_const()) return Expr(c * key.value());
    std::vector<Expr> args{Expr(c)};
    if (key.op() == Op::Mul)
        args.insert(args.end(), key.args().begin(), key.args().end());
    else
        args.push_back(key);
    return raw(Op::Mul, std::move(args));
}

inline void flatten_add(const Expr& e, Rational& constant,
                        std::vector<std::pair<Expr, Rational>>& out) {
    if (e.op() == Op::Add) {
        for (const auto& a : e.args()) flatten_add(a, constant, out);
    } else if (e.is_const()) {
        constant += e.value();
    } else {
        auto [c, key] = split_term(e);
        out.emplace_back(std::move(key), c);
    }
}

// Exact q-th root of a non-negative int64, if one exists.
inline bool exact_root(std::int64_t v, std::int64_t q, std::int64_t& out) {
    if (v < 0) return false;
    if (v == 0 || v == 1) {
        out = v;
        return true;
    }
    auto guess = static_cast<std::int64_t>(std::llround(std::pow(static_cast<double>(v), 1.0 / static_cast<double>(q))));
    for (std::int64_t g = std::max<std::int64_t>(1, guess - 1); g <= guess + 1; ++g) {
        __int128 p = 1;
        bool over = false;
        for (std::int64_t i = 0; i < q && !over; ++i) {
            p *= g;
            if (p > static_cast<__int128>(v)) over = true;
        }
        if (!over && p == v) {
            out = g;
            return true;
        }
    }
    return false;
}

inline Expr fold_const_pow(const Rational& b, const Rational& e) {
    if (e.is_integer()) {
        if (b.is_zero() && e.sign() < 0) return raw(Op::Pow, {Expr(b)}, e);
        return Expr(b.pow(e.num()));
    }
    if (b.is_zero()) {
        if (e.sign() > 0) return Expr(0);
        return raw(Op::Pow, {Expr(b)}, e);
    }
    // b^(p/q): exact when |b| is a perfect q-th power (sign-aware for odd q)
    std::int64_t q = e.den();
    bool negative = b.sign() < 0;
    if (!negative || (q % 2 == 1)) {
        std::int64_t rn = 0, rd = 0;
        std::int64_t an = negative ? -b.num() : b.num();
        if (exact_root(an, q, rn) && exact_root(b.den(), q, rd)) {
            Rational root(negative ? -rn : rn, rd);
            return Expr(root.pow(e.num()));
        }
    }
    return raw(Op::Pow, {Expr(b)}, e);
}

inline Expr expand_product(const Rational& coef, const std::vector<Expr>& others,
                           const std::vector<Expr>& sums) {
    std::vector<Expr> terms;
    std::vector<std::size_t> idx(sums.size(), 0);
    while (true) {
        std::vector<Expr> f;
        f.reserve(others.size() + sums.size() + 1);
        f.push_back(Expr(coef));
        f.insert(f.end(), others.begin(), others.end());
        for (std::size_t i = 0; i < sums.size(); ++i) f.push_back(sums[i].args()[idx[i]]);
        terms.push_back(mul(std::move(f)));
        std::size_t k = 0;
        while (k < sums.size()) {
            if (++idx[k] < sums[k].args().size()) break;
            idx[k] = 0;
            ++k;
        }
        if (k == sums.size()) break;
    }
    return add(std::move(terms));
}

} // namespace detail

inline Expr add(std::vector<Expr> terms) {
    Rational constant(0);
    std::vector<std::pair<Expr, Rational>> parts;
    for (const auto& t : terms) detail::flatten_add(t, constant, parts);
    std::stable_sort(parts.begin(), parts.end(),
                     [](const auto& a, const auto& b) { return compare(a.first, b.first) < 0; });
    std::vector<Expr> out;
    if (!constant.is_zero()) out.push_back(Expr(constant));
    for (std::size_t i = 0; i < parts.size();) {
        Rational c = parts[i].second;
        std::size_t j = i + 1;
        while (j < parts.size() && parts[j].first == parts[i].first) c += parts[j++].second;
        if (!c.is_zero()) out.push_back(detail::scale(c, parts[i].first));
        i = j;
    }
    if (out.empty()) return Expr(0);
    if (out.size() == 1) return out.front();
    return detail::raw(Op::Add, std::move(out));
}

inline Expr mul(std::vector<Expr> factors) {
    for (int pass = 0;; ++pass) {
        Rational coef(1);
        std::vector<std::pair<Expr, Rational>> parts;
        std::vector<Expr> stack(factors.rbegin(), factors.rend());
        while (!stack.empty()) {
            Expr f = stack.back();
            stack.pop_back();
            if (f.op() == Op::Mul) {
                for (auto it = f.args().rbegin(); it != f.args().rend(); ++it) stack.push_back(*it);
            } else if (f.is_const()) {
                coef *= f.value();
            } else if (f.op() == Op::Pow) {
                parts.emplace_back(f.args().front(), f.value());
            } else {
                parts.emplace_back(f, Rational(1));
            }
        }
        if (coef.is_zero()) return Expr(0);
        std::stable_sort(parts.begin(), parts.end(),
                         [](const auto& a, const auto& b) { return compare(a.first, b.first) < 0; });
        std::vector<Expr> outs;
        bool again = false;
        for (std::size_t i = 0; i < parts.size();) {
            Rational e = parts[i].second;
            std::size_t j = i + 1;
            while (j < parts.size() && parts[j].first == parts[i].first) e += parts[j++].second;
            if (!e.is_zero()) {
                Expr p = pow(parts[i].first, e);
                if (p.is_const())
                    coef *= p.value();
                else {
                    if (p.op() == Op::Mul) again = true;
                    outs.push_back(std::move(p));
                }
            }
            i = j;
        }
        if (coef.is_zero()) return Expr(0);
        if (again && pass < 8) {
            outs.push_back(Expr(coef));
            factors = std::move(outs);
            continue;
        }
        std::vector<Expr> sums, others;
        std::size_t combos = 1;
        for (auto& o : outs) {
            if (o.op() == Op::Add) {
                combos *= o.args().size();
                sums.push_back(o);
            } else {
                others.push_back(o);
            }
        }
        if (!sums.empty() && combos <= detail::kExpandLimit)
            return detail::expand_product(coef, others, sums);
        std::sort(outs.begin(), outs.end(), ExprLess{});
        if (outs.empty()) return Expr(coef);
        if (outs.size() == 1 && coef.is_one()) return outs.front();
        std::vector<Expr> args;
        if (!coef.is_one()) args.push_back(Expr(coef));
        args.insert(args.end(), outs.begin(), outs.end());
        if (args.size() == 1) return args.front();
        return detail::raw(Op::Mul, std::move(args));
    }
}

inline Expr pow(const Expr& base, const Rational& e) {
    if (e.is_zero()) return Expr(1);
    if (e.is_one()) return base;
    switch (base.op()) {
    case Op::Const:
        return detail::fold_const_pow(base.value(), e);
    case Op::Pow:
        if (e.is_integer()) return pow(base.args().front(), base.value() * e);
        break;
    case Op::Mul:
        if (e.is_integer()) {
            std::vector<Expr> f;
            for (const auto& a : base.args()) f.push_back(pow(a, e));
            return mul(std::move(f));
        }
        break;
    case Op::Add:
        if (e.is_integer() && e.num() > 1 && e.num() <= 4) {
            std::size_t combos = 1;
            for (std::int64_t i = 0; i < e.num(); ++i) combos *= base.args().size();
            if (combos <= detail::kExpandLimit)
                return detail::expand_product(Rational(1), {},
                                              std::vector<Expr>(static_cast<std::size_t>(e.num()), base));
        }
        break;
    default:
        break;
    }
    return detail::raw(Op::Pow, {base}, e);
}

inline Expr sin(const Expr& u) {
    if (u.is_zero()) return Expr(0);
    return detail::raw(Op::Sin, {u});
}
inline Expr cos(const Expr& u) {
    if (u.is_zero()) return Expr(1);
    return detail::raw(Op::Cos, {u});
}
inline Expr exp(const Expr& u) {
    if (u.is_zero()) return Expr(1);
    return detail::raw(Op::Exp, {u});
}

inline Expr operator+(const Expr& a, const Expr& b) { return add({a, b}); }
inline Expr operator-(const Expr& a) { return mul({Expr(-1), a}); }
inline Expr operator-(const Expr& a, const Expr& b) { return add({a, -b}); }
inline Expr operator*(const Expr& a, const Expr& b) { return mul({a, b}); }
inline Expr operator/(const Expr& a, const Expr& b) {
    if (b.is_zero()) throw EvalError("division by zero");
    return mul({a, pow(b, Rational(-1))});
}
inline Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }

/// Number of distinct nodes in the expression DAG.
inline std::size_t node_count(const Expr& e) {
    std::unordered_map<const detail::Node*, bool> seen;
    std::vector<Expr> stack{e};
    while (!stack.empty()) {
        Expr x = stack.back();
        stack.pop_back();
        if (!seen.emplace(x.node(), true).second) continue;
        for (const auto& a : x.args()) stack.push_back(a);
    }
    return seen.size();
}

// --- differentiation -------------------------------------------------------

namespace detail {

inline Expr diff_impl(const Expr& e, int v, std::unordered_map<const Node*, Expr>& memo) {
    if (v >= 64 || !(e.var_mask() >> v & 1ULL)) return Expr(0);
    if (auto it = memo.find(e.node()); it != memo.end()) return it->second;
    Expr r;
    switch (e.op()) {
    case Op::Const:
        r = Expr(0);
        break;
    case Op::Var:
        r = Expr(e.var() == v ? 1 : 0);
        break;
    case Op::Add: {
        std::vector<Expr> t;
        for (const auto& a : e.args()) t.push_back(diff_impl(a, v, memo));
        r = add(std::move(t));
        break;
    }
    case Op::Mul: {
        std::vector<Expr> t;
        const auto& f = e.args();
        for (std::size_t i = 0; i < f.size(); ++i) {
            Expr d = diff_impl(f[i], v, memo);
            if (d.is_zero()) continue;
            std::vector<Expr> prod(f);
            prod[i] = d;
            t.push_back(mul(std::move(prod)));
        }
        r = add(std::move(t));
        break;
    }
    case Op::Pow: {
        const Expr& u = e.args().front();
        const Rational& p = e.value();
        r = mul({Expr(p), pow(u, p - Rational(1)), diff_impl(u, v, memo)});
        break;
    }
    case Op::Sin:
        r = mul({cos(e.args().front()), diff_impl(e.args().front(), v, memo)});
        break;
    case Op::Cos:
        r = mul({Expr(-1), sin(e.args().front()), diff_impl(e.args().front(), v, memo)});
        break;
    case Op::Exp:
        r = mul({e, diff_impl(e.args().front(), v, memo)});
        break;
    }
    memo.emplace(e.node(), r);
    return r;
}

} // namespace detail

/// Exact partial derivative with respect to variable index `v`.
inline Expr differentiate(const Expr& e, int v) {
    std::unordered_map<const detail::Node*, Expr> memo;
    return detail::diff_impl(e, v, memo);
}

// --- evaluation ------------------------------------------------------------

namespace detail {

inline double eval_pow(double u, const Rational& r) {
    if (u == 0.0 && r.sign() < 0) throw EvalError("division by zero");
    double out;
    if (r.is_integer()) {
        out = std::pow(u, static_cast<double>(r.num()));
    } else if (u < 0.0) {
        if (r.den() % 2 == 0) throw EvalError("even root of negative value");
        double mag = std::pow(-u, r.to_double());
        out = (r.num() % 2 == 0) ? mag : -mag;
    } else {
        out = std::pow(u, r.to_double());
    }
    return out;
}

inline double eval_impl(const Expr& e, std::span<const double> p,
                        std::unordered_map<const Node*, double>& memo) {
    switch (e.op()) {
    case Op::Const:
        return e.value().to_double();
    case Op::Var:
        if (e.var() < 0 || static_cast<std::size_t>(e.var()) >= p.size())
            throw EvalError("unbound variable `" + e.name() + "`");
        return p[static_cast<std::size_t>(e.var())];
    default:
        break;
    }
    if (auto it = memo.find(e.node()); it != memo.end()) return it->second;
    double r = 0.0;
    switch (e.op()) {
    case Op::Add:
        for (const auto& a : e.args()) r += eval_impl(a, p, memo);
        break;
    case Op::Mul:
        r = 1.0;
        for (const auto& a : e.args()) r *= eval_impl(a, p, memo);
        break;
    case Op::Pow:
        r = eval_pow(eval_impl(e.args().front(), p, memo), e.value());
        break;
    case Op::Sin:
        r = std::sin(eval_impl(e.args().front(), p, memo));
        break;
    case Op::Cos:
        r = std::cos(eval_impl(e.args().front(), p, memo));
        break;
    case Op::Exp:
        r = std::exp(eval_impl(e.args().front(), p, memo));
        break;
    default:
        break;
    }
    if (!std::isfinite(r)) throw EvalError("non-finite result");
    memo.emplace(e.node(), r);
    return r;
}

} // namespace detail

/// Evaluate at a point (binary64). Throws EvalError on division by zero,
/// even roots of negative values and non-finite results.
inline double evaluate(const Expr& e, std::span<const double> point) {
    std::unordered_map<const detail::Node*, double> memo;
    double r = detail::eval_impl(e, point, memo);
    if (!std::isfinite(r)) throw EvalError("non-finite result");
    return r;
}

/// A batch of expressions flattened into a shared instruction tape, so that
/// repeated point queries reuse common subexpressions.
class CompiledExprs {
  public:
    CompiledExprs() = default;
    explicit CompiledExprs(std::span<const Expr> exprs) {
        std::unordered_map<const detail::Node*, int> slot;
        for (const auto& e : exprs) outputs_.push_back(emit(e, slot));
    }

    std::size_t size() const noexcept { return outputs_.size(); }

    /// Evaluates every expression at `point`, writing into `out`.
    void eval(std::span<const double> point, std::span<double> out) const {
        scratch_.resize(code_.size());
        for (std::size_t i = 0; i < code_.size(); ++i) {
            const Instr& in = code_[i];
            double r = 0.0;
            switch (in.op) {
            case Op::Const:
                r = in.constant;
                break;
            case Op::Var:
                if (static_cast<std::size_t>(in.var) >= point.size())
                    throw EvalError("unbound variable index " + std::to_string(in.var));
                r = point[static_cast<std::size_t>(in.var)];
                break;
            case Op::Add:
                for (int k = in.first; k < in.first + in.count; ++k) r += scratch_[static_cast<std::size_t>(operands_[static_cast<std::size_t>(k)])];
                break;
            case Op::Mul:
                r = 1.0;
                for (int k = in.first; k < in.first + in.count; ++k) r *= scratch_[static_cast<std::size_t>(operands_[static_cast<std::size_t>(k)])];
                break;
            case Op::Pow:
                r = detail::eval_pow(arg0(in), in.exponent);
                break;
            case Op::Sin:
                r = std::sin(arg0(in));
                break;
            case Op::Cos:
                r = std::cos(arg0(in));
                break;
            case Op::Exp:
                r = std::exp(arg0(in));
                break;
            }
            if (!std::isfinite(r)) throw EvalError("non-finite result");
            scratch_[i] = r;
        }
        for (std::size_t k = 0; k < outputs_.size(); ++k) out[k] = scratch_[static_cast<std::size_t>(outputs_[k])];
    }

    std::vector<double> eval(std::span<const double> point) const {
        std::vector<double> out(outputs_.size());
        eval(point, out);
        return out;
    }

  private:
    struct Instr {
        Op op;
        double constant = 0.0;
        Rational exponent;
        int var = -1;
        int first = 0;
        int count = 0;
    };

    double arg0(const Instr& in) const {
        return scratch_[static_cast<std::size_t>(operands_[static_cast<std::size_t>(in.first)])];
    }

    int emit(const Expr& e, std::unordered_map<const detail::Node*, int>& slot) {
        if (auto it = slot.find(e.node()); it != slot.end()) return it->second;
        std::vector<int> kids;
        for (const auto& a : e.args()) kids.push_back(emit(a, slot));
        Instr in{e.op()};
        if (e.op() == Op::Const) in.constant = e.value().to_double();
        if (e.op() == Op::Var) in.var = e.var();
        if (e.op() == Op::Pow) in.exponent = e.value();
        in.first = static_cast<int>(operands_.size());
        in.count = static_cast<int>(kids.size());
        operands_.insert(operands_.end(), kids.begin(), kids.end());
        code_.push_back(in);
        int id = static_cast<int>(code_.size()) - 1;
        slot.emplace(e.node(), id);
        return id;
    }

    std::vector<Instr> code_;
    std::vector<int> operands_;
    std::vector<int> outputs_;
    mutable std::vector<double> scratch_;
};

// --- printing --------------------------------------------------------------

namespace detail {

inline std::string print_impl(const Expr& e);

inline bool is_atomic(const Expr& e) {
    return e.op() == Op::Var || e.op() == Op::Sin || e.op() == Op::Cos || e.op() == Op::Exp ||
           e.op() == Op::Pow || (e.is_const() && e.value().is_integer() && e.value().sign() >= 0);
}

inline std::string print_factor(const Expr& f) {
    if (f.op() == Op::Add) return "(" + print_impl(f) + ")";
    if (f.is_const() || f.op() == Op::Mul) return "(" + print_impl(f) + ")";
    return print_impl(f);
}

// Prints |coef| * rest; the sign is handled by the caller.
inline std::string print_scaled(const Rational& mag, const std::vector<Expr>& rest) {
    std::string body;
    for (std::size_t i = 0; i < rest.size(); ++i) {
        if (i) body += "*";
        body += print_factor(rest[i]);
    }
    std::string s;
    if (body.empty()) return mag.str();
    if (mag.num() != 1) s = std::to_string(mag.num()) + "*";
    s += body;
    if (mag.den() != 1) s += "/" + std::to_string(mag.den());
    return s;
}

inline std::string print_term(const Expr& t, bool& negative) {
    Rational c(1);
    std::vector<Expr> rest;
    if (t.is_const()) {
        c = t.value();
    } else if (t.op() == Op::Mul) {
        auto it = t.args().begin();
        if (it->is_const()) c = (it++)->value();
        rest.assign(it, t.args().end());
    } else {
        rest.push_back(t);
    }
    negative = c.sign() < 0;
    Rational mag = negative ? -c : c;
    return print_scaled(mag, rest);
}

inline std::string print_impl(const Expr& e) {
    switch (e.op()) {
    case Op::Const:
        return e.value().str();
    case Op::Var:
        return e.name();
    case Op::Add: {
        std::string s;
        for (std::size_t i = 0; i < e.args().size(); ++i) {
            bool neg = false;
            std::string t = print_term(e.args()[i], neg);
            if (i == 0)
                s = neg ? "-" + t : t;
            else
                s += neg ? " - " + t : " + " + t;
        }
        return s;
    }
    case Op::Mul: {
        bool neg = false;
        std::string t = print_term(e, neg);
        return neg ? "-" + t : t;
    }
    case Op::Pow: {
        const Expr& b = e.args().front();
        if (e.value().is_integer() && e.value().sign() > 0 &&
            (b.op() == Op::Var || b.op() == Op::Sin || b.op() == Op::Cos || b.op() == Op::Exp))
            return print_impl(b) + "^" + e.value().str();
        return "pow(" + print_impl(b) + ", " + e.value().str() + ")";
    }
    case Op::Sin:
        return "sin(" + print_impl(e.args().front()) + ")";
    case Op::Cos:
        return "cos(" + print_impl(e.args().front()) + ")";
    case Op::Exp:
        return "exp(" + print_impl(e.args().front()) + ")";
    }
    return {};
}

} // namespace detail

/// Renders the expression in the input grammar; parse(to_string(e)) evaluates
/// identically to e.
inline std::string to_string(const Expr& e) { return detail::print_impl(e); }

inline std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << to_string(e); }

} // namespace srk
