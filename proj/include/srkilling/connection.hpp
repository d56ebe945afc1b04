#pragma once

// Canonical metric, torsion-free connection of a special contact
// sub-Riemannian structure, in components on the orthonormal frame.
//
// Everything below is written against a frame provider F with scalar type
// F::Scalar. SymbolicFrame (Expr) gives exact expressions; JetFrame (Jet)
// gives Taylor jets about one point, for charts whose symbolic derivatives
// grow too large.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "srkilling/check.hpp"
#include "srkilling/jet.hpp"
#include "srkilling/structure.hpp"

namespace srk {

/// Horizontal tensor of type (upper, lower) in frame components.
///
/// Components are stored row-major with the upper slots first, so R^k_{ab,j}
/// lives at ((k*h + a)*h + b)*h + j. Each covariant derivative appends one
/// lower slot at the end.
template <class S>
struct BasicTensor {
    int h = 0;
    int upper = 0;
    int lower = 0;
    std::vector<S> data;

    BasicTensor() = default;
    BasicTensor(int h_, int upper_, int lower_) : h(h_), upper(upper_), lower(lower_) {
        data.assign(count(h, upper + lower), S{});
    }

    static std::size_t count(int h, int slots) {
        std::size_t s = 1;
        for (int i = 0; i < slots; ++i) s *= static_cast<std::size_t>(h);
        return s;
    }

    int slots() const { return upper + lower; }
    std::size_t size() const { return data.size(); }

    std::size_t offset(const std::vector<int>& idx) const {
        std::size_t k = 0;
        for (int i : idx) k = k * static_cast<std::size_t>(h) + static_cast<std::size_t>(i);
        return k;
    }
    std::vector<int> index(std::size_t k) const {
        std::vector<int> idx(static_cast<std::size_t>(slots()));
        for (std::size_t s = idx.size(); s-- > 0;) {
            idx[s] = static_cast<int>(k % static_cast<std::size_t>(h));
            k /= static_cast<std::size_t>(h);
        }
        return idx;
    }
    S& operator[](const std::vector<int>& idx) { return data[offset(idx)]; }
    const S& operator[](const std::vector<int>& idx) const { return data[offset(idx)]; }

    bool is_zero() const {
        for (const auto& e : data)
            if (!e.is_zero()) return false;
        return true;
    }
};

using Tensor = BasicTensor<Expr>;
using JetTensor = BasicTensor<Jet>;

/// Frame data of a contact structure as exact expressions.
class SymbolicFrame {
  public:
    using Scalar = Expr;

    SymbolicFrame(ContactStructure s) : s_(std::move(s)) {} // NOLINT(implicit)

    const ContactStructure& structure() const { return s_; }
    int rank() const { return s_.rank(); }
    int dim() const { return s_.dim(); }

    const Expr& c(int i, int j, int k) const { return s_.brackets().c(i, j, k); }
    const Expr& c0(int i, int j) const { return s_.brackets().c0(i, j); }
    const Expr& cxi(int j, int k) const { return s_.brackets().cxi(j, k); }
    const Expr& cxi0(int j) const { return s_.brackets().cxi0(j); }

    const Expr& frame(int a, int i) const { return s_.frame()[a][i]; }
    const Expr& reeb(int i) const { return s_.reeb()[i]; }
    const Expr& alpha(int i) const { return s_.alpha()[i]; }
    const Expr& theta(int a, int i) const { return s_.coframe()[a][i]; }
    const Expr& dalpha(int i, int j) const { return s_.dalpha()[i][j]; }

    Expr frame_derivative(int dir, const Expr& f) const { return s_.frame_derivative(dir, f); }
    Expr partial(const Expr& f, int i) const { return differentiate(f, i); }

  private:
    ContactStructure s_;
};

class JetFrame;

/// A chart-mode structure prepared for jet evaluation at many points. Only the
/// frame is compiled; everything derived from it is recomputed in jet
/// arithmetic, which stays small where the symbolic expressions swell.
class JetGeometry {
  public:
    explicit JetGeometry(ContactStructure s) : s_(std::move(s)) {
        s_.require_chart("jet evaluation");
        std::vector<Expr> all;
        for (const auto& f : s_.frame())
            for (const auto& e : f) all.push_back(e);
        tape_ = JetTape(all);
    }

    const ContactStructure& structure() const { return s_; }
    /// Frame coefficients e_a^i at a*d + i.
    const JetTape& tape() const { return tape_; }

    /// Frame data as jets about q, exact through `order`.
    JetFrame at(const Point& q, int order) const;

  private:
    ContactStructure s_;
    JetTape tape_;
};

namespace detail {

inline Jet jet_det(const JetSpace& sp, const std::vector<std::vector<Jet>>& m, std::size_t row, std::uint32_t cols,
                   std::unordered_map<std::uint32_t, Jet>& memo) {
    if (row == m.size()) return Jet::constant(sp, 1.0);
    if (auto it = memo.find(cols); it != memo.end()) return it->second;
    Jet r;
    int pos = 0;
    for (std::size_t c = 0; c < m.size(); ++c) {
        if (!(cols >> c & 1U)) continue;
        if (!m[row][c].is_zero()) {
            Jet t = m[row][c] * jet_det(sp, m, row + 1, cols & ~(1U << c), memo);
            r = pos % 2 == 0 ? r + t : r - t;
        }
        ++pos;
    }
    memo.emplace(cols, r);
    return r;
}

inline Jet jet_determinant(const JetSpace& sp, const std::vector<std::vector<Jet>>& m) {
    std::unordered_map<std::uint32_t, Jet> memo;
    return jet_det(sp, m, 0, (1U << m.size()) - 1U, memo);
}

template <class M>
M drop(const M& m, std::size_t r, std::size_t c) {
    M out;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i == r) continue;
        typename M::value_type row;
        for (std::size_t j = 0; j < m[i].size(); ++j)
            if (j != c) row.push_back(m[i][j]);
        out.push_back(std::move(row));
    }
    return out;
}

inline std::vector<Jet> jet_bracket(const std::vector<Jet>& v, const std::vector<Jet>& w) {
    std::vector<Jet> out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k)
        for (std::size_t i = 0; i < v.size(); ++i)
            out[k] = out[k] + v[i] * w[k].derivative(static_cast<int>(i)) -
                     w[i] * v[k].derivative(static_cast<int>(i));
    return out;
}

inline Jet jet_pair(const std::vector<Jet>& a, const std::vector<Jet>& b) {
    Jet out;
    for (std::size_t i = 0; i < a.size(); ++i) out = out + a[i] * b[i];
    return out;
}

} // namespace detail

/// Frame data as jets about one point.
class JetFrame {
  public:
    using Scalar = Jet;

    /// Recomputes α, ξ, θ, dα and the structure functions from frame jets of
    /// order + 3 (each stage of the construction costs one derivative).
    JetFrame(const JetGeometry& g, const Point& q, int order)
        : h_(g.structure().rank()), d_(g.structure().dim()), order_(order), q_(q) {
        const auto& s = g.structure();
        const std::size_t h = static_cast<std::size_t>(h_), d = static_cast<std::size_t>(d_);
        auto raw = g.tape().eval(q, order + 3);
        std::vector<std::vector<Jet>> e(h, std::vector<Jet>(d));
        for (std::size_t a = 0; a < h; ++a)
            for (std::size_t i = 0; i < d; ++i) e[a][i] = raw[a * d + i];
        const JetSpace& sp = JetSpace::get(d_, order + 3);

        std::vector<Jet> alpha0(d);
        for (std::size_t i = 0; i < d; ++i) {
            std::vector<std::vector<Jet>> m;
            for (const auto& row : e) {
                std::vector<Jet> r;
                for (std::size_t j = 0; j < d; ++j)
                    if (j != i) r.push_back(row[j]);
                m.push_back(std::move(r));
            }
            Jet det = detail::jet_determinant(sp, m);
            alpha0[i] = i % 2 == 0 ? det : -det;
        }
        std::vector<std::vector<std::vector<Jet>>> br(h, std::vector<std::vector<Jet>>(h));
        for (std::size_t a = 0; a < h; ++a)
            for (std::size_t b = a + 1; b < h; ++b) {
                br[a][b] = detail::jet_bracket(e[a], e[b]);
                for (const auto& x : br[a][b]) br[b][a].push_back(-x);
            }
        // v = ⋀ⁿdα₀ on the frame, dα₀(e_a, e_b) = −α₀([e_a, e_b])
        std::vector<int> perm(h);
        std::iota(perm.begin(), perm.end(), 0);
        Jet vol;
        do {
            int inversions = 0;
            for (std::size_t i = 0; i < h; ++i)
                for (std::size_t j = i + 1; j < h; ++j)
                    if (perm[i] > perm[j]) ++inversions;
            Jet t = Jet::constant(sp, inversions % 2 == 0 ? 1.0 : -1.0);
            for (std::size_t i = 0; i < h; i += 2)
                t = t * -detail::jet_pair(alpha0, br[static_cast<std::size_t>(perm[i])][static_cast<std::size_t>(perm[i + 1])]);
            vol = vol + t;
        } while (std::next_permutation(perm.begin(), perm.end()));
        vol = std::ldexp(1.0, -s.n()) * vol;
        Jet scale = static_cast<double>(s.orientation_sign()) * jet_pow(vol, Rational(-1, s.n()));
        std::vector<Jet> alpha(d);
        for (std::size_t i = 0; i < d; ++i) alpha[i] = scale * alpha0[i];

        std::vector<std::vector<Jet>> dalpha(d, std::vector<Jet>(d));
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i + 1; j < d; ++j) {
                dalpha[i][j] = alpha[j].derivative(static_cast<int>(i)) - alpha[i].derivative(static_cast<int>(j));
                dalpha[j][i] = -dalpha[i][j];
            }
        std::vector<std::vector<Jet>> m(d, std::vector<Jet>(d));
        for (std::size_t a = 0; a < h; ++a)
            for (std::size_t i = 0; i < d; ++i) {
                Jet t;
                for (std::size_t j = 0; j < d; ++j) t = t + dalpha[i][j] * e[a][j];
                m[a][i] = t;
            }
        m[h] = alpha;
        std::vector<Jet> reeb(d);
        {
            std::vector<Jet> cof(d);
            Jet det;
            for (std::size_t i = 0; i < d; ++i) {
                Jet minor = detail::jet_determinant(sp, detail::drop(m, h, i));
                cof[i] = (h + i) % 2 == 0 ? minor : -minor;
                det = det + alpha[i] * cof[i];
            }
            Jet inv = jet_pow(det, Rational(-1));
            for (std::size_t i = 0; i < d; ++i) reeb[i] = cof[i] * inv;
        }
        std::vector<std::vector<Jet>> basis(d, std::vector<Jet>(d));
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t a = 0; a < h; ++a) basis[i][a] = e[a][i];
            basis[i][h] = reeb[i];
        }
        Jet binv = jet_pow(detail::jet_determinant(sp, basis), Rational(-1));
        std::vector<std::vector<Jet>> theta(h, std::vector<Jet>(d));
        for (std::size_t a = 0; a < h; ++a)
            for (std::size_t i = 0; i < d; ++i) {
                Jet minor = detail::jet_determinant(sp, detail::drop(basis, i, a));
                theta[a][i] = ((i + a) % 2 == 0 ? minor : -minor) * binv;
            }

        auto keep = [&](const Jet& j) { return j.truncated(order_); };
        const std::size_t H = h, D = d;
        v_.reserve(H * D * 2 + 2 * D + D * D + H * H * H + 2 * H * H + H);
        for (std::size_t a = 0; a < H; ++a)
            for (std::size_t i = 0; i < D; ++i) v_.push_back(keep(e[a][i]));
        for (const auto& x : reeb) v_.push_back(keep(x));
        for (const auto& x : alpha) v_.push_back(keep(x));
        for (const auto& row : theta)
            for (const auto& x : row) v_.push_back(keep(x));
        for (const auto& row : dalpha)
            for (const auto& x : row) v_.push_back(keep(x));
        for (std::size_t i = 0; i < H; ++i)
            for (std::size_t j = 0; j < H; ++j)
                for (std::size_t k = 0; k < H; ++k)
                    v_.push_back(i == j ? Jet() : keep(detail::jet_pair(theta[k], br[i][j])));
        for (std::size_t i = 0; i < H; ++i)
            for (std::size_t j = 0; j < H; ++j) v_.push_back(i == j ? Jet() : keep(detail::jet_pair(alpha, br[i][j])));
        std::vector<std::vector<Jet>> xb;
        for (std::size_t j = 0; j < H; ++j) xb.push_back(detail::jet_bracket(reeb, e[j]));
        for (std::size_t j = 0; j < H; ++j)
            for (std::size_t k = 0; k < H; ++k) v_.push_back(keep(detail::jet_pair(theta[k], xb[j])));
        for (std::size_t j = 0; j < H; ++j) v_.push_back(keep(detail::jet_pair(alpha, xb[j])));

        o_frame_ = 0;
        o_reeb_ = H * D;
        o_alpha_ = o_reeb_ + D;
        o_theta_ = o_alpha_ + D;
        o_dalpha_ = o_theta_ + H * D;
        o_c_ = o_dalpha_ + D * D;
        o_c0_ = o_c_ + H * H * H;
        o_cxi_ = o_c0_ + H * H;
        o_cxi0_ = o_cxi_ + H * H;
    }

    int rank() const { return h_; }
    int dim() const { return d_; }
    int order() const { return order_; }
    const Point& point() const { return q_; }

    const Jet& c(int i, int j, int k) const { return at(o_c_, (i * h_ + j) * h_ + k); }
    const Jet& c0(int i, int j) const { return at(o_c0_, i * h_ + j); }
    const Jet& cxi(int j, int k) const { return at(o_cxi_, j * h_ + k); }
    const Jet& cxi0(int j) const { return at(o_cxi0_, j); }

    const Jet& frame(int a, int i) const { return at(o_frame_, a * d_ + i); }
    const Jet& reeb(int i) const { return at(o_reeb_, i); }
    const Jet& alpha(int i) const { return at(o_alpha_, i); }
    const Jet& theta(int a, int i) const { return at(o_theta_, a * d_ + i); }
    const Jet& dalpha(int i, int j) const { return at(o_dalpha_, i * d_ + j); }

    Jet frame_derivative(int dir, const Jet& f) const {
        if (dir < 0 || dir > h_) throw InputError("frame direction out of range");
        Jet out;
        for (int i = 0; i < d_; ++i) {
            const Jet& v = dir == 0 ? reeb(i) : frame(dir - 1, i);
            if (!v.is_zero()) out = out + v * f.derivative(i);
        }
        return out;
    }
    Jet partial(const Jet& f, int i) const { return f.derivative(i); }

  private:
    const Jet& at(std::size_t base, int k) const { return v_[base + static_cast<std::size_t>(k)]; }

    int h_, d_, order_;
    Point q_;
    std::vector<Jet> v_;
    std::size_t o_frame_, o_reeb_, o_alpha_, o_theta_, o_dalpha_, o_c_, o_c0_, o_cxi_, o_cxi0_;
};

inline JetFrame JetGeometry::at(const Point& q, int order) const {
    if (static_cast<int>(q.size()) != s_.dim()) throw InputError("point has the wrong dimension");
    return JetFrame(*this, q, order);
}

/// Whether symbolic differentiation of the structure functions is likely to
/// swell; such chart structures are evaluated with jets instead.
inline bool prefers_jets(const ContactStructure& s, std::size_t node_budget = 2000) {
    if (s.mode() == Mode::Lie) return false;
    const auto& b = s.brackets();
    std::size_t total = 0;
    for (const auto* v : {&b.hor, &b.vert, &b.xi_hor, &b.xi_vert})
        for (const auto& e : *v) total += node_count(e);
    return total > node_budget;
}

/// Throws unless the Reeb field is an infinitesimal isometry on the default samples.
inline void require_special(const ContactStructure& s) {
    auto r = s.check_special(s.default_samples());
    if (!r.special())
        throw GeometryError("structure is not special: the Reeb field is not an infinitesimal isometry "
                            "(contact residual " +
                            std::to_string(r.contact_residual) + ", metric residual " +
                            std::to_string(r.metric_residual) + ")");
}

/// Connection coefficients Γ^k_{aj} (∇_{e_a}e_j = Γ^k_{aj} e_k) and
/// Γ^k_{0j} (∇_ξ e_j = Γ^k_{0j} e_k), from
/// Γ^k_{aj} = ½(c^k_{aj} − c^j_{ak} − c^a_{jk}) and Γ^k_{0j} = c^k_{0j}.
template <class F>
class BasicConnection {
  public:
    using Scalar = typename F::Scalar;
    using TensorT = BasicTensor<Scalar>;

    explicit BasicConnection(F f) : f_(std::move(f)) {
        const int h = rank();
        gamma_.assign(static_cast<std::size_t>((h + 1) * h * h), Scalar{});
        for (int j = 0; j < h; ++j)
            for (int k = 0; k < h; ++k) gamma_ref(0, j, k) = f_.cxi(j, k);
        for (int a = 0; a < h; ++a)
            for (int j = 0; j < h; ++j)
                for (int k = 0; k < h; ++k) {
                    Scalar sum = add({f_.c(a, j, k), -f_.c(a, k, j), -f_.c(j, k, a)});
                    gamma_ref(a + 1, j, k) = sum.is_zero() ? Scalar{} : Rational(1, 2) * sum;
                }
    }

    const F& frame() const { return f_; }
    int rank() const { return f_.rank(); }

    /// Γ^k_{dir,j}; dir 0 is ξ, dir 1..2n is e_dir.
    const Scalar& gamma(int dir, int j, int k) const { return gamma_[slot(dir, j, k)]; }

    /// Overrides one coefficient (fault-injection fixtures).
    void set_gamma(int dir, int j, int k, Scalar v) { gamma_ref(dir, j, k) = std::move(v); }

    /// ∇_dir T with the slots of T kept horizontal.
    TensorT covariant_derivative(const TensorT& t, int dir) const {
        const int h = rank();
        if (t.h != h) throw InputError("tensor arity does not match the structure rank");
        TensorT out(h, t.upper, t.lower);
        std::vector<std::pair<int, int>> live; // nonzero Γ^k_{dir,j} as (j, k)
        for (int j = 0; j < h; ++j)
            for (int k = 0; k < h; ++k)
                if (!gamma(dir, j, k).is_zero()) live.emplace_back(j, k);
        for (std::size_t pos = 0; pos < t.size(); ++pos) {
            std::vector<Scalar> terms;
            Scalar d = f_.frame_derivative(dir, t.data[pos]);
            if (!d.is_zero()) terms.push_back(d);
            if (!live.empty()) {
                auto idx = t.index(pos);
                for (int s = 0; s < t.slots(); ++s) {
                    const int cur = idx[static_cast<std::size_t>(s)];
                    for (const auto& [j, k] : live) {
                        auto src = idx;
                        if (s < t.upper) {
                            // + Γ^{cur}_{dir,j} T^{..j..}
                            if (k != cur) continue;
                            src[static_cast<std::size_t>(s)] = j;
                            const Scalar& v = t[src];
                            if (!v.is_zero()) terms.push_back(gamma(dir, j, k) * v);
                        } else {
                            // − Γ^{k}_{dir,cur} T_{..k..}
                            if (j != cur) continue;
                            src[static_cast<std::size_t>(s)] = k;
                            const Scalar& v = t[src];
                            if (!v.is_zero()) terms.push_back(-(gamma(dir, j, k) * v));
                        }
                    }
                }
            }
            out.data[pos] = add(std::move(terms));
        }
        return out;
    }

    /// ∇T with the new (last) slot running over horizontal directions.
    TensorT nabla(const TensorT& t) const {
        const int h = rank();
        TensorT out(h, t.upper, t.lower + 1);
        for (int c = 0; c < h; ++c) {
            TensorT dc = covariant_derivative(t, c + 1);
            for (std::size_t pos = 0; pos < t.size(); ++pos)
                out.data[pos * static_cast<std::size_t>(h) + static_cast<std::size_t>(c)] = std::move(dc.data[pos]);
        }
        return out;
    }

  private:
    std::size_t slot(int dir, int j, int k) const {
        const int h = rank();
        if (dir < 0 || dir > h || j < 0 || j >= h || k < 0 || k >= h) throw InputError("connection index out of range");
        return static_cast<std::size_t>((dir * h + j) * h + k);
    }
    Scalar& gamma_ref(int dir, int j, int k) { return gamma_[slot(dir, j, k)]; }

    F f_;
    std::vector<Scalar> gamma_; // at (dir*h + j)*h + k
};

/// Curvature R^k_{ab,j} (R(e_a,e_b)e_j = R^k_{ab,j} e_k), R(ξ,·), dα and the
/// cached covariant derivatives ∇ⁱR, ∇ⁱdα together with their ξ-derivatives.
template <class F>
class BasicCurvature {
  public:
    using Scalar = typename F::Scalar;
    using TensorT = BasicTensor<Scalar>;
    static constexpr std::size_t default_max_components = std::size_t{1} << 16;

    explicit BasicCurvature(BasicConnection<F> c, int order = 1,
                            std::size_t max_components = default_max_components)
        : c_(std::move(c)), max_components_(max_components) {
        const int h = c_.rank();
        const F& f = c_.frame();
        auto G = [&](int dir, int j, int k) -> const Scalar& { return c_.gamma(dir, j, k); };
        TensorT r(h, 1, 3);
        for (int k = 0; k < h; ++k)
            for (int a = 0; a < h; ++a)
                for (int b = a + 1; b < h; ++b)
                    for (int j = 0; j < h; ++j) {
                        std::vector<Scalar> t{f.frame_derivative(a + 1, G(b + 1, j, k)),
                                              -f.frame_derivative(b + 1, G(a + 1, j, k))};
                        for (int m = 0; m < h; ++m) {
                            t.push_back(G(a + 1, m, k) * G(b + 1, j, m));
                            t.push_back(-(G(b + 1, m, k) * G(a + 1, j, m)));
                            t.push_back(-(f.c(a, b, m) * G(m + 1, j, k)));
                        }
                        t.push_back(-(f.c0(a, b) * G(0, j, k)));
                        Scalar v = add(std::move(t));
                        r[{k, b, a, j}] = -v;
                        r[{k, a, b, j}] = std::move(v);
                    }
        TensorT rx(h, 1, 2);
        for (int k = 0; k < h; ++k)
            for (int b = 0; b < h; ++b)
                for (int j = 0; j < h; ++j) {
                    std::vector<Scalar> t{f.frame_derivative(0, G(b + 1, j, k)),
                                          -f.frame_derivative(b + 1, G(0, j, k))};
                    for (int m = 0; m < h; ++m) {
                        t.push_back(G(0, m, k) * G(b + 1, j, m));
                        t.push_back(-(G(b + 1, m, k) * G(0, j, m)));
                        t.push_back(-(f.cxi(b, m) * G(m + 1, j, k)));
                    }
                    t.push_back(-(f.cxi0(b) * G(0, j, k)));
                    rx[{k, b, j}] = add(std::move(t));
                }
        TensorT da(h, 0, 2);
        for (int a = 0; a < h; ++a)
            for (int b = 0; b < h; ++b)
                if (!f.c0(a, b).is_zero()) da[{a, b}] = -f.c0(a, b);
        reeb_curvature_ = std::move(rx);
        r_.push_back(std::move(r));
        da_.push_back(std::move(da));
        extend(order);
    }

    const BasicConnection<F>& connection() const { return c_; }
    const F& frame() const { return c_.frame(); }
    int rank() const { return c_.rank(); }
    int order() const { return static_cast<int>(r_.size()) - 1; }
    std::size_t max_components() const { return max_components_; }

    const TensorT& R() const { return r_.front(); }
    /// R(ξ,e_b)e_j at [k, b, j].
    const TensorT& reeb_curvature() const { return reeb_curvature_; }
    /// dα_{ab} = dα(e_a, e_b).
    const TensorT& dalpha() const { return da_.front(); }

    const TensorT& nabla_R(int i) const { return cached(r_, i, "∇ⁱR"); }
    const TensorT& nabla_dalpha(int i) const { return cached(da_, i, "∇ⁱdα"); }
    /// ∇_ξ(∇ⁱR) and ∇_ξ(∇ⁱdα); available for i < order().
    const TensorT& xi_nabla_R(int i) const { return cached(xr_, i, "∇_ξ∇ⁱR"); }
    const TensorT& xi_nabla_dalpha(int i) const { return cached(xda_, i, "∇_ξ∇ⁱdα"); }

    /// Whether ∇^order R fits in the component budget.
    bool fits(int order) const { return TensorT::count(rank(), 4 + order) <= max_components_; }

    /// Caches ∇ⁱR, ∇ⁱdα for i ≤ order and their ξ-derivatives for i < order.
    void extend(int order) {
        if (order < 0) throw InputError("derivative order must be >= 0");
        if (!fits(order))
            throw LimitError("∇^" + std::to_string(order) + "R would have " +
                             std::to_string(TensorT::count(rank(), 4 + order)) + " components (bound " +
                             std::to_string(max_components_) + ")");
        while (static_cast<int>(r_.size()) <= order) {
            xr_.push_back(c_.covariant_derivative(r_.back(), 0));
            xda_.push_back(c_.covariant_derivative(da_.back(), 0));
            TensorT nr = c_.nabla(r_.back());
            TensorT nd = c_.nabla(da_.back());
            r_.push_back(std::move(nr));
            da_.push_back(std::move(nd));
        }
    }

  private:
    static const TensorT& cached(const std::deque<TensorT>& d, int i, const char* what) {
        if (i < 0 || i >= static_cast<int>(d.size()))
            throw InputError(std::string(what) + " for i = " + std::to_string(i) + " has not been computed");
        return d[static_cast<std::size_t>(i)];
    }

    BasicConnection<F> c_;
    std::size_t max_components_;
    TensorT reeb_curvature_;
    std::deque<TensorT> r_, da_, xr_, xda_;
};

using Connection = BasicConnection<SymbolicFrame>;
using Curvature = BasicCurvature<SymbolicFrame>;
using JetConnection = BasicConnection<JetFrame>;
using JetCurvature = BasicCurvature<JetFrame>;

/// Symbolic connection of a special structure; refuses non-special input
/// unless `check` is false.
inline Connection make_connection(ContactStructure s, bool check = true) {
    if (check) require_special(s);
    return Connection(SymbolicFrame(std::move(s)));
}

/// Jet curvature about q, with ∇ⁱR available for i ≤ order.
inline JetCurvature jet_curvature(const JetGeometry& g, const Point& q, int order) {
    return JetCurvature(JetConnection(g.at(q, order + 1)), order);
}

/// Residual groups of the connection and curvature identities; needs order ≥ 1.
template <class F>
std::vector<std::pair<std::string, std::vector<typename F::Scalar>>> geometry_residuals(const BasicCurvature<F>& cv) {
    using S = typename F::Scalar;
    const auto& c = cv.connection();
    const F& f = cv.frame();
    const int h = cv.rank();
    std::vector<S> metric, torsion, b1, b2, rx, skew, dab;
    for (int dir = 0; dir <= h; ++dir)
        for (int j = 0; j < h; ++j)
            for (int k = j; k < h; ++k) metric.push_back(c.gamma(dir, j, k) + c.gamma(dir, k, j));
    for (int a = 0; a < h; ++a)
        for (int j = 0; j < h; ++j)
            for (int k = 0; k < h; ++k) torsion.push_back(c.gamma(a + 1, j, k) - c.gamma(j + 1, a, k) - f.c(a, j, k));
    for (int j = 0; j < h; ++j)
        for (int k = 0; k < h; ++k) torsion.push_back(c.gamma(0, j, k) - f.cxi(j, k));
    const auto& R = cv.R();
    const auto& dR = cv.nabla_R(1);
    const auto& dD = cv.nabla_dalpha(1);
    for (int k = 0; k < h; ++k)
        for (int x = 0; x < h; ++x)
            for (int y = 0; y < h; ++y)
                for (int z = 0; z < h; ++z) {
                    b1.push_back(add({R[{k, x, y, z}], R[{k, y, z, x}], R[{k, z, x, y}]}));
                    skew.push_back(R[{k, x, y, z}] + R[{z, x, y, k}]);
                    skew.push_back(R[{k, x, y, z}] + R[{k, y, x, z}]);
                    for (int j = 0; j < h; ++j)
                        b2.push_back(add({dR[{k, y, z, j, x}], dR[{k, z, x, j, y}], dR[{k, x, y, j, z}]}));
                }
    for (const auto& e : cv.reeb_curvature().data) rx.push_back(e);
    for (int x = 0; x < h; ++x)
        for (int y = 0; y < h; ++y)
            for (int z = 0; z < h; ++z) dab.push_back(add({dD[{y, z, x}], dD[{z, x, y}], dD[{x, y, z}]}));
    return {{"metricity", metric},     {"torsion", torsion},         {"bianchi_first", b1},
            {"bianchi_second", b2},    {"reeb_curvature", rx},       {"curvature_skew", skew},
            {"dalpha_bianchi", dab}};
}

/// Residual checks of the connection and curvature identities at `points`
/// (symbolic curvature built with order ≥ 1).
inline std::vector<Check> verify_geometry(const Curvature& cv, const std::vector<Point>& points, double tol = 1e-10) {
    std::vector<Check> out;
    for (auto& [name, exprs] : geometry_residuals(cv)) out.push_back(residual_check(name, exprs, points, tol));
    return out;
}

/// Same checks with jets rebuilt about every point.
inline std::vector<Check> verify_geometry(const JetGeometry& g, const std::vector<Point>& points, double tol = 1e-10) {
    std::vector<Check> out;
    for (const auto& p : points) {
        auto groups = geometry_residuals(jet_curvature(g, p, 1));
        if (out.empty())
            for (const auto& grp : groups) out.push_back({grp.first, 0.0, 0, tol, true});
        for (std::size_t i = 0; i < groups.size(); ++i) {
            for (const auto& v : groups[i].second)
                out[i].max_residual = std::max(out[i].max_residual, std::abs(v.value()));
            ++out[i].points;
        }
    }
    if (out.empty())
        for (const char* n : {"metricity", "torsion", "bianchi_first", "bianchi_second", "reeb_curvature",
                              "curvature_skew", "dalpha_bianchi"})
            out.push_back({n, 0.0, 0, tol, true});
    for (auto& c : out) c.pass = c.max_residual < tol;
    return out;
}

} // namespace srk
