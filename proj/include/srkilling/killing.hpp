#pragma once

// Infinitesimal isometries: the operator A_Z, generator spaces at a point,
// transport of generators along curves, reconstruction on grids and the
// residual checks of the Killing equations.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "srkilling/geometry.hpp"

namespace srk {

/// (X, A, c) at q: X frame components of a horizontal vector, A skew acting on
/// frame components as column vectors, c the ξ-component.
struct Generator {
    Eigen::VectorXd X;
    Eigen::MatrixXd A;
    double c = 0.0;
    Point q;

    int rank() const { return static_cast<int>(X.size()); }

    /// dim H ⊕ E ⊕ ℝ = h + h(h−1)/2 + 1.
    static int unknowns(int h) { return h + h * (h - 1) / 2 + 1; }

    static Generator zero(int h, Point q) {
        return {Eigen::VectorXd::Zero(h), Eigen::MatrixXd::Zero(h, h), 0.0, std::move(q)};
    }

    /// (X, A(p,q) for p > q row by row, c).
    Eigen::VectorXd to_vector() const {
        const int h = rank();
        Eigen::VectorXd u(unknowns(h));
        int k = 0;
        for (int i = 0; i < h; ++i) u[k++] = X[i];
        for (int p = 1; p < h; ++p)
            for (int r = 0; r < p; ++r) u[k++] = A(p, r);
        u[k] = c;
        return u;
    }

    static Generator from_vector(const Eigen::VectorXd& u, int h, Point q) {
        if (u.size() != unknowns(h)) throw InputError("generator vector has the wrong length");
        Generator g = zero(h, std::move(q));
        int k = 0;
        for (int i = 0; i < h; ++i) g.X[i] = u[k++];
        for (int p = 1; p < h; ++p)
            for (int r = 0; r < p; ++r) {
                g.A(p, r) = u[k];
                g.A(r, p) = -u[k++];
            }
        g.c = u[k];
        return g;
    }

    double skew_residual() const { return A.size() == 0 ? 0.0 : (A + A.transpose()).cwiseAbs().maxCoeff(); }
};

/// Componentwise max |a − b| over X, A and c.
inline double deviation(const Generator& a, const Generator& b) {
    if (a.rank() != b.rank()) throw InputError("generators have different ranks");
    double d = std::abs(a.c - b.c);
    if (a.rank() > 0) {
        d = std::max(d, (a.X - b.X).cwiseAbs().maxCoeff());
        d = std::max(d, (a.A - b.A).cwiseAbs().maxCoeff());
    }
    return d;
}

// ---------------------------------------------------------------------------
// Derivations and generator spaces

/// (∇_{X+cξ}T)(q) + (A·T)(q); A acts by +A on upper slots and by −T(…, A·, …)
/// on lower slots.
inline NumTensor derivation_apply(const Generator& g, const NumTensor& T, const NumTensor& nablaT,
                                  const NumTensor& xiT) {
    const int h = T.h;
    if (g.rank() != h) throw InputError("generator rank does not match the tensor");
    if (nablaT.h != h || nablaT.upper != T.upper || nablaT.lower != T.lower + 1)
        throw InputError("derivation needs ∇T with one extra lower slot");
    if (xiT.h != h || xiT.upper != T.upper || xiT.lower != T.lower)
        throw InputError("derivation needs ∇_ξT of the same shape as T");
    const int slots = T.slots();
    std::vector<std::size_t> stride(static_cast<std::size_t>(slots), 1);
    for (int s = slots - 1; s-- > 0;) stride[static_cast<std::size_t>(s)] = stride[static_cast<std::size_t>(s) + 1] * static_cast<std::size_t>(h);
    const bool has_a = g.A.size() > 0 && g.A.cwiseAbs().maxCoeff() != 0.0;
    NumTensor out(h, T.upper, T.lower);
    for (std::size_t k = 0; k < T.size(); ++k) {
        double v = g.c * xiT.data[k];
        for (int c = 0; c < h; ++c) v += g.X[c] * nablaT.data[k * static_cast<std::size_t>(h) + static_cast<std::size_t>(c)];
        if (has_a) {
            for (int s = 0; s < slots; ++s) {
                const std::size_t st = stride[static_cast<std::size_t>(s)];
                const int digit = static_cast<int>((k / st) % static_cast<std::size_t>(h));
                const std::size_t base = k - static_cast<std::size_t>(digit) * st;
                for (int m = 0; m < h; ++m) {
                    const double t = T.data[base + static_cast<std::size_t>(m) * st];
                    if (s < T.upper)
                        v += g.A(digit, m) * t;
                    else
                        v -= g.A(m, digit) * t;
                }
            }
        }
        out.data[k] = v;
    }
    return out;
}

/// Rows of f_q contributed by order i: components of D(∇ⁱR) then D(∇ⁱdα), one
/// column per generator coordinate. Needs values through order i + 1.
inline Eigen::MatrixXd f_block(const TensorValues& v, int i, const Point& q) {
    if (i < 0 || i + 1 > v.order()) throw InputError("tensor values do not reach order " + std::to_string(i + 1));
    const auto& R = v.R[static_cast<std::size_t>(i)];
    const auto& D = v.dalpha[static_cast<std::size_t>(i)];
    const int h = R.h;
    const int cols = Generator::unknowns(h);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(R.size() + D.size()), cols);
    for (int j = 0; j < cols; ++j) {
        Generator g = Generator::from_vector(Eigen::VectorXd::Unit(cols, j), h, q);
        auto dr = derivation_apply(g, R, v.R[static_cast<std::size_t>(i) + 1], v.xi_R[static_cast<std::size_t>(i)]);
        auto dd = derivation_apply(g, D, v.dalpha[static_cast<std::size_t>(i) + 1],
                                   v.xi_dalpha[static_cast<std::size_t>(i)]);
        Eigen::Index r = 0;
        for (double x : dr.data) m(r++, j) = x;
        for (double x : dd.data) m(r++, j) = x;
    }
    return m;
}

/// The assembled matrix of f_q through order m.
inline Eigen::MatrixXd f_matrix(const TensorValues& v, int m, const Point& q) {
    std::vector<Eigen::MatrixXd> blocks;
    Eigen::Index rows = 0;
    for (int i = 0; i <= m; ++i) {
        blocks.push_back(f_block(v, i, q));
        rows += blocks.back().rows();
    }
    Eigen::MatrixXd out(rows, blocks.front().cols());
    Eigen::Index r = 0;
    for (const auto& b : blocks) {
        out.middleRows(r, b.rows()) = b;
        r += b.rows();
    }
    return out;
}

struct GeneratorSpaceOptions {
    int order = -1;  // −1: increase m until the dimensions stabilize
    int m_max = 6;
    double rel_tol = 1e-9;
    double abs_floor = 1e-12;
};

struct GeneratorSpace {
    Point q;
    int rank = 0;
    int m_used = -1;
    std::vector<int> dims;
    std::vector<Generator> basis;
    Eigen::MatrixXd B;  // basis as orthonormal columns in generator coordinates
    std::vector<double> singular_values;
    double threshold = 0.0;
    bool certified = false;
    std::string note;

    int dim() const { return dims.empty() ? Generator::unknowns(rank) : dims.back(); }

    /// ‖u − BBᵀu‖ for the generator's coordinate vector u.
    double membership_residual(const Generator& g) const {
        Eigen::VectorXd u = g.to_vector();
        if (B.cols() == 0) return u.norm();
        return (u - B * (B.transpose() * u)).norm();
    }
};

/// 𝔦ₘ(q) as the kernel of f_q, by SVD. With `order` unset m grows until three
/// consecutive dimensions agree, m_max is passed, or the component bound is hit.
inline GeneratorSpace generator_space(const Geometry& g, const Point& q, const GeneratorSpaceOptions& opt = {}) {
    if (opt.order < -1) throw InputError("order must be auto or >= 0");
    if (opt.rel_tol <= 0 || opt.abs_floor <= 0) throw InputError("rank tolerances must be positive");
    const int h = g.rank();
    const int cols = Generator::unknowns(h);
    const int last = opt.order >= 0 ? opt.order : opt.m_max;
    GeneratorSpace out;
    out.q = q;
    out.rank = h;
    Eigen::MatrixXd M(0, cols);
    Eigen::MatrixXd V = Eigen::MatrixXd::Identity(cols, cols);
    int kernel = cols;
    for (int m = 0; m <= last; ++m) {
        if (!g.fits(m + 1)) {
            out.note = "component bound reached before order " + std::to_string(m);
            break;
        }
        TensorValues v = g.values(q, m + 1);
        Eigen::MatrixXd blk = f_block(v, m, q);
        Eigen::MatrixXd next(M.rows() + blk.rows(), cols);
        next << M, blk;
        M = std::move(next);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const double smax = sv.size() ? sv[0] : 0.0;
        out.threshold = std::max(opt.rel_tol * smax, opt.abs_floor);
        int r = 0;
        while (r < sv.size() && sv[r] > out.threshold) ++r;
        kernel = cols - r;
        V = svd.matrixV();
        out.singular_values.assign(sv.data(), sv.data() + sv.size());
        out.dims.push_back(kernel);
        out.m_used = m;
        const std::size_t n = out.dims.size();
        out.certified = n >= 3 && out.dims[n - 1] == out.dims[n - 2] && out.dims[n - 2] == out.dims[n - 3];
        if (opt.order < 0 && out.certified) break;
    }
    if (out.dims.empty()) throw LimitError("component bound too small for any generator space");
    if (opt.order < 0 && !out.certified && out.note.empty())
        out.note = "dimensions did not stabilize by m = " + std::to_string(opt.m_max);
    out.B = V.rightCols(kernel);
    for (int j = 0; j < kernel; ++j) out.basis.push_back(Generator::from_vector(out.B.col(j), h, q));
    return out;
}

// ---------------------------------------------------------------------------
// A_Z and the Killing residuals

/// Frame data of a coordinate vector field Z.
template <class S>
struct FieldFrameData {
    std::vector<S> X;                     // θ^a(Z)
    BasicTensor<S> A;                     // A^k_j at [k, j]
    S c;                                  // α(Z)
    std::vector<std::vector<S>> bracket;  // [Z, e_j]^i
};

template <class F>
FieldFrameData<typename F::Scalar> field_frame_data(const BasicConnection<F>& conn,
                                                    const std::vector<typename F::Scalar>& Z) {
    using S = typename F::Scalar;
    const F& f = conn.frame();
    const int h = f.rank(), d = f.dim();
    if (static_cast<int>(Z.size()) != d)
        throw InputError("field has " + std::to_string(Z.size()) + " components, expected " + std::to_string(d));
    FieldFrameData<S> out;
    {
        std::vector<S> t;
        for (int i = 0; i < d; ++i) t.push_back(f.alpha(i) * Z[static_cast<std::size_t>(i)]);
        out.c = add(std::move(t));
    }
    for (int a = 0; a < h; ++a) {
        std::vector<S> t;
        for (int i = 0; i < d; ++i) t.push_back(f.theta(a, i) * Z[static_cast<std::size_t>(i)]);
        out.X.push_back(add(std::move(t)));
    }
    for (int j = 0; j < h; ++j) {
        std::vector<S> br;
        for (int k = 0; k < d; ++k) {
            std::vector<S> t;
            for (int i = 0; i < d; ++i) {
                t.push_back(Z[static_cast<std::size_t>(i)] * f.partial(f.frame(j, k), i));
                t.push_back(-(f.frame(j, i) * f.partial(Z[static_cast<std::size_t>(k)], i)));
            }
            br.push_back(add(std::move(t)));
        }
        out.bracket.push_back(std::move(br));
    }
    out.A = BasicTensor<S>(h, 1, 1);
    for (int k = 0; k < h; ++k)
        for (int j = 0; j < h; ++j) {
            std::vector<S> t;
            for (int i = 0; i < d; ++i) t.push_back(f.theta(k, i) * out.bracket[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
            for (int a = 0; a < h; ++a) t.push_back(-(out.X[static_cast<std::size_t>(a)] * conn.gamma(a + 1, j, k)));
            t.push_back(-(out.c * conn.gamma(0, j, k)));
            out.A[{k, j}] = add(std::move(t));
        }
    return out;
}

template <class S>
using ResidualGroups = std::vector<std::pair<std::string, std::vector<S>>>;

/// Residuals of the Killing identities for Z (A_Z ξ is taken to be 0).
template <class F>
ResidualGroups<typename F::Scalar> killing_residuals(const BasicCurvature<F>& cv,
                                                     const std::vector<typename F::Scalar>& Z) {
    using S = typename F::Scalar;
    const auto& conn = cv.connection();
    const F& f = cv.frame();
    const int h = f.rank(), d = f.dim();
    auto fd = field_frame_data(conn, Z);
    auto coframe = [&](int a, const std::vector<S>& v) {
        std::vector<S> t;
        for (int i = 0; i < d; ++i) t.push_back(f.theta(a, i) * v[static_cast<std::size_t>(i)]);
        return add(std::move(t));
    };
    auto alpha_of = [&](const std::vector<S>& v) {
        std::vector<S> t;
        for (int i = 0; i < d; ++i) t.push_back(f.alpha(i) * v[static_cast<std::size_t>(i)]);
        return add(std::move(t));
    };
    std::vector<S> reeb_br;  // [ξ, Z]
    for (int k = 0; k < d; ++k) {
        std::vector<S> t;
        for (int i = 0; i < d; ++i) {
            t.push_back(f.reeb(i) * f.partial(Z[static_cast<std::size_t>(k)], i));
            t.push_back(-(Z[static_cast<std::size_t>(i)] * f.partial(f.reeb(k), i)));
        }
        reeb_br.push_back(add(std::move(t)));
    }

    std::vector<S> contact, metric, skew, xi_a, curv, hor, reeb, lie;
    for (int j = 0; j < h; ++j) {
        std::vector<S> t{f.frame_derivative(j + 1, fd.c)};
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k)
                t.push_back(f.dalpha(i, k) * Z[static_cast<std::size_t>(i)] * f.frame(j, k));
        contact.push_back(add(std::move(t)));
    }
    std::vector<std::vector<S>> th(static_cast<std::size_t>(h));  // θ^a([Z, e_j]) at [j][a]
    for (int j = 0; j < h; ++j)
        for (int a = 0; a < h; ++a) th[static_cast<std::size_t>(j)].push_back(coframe(a, fd.bracket[static_cast<std::size_t>(j)]));
    for (int i = 0; i < h; ++i)
        for (int j = i; j < h; ++j)
            metric.push_back(th[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] + th[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
    for (int k = 0; k < h; ++k)
        for (int j = k; j < h; ++j) skew.push_back(fd.A[{k, j}] + fd.A[{j, k}]);
    for (const auto& e : conn.covariant_derivative(fd.A, 0).data) xi_a.push_back(e);
    auto nA = conn.nabla(fd.A);
    const auto& R = cv.R();
    const auto& RX = cv.reeb_curvature();
    for (int k = 0; k < h; ++k)
        for (int j = 0; j < h; ++j)
            for (int a = 0; a < h; ++a) {
                std::vector<S> t{nA[{k, j, a}], -(fd.c * RX[{k, a, j}])};
                for (int b = 0; b < h; ++b) t.push_back(-(fd.X[static_cast<std::size_t>(b)] * R[{k, b, a, j}]));
                curv.push_back(add(std::move(t)));
            }
    BasicTensor<S> Xt(h, 1, 0);
    for (int k = 0; k < h; ++k) Xt.data[static_cast<std::size_t>(k)] = fd.X[static_cast<std::size_t>(k)];
    auto nX = conn.nabla(Xt);
    for (int k = 0; k < h; ++k)
        for (int a = 0; a < h; ++a) hor.push_back(nX[{k, a}] + fd.A[{k, a}]);
    for (const auto& e : conn.covariant_derivative(Xt, 0).data) hor.push_back(e);
    reeb = reeb_br;
    for (int j = 0; j < h; ++j) lie.push_back(-alpha_of(fd.bracket[static_cast<std::size_t>(j)]));
    lie.push_back(alpha_of(reeb_br));
    return {{"contact", contact},           {"metric", metric},         {"a_skew", skew},
            {"xi_derivative_a", xi_a},      {"curvature", curv},        {"horizontal_part", hor},
            {"reeb_commutes", reeb},        {"lie_alpha", lie}};
}

/// Killing equation of the Riemannian extension g̃ (g on H, ξ unit and
/// orthogonal to H) over the frame e_1..e_h, ξ.
template <class F>
ResidualGroups<typename F::Scalar> extension_residuals(const BasicCurvature<F>& cv,
                                                       const std::vector<typename F::Scalar>& Z) {
    using S = typename F::Scalar;
    const F& f = cv.frame();
    const int h = f.rank(), d = f.dim();
    if (static_cast<int>(Z.size()) != d)
        throw InputError("field has " + std::to_string(Z.size()) + " components, expected " + std::to_string(d));
    // comp[p][q]: component q (θ^q, or α for q = h) of [Z, u_p], u_h = ξ
    std::vector<std::vector<S>> comp;
    for (int p = 0; p <= h; ++p) {
        std::vector<S> br;
        for (int k = 0; k < d; ++k) {
            const S& uk = p < h ? f.frame(p, k) : f.reeb(k);
            std::vector<S> t;
            for (int i = 0; i < d; ++i) {
                const S& ui = p < h ? f.frame(p, i) : f.reeb(i);
                t.push_back(Z[static_cast<std::size_t>(i)] * f.partial(uk, i));
                t.push_back(-(ui * f.partial(Z[static_cast<std::size_t>(k)], i)));
            }
            br.push_back(add(std::move(t)));
        }
        std::vector<S> row;
        for (int q = 0; q <= h; ++q) {
            std::vector<S> t;
            for (int i = 0; i < d; ++i)
                t.push_back((q < h ? f.theta(q, i) : f.alpha(i)) * br[static_cast<std::size_t>(i)]);
            row.push_back(add(std::move(t)));
        }
        comp.push_back(std::move(row));
    }
    std::vector<S> res;
    for (int p = 0; p <= h; ++p)
        for (int q = p; q <= h; ++q)
            res.push_back(comp[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] +
                          comp[static_cast<std::size_t>(q)][static_cast<std::size_t>(p)]);
    return {{"extended_killing", res}};
}

inline std::vector<Check> verify_killing(const Geometry& g, const std::vector<Expr>& Z, const std::vector<Point>& points,
                                         double tol = 1e-9) {
    g.structure().require_chart("verify_killing");
    return g.run_checks(points, tol, Z, 0, 2, [](const auto& cv, const auto& z) { return killing_residuals(cv, z); });
}

inline std::vector<Check> riemannian_extension_check(const Geometry& g, const std::vector<Expr>& Z,
                                                     const std::vector<Point>& points, double tol = 1e-9) {
    g.structure().require_chart("riemannian_extension_check");
    return g.run_checks(points, tol, Z, 0, 1,
                        [](const auto& cv, const auto& z) { return extension_residuals(cv, z); });
}

struct AZResult {
    Generator gen;
    double contact_residual = 0.0;  // max_j |α([Z, e_j])| at q
};

/// (PZ, A_Z, α(Z)) at q. A is returned even when Z is not contact at q.
inline AZResult a_z_matrix(const Geometry& g, const std::vector<Expr>& Z, const Point& q) {
    const auto& s = g.structure();
    s.require_chart("a_z_matrix");
    const int h = g.rank(), d = g.dim();
    AZResult out{Generator::zero(h, q), 0.0};
    auto fill = [&](const auto& fd, auto value) {
        for (int a = 0; a < h; ++a) out.gen.X[a] = value(fd.X[static_cast<std::size_t>(a)]);
        for (int k = 0; k < h; ++k)
            for (int j = 0; j < h; ++j) out.gen.A(k, j) = value(fd.A[{k, j}]);
        out.gen.c = value(fd.c);
    };
    auto contact = [&](const auto& fd, const auto& alpha, auto value) {
        for (int j = 0; j < h; ++j) {
            double v = 0.0;
            for (int i = 0; i < d; ++i)
                v += value(alpha(i)) * value(fd.bracket[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
            out.contact_residual = std::max(out.contact_residual, std::abs(v));
        }
    };
    if (g.uses_jets()) {
        auto cv = g.jet_curvature_at(q, 0, 1);
        auto zj = JetTape(Z).eval(q, 1);
        auto fd = field_frame_data(cv.connection(), zj);
        auto value = [](const Jet& j) { return j.value(); };
        fill(fd, value);
        contact(fd, [&](int i) -> const Jet& { return cv.frame().alpha(i); }, value);
    } else {
        const auto& conn = g.symbolic(0).connection();
        auto fd = field_frame_data(conn, Z);
        auto value = [&](const Expr& e) { return evaluate(e, q); };
        fill(fd, value);
        contact(fd, [&](int i) -> const Expr& { return s.alpha()[static_cast<std::size_t>(i)]; }, value);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Curves and transport

/// A parametrized curve t ∈ [t0, t1] with position and velocity.
struct Curve {
    double t0 = 0.0;
    double t1 = 1.0;
    std::function<void(double, Point&, Point&)> eval;

    Point position(double t) const {
        Point p, v;
        eval(t, p, v);
        return p;
    }
    Point start() const { return position(t0); }
    Point end() const { return position(t1); }

    /// Coordinates as expressions in variable 0 (t).
    static Curve from_exprs(const std::vector<Expr>& gamma, double t0, double t1) {
        if (!(t1 > t0)) throw InputError("curve needs t0 < t1");
        std::vector<Expr> all = gamma;
        for (const auto& e : gamma) all.push_back(differentiate(e, 0));
        auto tape = std::make_shared<CompiledExprs>(all);
        const std::size_t d = gamma.size();
        Curve c;
        c.t0 = t0;
        c.t1 = t1;
        c.eval = [tape, d](double t, Point& p, Point& v) {
            std::vector<double> out(2 * d);
            double tt[1] = {t};
            tape->eval(tt, out);
            p.assign(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(d));
            v.assign(out.begin() + static_cast<std::ptrdiff_t>(d), out.end());
        };
        return c;
    }

    /// Straight segment from a (t = 0) to b (t = 1).
    static Curve segment(Point a, Point b) {
        if (a.size() != b.size()) throw InputError("segment endpoints differ in dimension");
        Curve c;
        c.eval = [a = std::move(a), b = std::move(b)](double t, Point& p, Point& v) {
            p.resize(a.size());
            v.resize(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) {
                v[i] = b[i] - a[i];
                p[i] = a[i] + t * v[i];
            }
        };
        return c;
    }
};

inline double max_distance(const Point& a, const Point& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

struct TransportResult {
    Generator end;
    double skew_drift = 0.0;        // max ‖A + Aᵀ‖∞ over the steps
    double vertical_speed = 0.0;    // max |α(γ̇)| over the evaluation points
    std::size_t steps = 0;
};

namespace detail {

// Coefficients of the linear transport system at one curve point.
struct TransportCoeffs {
    PointData pd;
    Eigen::VectorXd v;  // θ(γ̇)
    double v0 = 0.0;    // α(γ̇)
    Eigen::MatrixXd G;  // Γ(γ̇): G(k, j) = v^a Γ^k_{aj} + v0 Γ^k_{0j}
};

inline TransportCoeffs transport_coeffs(const Geometry& g, const Curve& curve, double t) {
    Point p, vel;
    curve.eval(t, p, vel);
    TransportCoeffs tc;
    tc.pd = g.at(p);
    const int h = tc.pd.h, d = tc.pd.d;
    tc.v = Eigen::VectorXd::Zero(h);
    for (int a = 0; a < h; ++a)
        for (int i = 0; i < d; ++i) tc.v[a] += tc.pd.Th(a, i) * vel[static_cast<std::size_t>(i)];
    for (int i = 0; i < d; ++i) tc.v0 += tc.pd.alpha[static_cast<std::size_t>(i)] * vel[static_cast<std::size_t>(i)];
    tc.G = Eigen::MatrixXd::Zero(h, h);
    for (int k = 0; k < h; ++k)
        for (int j = 0; j < h; ++j) {
            double s = tc.v0 * tc.pd.G(0, j, k);
            for (int a = 0; a < h; ++a) s += tc.v[a] * tc.pd.G(a + 1, j, k);
            tc.G(k, j) = s;
        }
    return tc;
}

// ẋ = −Av − Gx, Ȧ = R(x, γ̇) − GA + AG, ċ = −dα(x, v)
inline void transport_rhs(const TransportCoeffs& tc, const Eigen::VectorXd& x, const Eigen::MatrixXd& A,
                          Eigen::VectorXd& dx, Eigen::MatrixXd& dA, double& dc) {
    const int h = tc.pd.h;
    dx = -A * tc.v - tc.G * x;
    dA = A * tc.G - tc.G * A;
    for (int k = 0; k < h; ++k)
        for (int j = 0; j < h; ++j) {
            double s = 0.0;
            for (int b = 0; b < h; ++b) {
                if (x[b] == 0.0) continue;
                for (int a = 0; a < h; ++a) s += tc.pd.Rc(k, b, a, j) * x[b] * tc.v[a];
                s -= tc.pd.Rx(k, b, j) * x[b] * tc.v0;  // R(x, ξ) = −R(ξ, x)
            }
            dA(k, j) += s;
        }
    dc = 0.0;
    for (int a = 0; a < h; ++a)
        for (int b = 0; b < h; ++b) dc += x[a] * tc.v[b] * tc.pd.C0(a, b);
}

} // namespace detail

/// Classical RK4 for the prolongation system along the curve, with
/// N = ⌈(t1 − t0)/h⌉ equal steps.
inline TransportResult transport(const Geometry& g, const Generator& gen, const Curve& curve, double h = 1e-3) {
    g.structure().require_chart("transport");
    if (!(h > 0)) throw InputError("step must be > 0");
    if (gen.rank() != g.rank()) throw InputError("generator rank does not match the structure");
    if (!(curve.t1 > curve.t0)) throw InputError("curve needs t0 < t1");
    const Point start = curve.start();
    if (gen.q.size() != start.size() || max_distance(gen.q, start) >= 1e-9)
        throw InputError("generator is not based at the curve start");
    const double len = curve.t1 - curve.t0;
    const auto N = static_cast<std::size_t>(std::max(1.0, std::ceil(len / h - 1e-9)));
    const double dt = len / static_cast<double>(N);

    TransportResult out;
    Eigen::VectorXd x = gen.X;
    Eigen::MatrixXd A = gen.A;
    double c = gen.c;
    out.skew_drift = gen.skew_residual();
    auto c0 = detail::transport_coeffs(g, curve, curve.t0);
    out.vertical_speed = std::abs(c0.v0);
    for (std::size_t n = 0; n < N; ++n) {
        const double t = curve.t0 + static_cast<double>(n) * dt;
        const double t_end = n + 1 == N ? curve.t1 : t + dt;
        auto cm = detail::transport_coeffs(g, curve, t + 0.5 * dt);
        auto c1 = detail::transport_coeffs(g, curve, t_end);
        out.vertical_speed = std::max({out.vertical_speed, std::abs(cm.v0), std::abs(c1.v0)});
        Eigen::VectorXd k1x, k2x, k3x, k4x;
        Eigen::MatrixXd k1A, k2A, k3A, k4A;
        double k1c, k2c, k3c, k4c;
        detail::transport_rhs(c0, x, A, k1x, k1A, k1c);
        detail::transport_rhs(cm, x + 0.5 * dt * k1x, A + 0.5 * dt * k1A, k2x, k2A, k2c);
        detail::transport_rhs(cm, x + 0.5 * dt * k2x, A + 0.5 * dt * k2A, k3x, k3A, k3c);
        detail::transport_rhs(c1, x + dt * k3x, A + dt * k3A, k4x, k4A, k4c);
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        A += dt / 6.0 * (k1A + 2.0 * k2A + 2.0 * k3A + k4A);
        c += dt / 6.0 * (k1c + 2.0 * k2c + 2.0 * k3c + k4c);
        if (A.size() > 0) out.skew_drift = std::max(out.skew_drift, (A + A.transpose()).cwiseAbs().maxCoeff());
        c0 = std::move(c1);
    }
    out.end = {x, A, c, curve.end()};
    out.steps = N;
    return out;
}

struct PathCheck {
    TransportResult first;
    TransportResult second;
    double deviation = 0.0;
};

inline PathCheck path_independence(const Geometry& g, const Generator& gen, const Curve& c1, const Curve& c2,
                                   double h = 1e-3) {
    if (max_distance(c1.start(), c2.start()) > 1e-9 || max_distance(c1.end(), c2.end()) > 1e-9)
        throw InputError("curves do not share endpoints");
    PathCheck out{transport(g, gen, c1, h), transport(g, gen, c2, h), 0.0};
    out.deviation = deviation(out.first.end, out.second.end);
    return out;
}

// ---------------------------------------------------------------------------
// Reconstruction on grids

struct DiscreteField {
    GridSpec grid;
    std::vector<Point> points;
    std::vector<Generator> values;  // (X, A, c) transported to each grid point
    std::vector<Point> Z;           // X^a e_a + c ξ in coordinates
    double skew_drift = 0.0;
};

inline void require_grid_in_box(const Geometry& g, const GridSpec& grid) {
    const auto& s = g.structure();
    s.require_chart("grids");
    if (grid.axes.size() != static_cast<std::size_t>(g.dim()))
        throw InputError("grid has " + std::to_string(grid.axes.size()) + " axes, structure has " +
                         std::to_string(g.dim()) + " coordinates");
    const Box box = s.box();
    const double eps = 1e-12 * std::max(1.0, std::max(std::abs(box.lo), std::abs(box.hi)));
    for (std::size_t i = 0; i < grid.axes.size(); ++i) {
        const auto& a = grid.axes[i];
        if (a.name != s.coords()[i])
            throw InputError("grid axis " + std::to_string(i + 1) + " is '" + a.name + "', expected '" + s.coords()[i] + "'");
        if (a.lo < box.lo - eps || a.hi > box.hi + eps)
            throw InputError("grid axis '" + a.name + "' leaves the chart box");
    }
}

/// Transports an 𝔦(q0) generator to every grid point along q0 → (q0 with the
/// last coordinate of q) → q.
inline DiscreteField reconstruct_field(const Geometry& g, const Generator& gen, const GridSpec& grid, double h = 1e-3,
                                       double membership_tol = 1e-8) {
    require_grid_in_box(g, grid);
    auto space = generator_space(g, gen.q);
    const double res = space.membership_residual(gen);
    if (!(res < membership_tol))
        throw GeometryError("generator is not in the isometry generator space at its base point (residual " +
                            std::to_string(res) + ")");
    DiscreteField out;
    out.grid = grid;
    out.points = grid.points();
    std::map<double, Generator> first_leg;
    for (const auto& q : out.points) {
        Point mid = gen.q;
        mid.back() = q.back();
        auto it = first_leg.find(mid.back());
        if (it == first_leg.end()) {
            Generator g1 = gen;
            if (max_distance(gen.q, mid) > 0) {
                auto r = transport(g, gen, Curve::segment(gen.q, mid), h);
                out.skew_drift = std::max(out.skew_drift, r.skew_drift);
                g1 = r.end;
            }
            it = first_leg.emplace(mid.back(), std::move(g1)).first;
        }
        Generator v = it->second;
        if (max_distance(mid, q) > 0) {
            auto r = transport(g, v, Curve::segment(mid, q), h);
            out.skew_drift = std::max(out.skew_drift, r.skew_drift);
            v = r.end;
        }
        v.q = q;
        auto pd = g.at(q);
        Point z(static_cast<std::size_t>(g.dim()), 0.0);
        for (int i = 0; i < g.dim(); ++i) {
            double s = v.c * pd.reeb[static_cast<std::size_t>(i)];
            for (int a = 0; a < g.rank(); ++a) s += v.X[a] * pd.E(a, i);
            z[static_cast<std::size_t>(i)] = s;
        }
        out.values.push_back(std::move(v));
        out.Z.push_back(std::move(z));
    }
    return out;
}

/// EqsY residuals of a reconstructed field by central differences on interior
/// grid points, plus skewness of A everywhere.
inline std::vector<Check> verify_field(const Geometry& g, const DiscreteField& field, double tol = 1e-4) {
    const int h = g.rank(), d = g.dim();
    const auto& grid = field.grid;
    if (grid.axes.size() != static_cast<std::size_t>(d) || field.values.size() != grid.size())
        throw InputError("field does not match its grid");
    Check ex{"eqs_x", 0.0, 0, tol, true}, ea{"eqs_a", 0.0, 0, tol, true}, ec{"eqs_c", 0.0, 0, tol, true},
        sk{"a_skew", 0.0, 0, tol, true};
    for (const auto& v : field.values) {
        sk.max_residual = std::max(sk.max_residual, v.skew_residual());
        ++sk.points;
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!grid.interior(k)) continue;
        const auto pd = g.at(field.points[k]);
        const auto idx = grid.index(k);
        // ∂_i of X, A, c
        std::vector<Eigen::VectorXd> dX(static_cast<std::size_t>(d));
        std::vector<Eigen::MatrixXd> dA(static_cast<std::size_t>(d));
        std::vector<double> dc(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) {
            auto lo = idx, hi = idx;
            --lo[static_cast<std::size_t>(i)];
            ++hi[static_cast<std::size_t>(i)];
            const auto& a = field.values[grid.flat(lo)];
            const auto& b = field.values[grid.flat(hi)];
            const auto& ax = grid.axes[static_cast<std::size_t>(i)];
            const double span = ax.coord(idx[static_cast<std::size_t>(i)] + 1) - ax.coord(idx[static_cast<std::size_t>(i)] - 1);
            dX[static_cast<std::size_t>(i)] = (b.X - a.X) / span;
            dA[static_cast<std::size_t>(i)] = (b.A - a.A) / span;
            dc[static_cast<std::size_t>(i)] = (b.c - a.c) / span;
        }
        const auto& v = field.values[k];
        for (int a = 0; a < h; ++a) {
            Eigen::VectorXd eX = Eigen::VectorXd::Zero(h);
            Eigen::MatrixXd eA = Eigen::MatrixXd::Zero(h, h);
            double e_c = 0.0;
            for (int i = 0; i < d; ++i) {
                const double w = pd.E(a, i);
                eX += w * dX[static_cast<std::size_t>(i)];
                eA += w * dA[static_cast<std::size_t>(i)];
                e_c += w * dc[static_cast<std::size_t>(i)];
            }
            Eigen::MatrixXd Ga(h, h);  // Ga(k, j) = Γ^k_{aj}
            for (int r = 0; r < h; ++r)
                for (int j = 0; j < h; ++j) Ga(r, j) = pd.G(a + 1, j, r);
            Eigen::VectorXd rx = eX + Ga * v.X + v.A.col(a);
            Eigen::MatrixXd ra = -(eA + Ga * v.A - v.A * Ga);
            for (int r = 0; r < h; ++r)
                for (int j = 0; j < h; ++j)
                    for (int b = 0; b < h; ++b) ra(r, j) += pd.Rc(r, b, a, j) * v.X[b];
            double rc = e_c;
            for (int b = 0; b < h; ++b) rc -= v.X[b] * pd.C0(b, a);
            ex.max_residual = std::max(ex.max_residual, rx.cwiseAbs().maxCoeff());
            ea.max_residual = std::max(ea.max_residual, ra.cwiseAbs().maxCoeff());
            ec.max_residual = std::max(ec.max_residual, std::abs(rc));
        }
        ++ex.points;
        ++ea.points;
        ++ec.points;
    }
    std::vector<Check> out{ex, ea, ec, sk};
    for (auto& c : out) c.pass = c.max_residual < tol;
    return out;
}

// ---------------------------------------------------------------------------
// Regularity scan

struct RegularityMap {
    std::vector<Point> points;
    std::vector<int> dims;
    std::vector<bool> regular;
    std::vector<bool> certified;
    std::size_t semicontinuity_violations = 0;
    bool homogeneous = false;  // lie mode: one point stands for all
};

/// dim 𝔦(q) at every grid point. A point is regular when every grid neighbour
/// has its dimension; a local maximum with a larger neighbour counts as a
/// semicontinuity violation.
inline RegularityMap scan_regularity(const Geometry& g, const GridSpec& grid, const GeneratorSpaceOptions& opt = {}) {
    RegularityMap out;
    if (g.structure().mode() == Mode::Lie) {
        auto sp = generator_space(g, Point(static_cast<std::size_t>(g.dim()), 0.0), opt);
        out.points.push_back(sp.q);
        out.dims.push_back(sp.dim());
        out.regular.push_back(true);
        out.certified.push_back(sp.certified);
        out.homogeneous = true;
        return out;
    }
    if (grid.size() == 0) return out;
    require_grid_in_box(g, grid);
    out.points = grid.points();
    for (const auto& p : out.points) {
        auto sp = generator_space(g, p, opt);
        out.dims.push_back(sp.dim());
        out.certified.push_back(sp.certified);
    }
    for (std::size_t k = 0; k < out.points.size(); ++k) {
        const auto nb = grid.neighbours(k);
        bool same = true, local_max = true, exceeded = false;
        for (auto j : nb) {
            same = same && out.dims[j] == out.dims[k];
            local_max = local_max && out.dims[j] <= out.dims[k];
            exceeded = exceeded || out.dims[j] > out.dims[k];
        }
        out.regular.push_back(same);
        if (local_max && exceeded) ++out.semicontinuity_violations;
    }
    return out;
}

} // namespace srk
