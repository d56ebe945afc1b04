#pragma once

// A special contact structure bundled with its connection, evaluated either
// from exact expressions or from jets, whichever the structure calls for.

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "srkilling/connection.hpp"

namespace srk {

enum class Backend { Auto, Symbolic, Jet };

inline Backend parse_backend(const std::string& s) {
    if (s == "auto") return Backend::Auto;
    if (s == "symbolic") return Backend::Symbolic;
    if (s == "jet") return Backend::Jet;
    throw InputError("backend must be auto, symbolic or jet, got '" + s + "'");
}

using NumTensor = BasicTensor<double>;

/// ∇ⁱR, ∇ⁱdα (i ≤ order) and ∇_ξ∇ⁱR, ∇_ξ∇ⁱdα (i < order) evaluated at a point.
struct TensorValues {
    std::vector<NumTensor> R, dalpha, xi_R, xi_dalpha;
    int order() const { return static_cast<int>(R.size()) - 1; }
};

/// Frame data and curvature at a point, as numbers.
struct PointData {
    int h = 0;
    int d = 0;
    std::vector<double> gamma;  // Γ^k_{dir,j} at (dir*h + j)*h + k
    std::vector<double> R;      // R^k_{ab,j} at ((k*h + a)*h + b)*h + j
    std::vector<double> Rxi;    // R(ξ,e_b)e_j component k at (k*h + b)*h + j
    std::vector<double> c0;     // c^0_{ab} = −dα(e_a, e_b) at a*h + b
    std::vector<double> frame;  // e_a^i at a*d + i (chart mode)
    std::vector<double> reeb;   // ξ^i
    std::vector<double> theta;  // θ^a_i at a*d + i
    std::vector<double> alpha;  // α_i

    double G(int dir, int j, int k) const { return gamma[static_cast<std::size_t>((dir * h + j) * h + k)]; }
    double Rc(int k, int a, int b, int j) const { return R[static_cast<std::size_t>(((k * h + a) * h + b) * h + j)]; }
    double Rx(int k, int b, int j) const { return Rxi[static_cast<std::size_t>((k * h + b) * h + j)]; }
    double C0(int a, int b) const { return c0[static_cast<std::size_t>(a * h + b)]; }
    double E(int a, int i) const { return frame[static_cast<std::size_t>(a * d + i)]; }
    double Th(int a, int i) const { return theta[static_cast<std::size_t>(a * d + i)]; }
};

class Geometry {
  public:
    /// Refuses structures that are not special.
    explicit Geometry(ContactStructure s, Backend backend = Backend::Auto,
                      std::size_t max_components = Curvature::default_max_components)
        : s_(std::move(s)), max_components_(max_components), mu_(std::make_unique<std::mutex>()) {
        require_special(s_);
        jets_ = backend == Backend::Jet || (backend == Backend::Auto && prefers_jets(s_));
        if (jets_) {
            jet_ = std::make_unique<JetGeometry>(s_);
        } else {
            curv_ = std::make_unique<Curvature>(Connection(SymbolicFrame(s_)), 0, max_components_);
            point_tape_ = CompiledExprs(point_exprs());
        }
    }

    const ContactStructure& structure() const { return s_; }
    int rank() const { return s_.rank(); }
    int dim() const { return s_.dim(); }
    bool uses_jets() const { return jets_; }
    std::size_t max_components() const { return max_components_; }
    bool fits(int order) const { return Tensor::count(rank(), 4 + order) <= max_components_; }

    /// Symbolic curvature extended to `order` (symbolic backend only).
    const Curvature& symbolic(int order) const {
        if (jets_) throw InputError("structure is evaluated with jets; no symbolic curvature");
        std::lock_guard<std::mutex> lock(*mu_);
        if (curv_->order() < order) curv_->extend(order);
        return *curv_;
    }
    const JetGeometry& jet() const {
        if (!jets_) throw InputError("structure is evaluated symbolically");
        return *jet_;
    }

    /// Jet curvature about q with frame jets exact through `jet_order` and
    /// covariant derivatives cached to `order`.
    JetCurvature jet_curvature_at(const Point& q, int order, int jet_order) const {
        return JetCurvature(JetConnection(jet().at(q, jet_order)), order, max_components_);
    }

    TensorValues values(const Point& q, int order) const {
        check_point(q);
        TensorValues out;
        if (jets_) {
            if (!fits(order)) symbolic_limit(order);
            auto cv = jet_curvature_at(q, order, order + 1);
            for (int i = 0; i <= order; ++i) {
                out.R.push_back(numeric(cv.nabla_R(i)));
                out.dalpha.push_back(numeric(cv.nabla_dalpha(i)));
                if (i < order) {
                    out.xi_R.push_back(numeric(cv.xi_nabla_R(i)));
                    out.xi_dalpha.push_back(numeric(cv.xi_nabla_dalpha(i)));
                }
            }
            return out;
        }
        const Curvature& cv = symbolic(order);
        for (int i = 0; i <= order; ++i) {
            out.R.push_back(numeric(tape(cv.nabla_R(i), 4 * i), cv.nabla_R(i), q));
            out.dalpha.push_back(numeric(tape(cv.nabla_dalpha(i), 4 * i + 1), cv.nabla_dalpha(i), q));
            if (i < order) {
                out.xi_R.push_back(numeric(tape(cv.xi_nabla_R(i), 4 * i + 2), cv.xi_nabla_R(i), q));
                out.xi_dalpha.push_back(numeric(tape(cv.xi_nabla_dalpha(i), 4 * i + 3), cv.xi_nabla_dalpha(i), q));
            }
        }
        return out;
    }

    /// Γ, R, dα and (chart mode) frame, ξ, θ, α at p.
    PointData at(const Point& p) const {
        check_point(p);
        const int h = rank(), d = dim();
        PointData pd;
        pd.h = h;
        pd.d = d;
        if (jets_) {
            auto cv = jet_curvature_at(p, 0, 1);
            const auto& c = cv.connection();
            const auto& f = cv.frame();
            for (int dir = 0; dir <= h; ++dir)
                for (int j = 0; j < h; ++j)
                    for (int k = 0; k < h; ++k) pd.gamma.push_back(c.gamma(dir, j, k).value());
            for (const auto& v : cv.R().data) pd.R.push_back(v.value());
            for (const auto& v : cv.reeb_curvature().data) pd.Rxi.push_back(v.value());
            for (int a = 0; a < h; ++a)
                for (int b = 0; b < h; ++b) pd.c0.push_back(f.c0(a, b).value());
            for (int a = 0; a < h; ++a)
                for (int i = 0; i < d; ++i) pd.frame.push_back(f.frame(a, i).value());
            for (int i = 0; i < d; ++i) pd.reeb.push_back(f.reeb(i).value());
            for (int a = 0; a < h; ++a)
                for (int i = 0; i < d; ++i) pd.theta.push_back(f.theta(a, i).value());
            for (int i = 0; i < d; ++i) pd.alpha.push_back(f.alpha(i).value());
            return pd;
        }
        std::vector<double> v = point_tape_.eval(p);
        std::size_t k = 0;
        auto take = [&](std::vector<double>& dst, std::size_t n) {
            dst.assign(v.begin() + static_cast<std::ptrdiff_t>(k), v.begin() + static_cast<std::ptrdiff_t>(k + n));
            k += n;
        };
        const std::size_t H = static_cast<std::size_t>(h), D = static_cast<std::size_t>(d);
        take(pd.gamma, (H + 1) * H * H);
        take(pd.R, H * H * H * H);
        take(pd.Rxi, H * H * H);
        take(pd.c0, H * H);
        if (s_.mode() == Mode::Chart) {
            take(pd.frame, H * D);
            take(pd.reeb, D);
            take(pd.theta, H * D);
            take(pd.alpha, D);
        }
        return pd;
    }

    /// Evaluates residual groups built by `build(curvature, field)` at every
    /// point. `field` holds extra coordinate expressions (a vector field) that
    /// the builder receives in the backend's scalar type; `jet_order` is the
    /// number of derivatives the builder takes of frame data.
    template <class Build>
    std::vector<Check> run_checks(const std::vector<Point>& points, double tol, const std::vector<Expr>& field,
                                  int curvature_order, int jet_order, Build build) const {
        std::vector<Check> out;
        if (!jets_) {
            auto groups = build(symbolic(curvature_order), field);
            for (auto& [name, exprs] : groups) out.push_back(residual_check(name, exprs, points, tol));
            return out;
        }
        JetTape ft(field);
        for (const auto& p : points) {
            check_point(p);
            auto cv = jet_curvature_at(p, curvature_order, std::max(jet_order, curvature_order + 1));
            auto groups = build(cv, ft.eval(p, cv.frame().order()));
            if (out.empty())
                for (const auto& g : groups) out.push_back({g.first, 0.0, 0, tol, true});
            for (std::size_t i = 0; i < groups.size(); ++i) {
                for (const auto& v : groups[i].second)
                    out[i].max_residual = std::max(out[i].max_residual, std::abs(v.value()));
                ++out[i].points;
            }
        }
        if (out.empty()) {
            // no points: the names still come from one evaluation at the box centre
            Point mid(static_cast<std::size_t>(dim()), 0.5 * (s_.box().lo + s_.box().hi));
            auto cv = jet_curvature_at(mid, curvature_order, std::max(jet_order, curvature_order + 1));
            for (const auto& g : build(cv, ft.eval(mid, cv.frame().order()))) out.push_back({g.first, 0.0, 0, tol, true});
        }
        for (auto& c : out) c.pass = c.max_residual < tol;
        return out;
    }

    /// Connection and curvature identity checks.
    std::vector<Check> verify_geometry(const std::vector<Point>& points, double tol = 1e-10) const {
        return run_checks(points, tol, {}, 1, 2,
                          [](const auto& cv, const auto&) { return geometry_residuals(cv); });
    }

  private:
    std::vector<Expr> point_exprs() const {
        const Curvature& cv = *curv_;
        const auto& c = cv.connection();
        const int h = rank(), d = dim();
        std::vector<Expr> all;
        for (int dir = 0; dir <= h; ++dir)
            for (int j = 0; j < h; ++j)
                for (int k = 0; k < h; ++k) all.push_back(c.gamma(dir, j, k));
        for (const auto& e : cv.R().data) all.push_back(e);
        for (const auto& e : cv.reeb_curvature().data) all.push_back(e);
        for (int a = 0; a < h; ++a)
            for (int b = 0; b < h; ++b) all.push_back(s_.brackets().c0(a, b));
        if (s_.mode() == Mode::Chart) {
            for (int a = 0; a < h; ++a)
                for (int i = 0; i < d; ++i) all.push_back(s_.frame()[a][i]);
            for (int i = 0; i < d; ++i) all.push_back(s_.reeb()[i]);
            for (int a = 0; a < h; ++a)
                for (int i = 0; i < d; ++i) all.push_back(s_.coframe()[a][i]);
            for (int i = 0; i < d; ++i) all.push_back(s_.alpha()[i]);
        }
        return all;
    }

    void check_point(const Point& p) const {
        if (static_cast<int>(p.size()) != dim())
            throw InputError("point has " + std::to_string(p.size()) + " coordinates, structure has " +
                             std::to_string(dim()));
    }

    [[noreturn]] void symbolic_limit(int order) const {
        throw LimitError("∇^" + std::to_string(order) + "R would have " +
                         std::to_string(Tensor::count(rank(), 4 + order)) + " components (bound " +
                         std::to_string(max_components_) + ")");
    }

    const CompiledExprs& tape(const Tensor& t, int key) const {
        std::lock_guard<std::mutex> lock(*mu_);
        auto it = tapes_.find(key);
        if (it == tapes_.end()) it = tapes_.emplace(key, CompiledExprs(t.data)).first;
        return it->second;
    }

    static NumTensor numeric(const CompiledExprs& tp, const Tensor& shape, const Point& q) {
        NumTensor out(shape.h, shape.upper, shape.lower);
        tp.eval(q, out.data);
        return out;
    }
    static NumTensor numeric(const JetTensor& t) {
        NumTensor out(t.h, t.upper, t.lower);
        for (std::size_t i = 0; i < t.size(); ++i) out.data[i] = t.data[i].value();
        return out;
    }

    ContactStructure s_;
    std::size_t max_components_;
    bool jets_ = false;
    std::unique_ptr<JetGeometry> jet_;
    std::unique_ptr<Curvature> curv_;
    CompiledExprs point_tape_;
    std::unique_ptr<std::mutex> mu_;
    mutable std::map<int, CompiledExprs> tapes_;
};

} // namespace srk
