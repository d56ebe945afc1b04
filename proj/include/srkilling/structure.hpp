#pragma once

// Contact sub-Riemannian structures given by an orthonormal horizontal frame:
// definition files, built-ins, the normalized contact form, the Reeb field and
// the frame structure functions.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "srkilling/expr.hpp"
#include "srkilling/grid.hpp"
#include "srkilling/parse.hpp"

namespace srk {

enum class Mode { Chart, Lie };

/// Coordinate coefficients of a vector field (chart mode) or of a covector.
using VectorField = std::vector<Expr>;

/// Parsed structure definition, before any geometry is computed.
struct StructureDefinition {
    std::string source;               // builtin name or file path
    std::string text;                 // definition text, hashed for the fingerprint
    Mode mode = Mode::Chart;
    int n = 0;
    std::vector<std::string> coords;  // chart only
    std::vector<std::string> frame_names;
    std::vector<VectorField> frame;   // chart only: 2n fields of 2n+1 coefficients
    std::vector<Rational> lie;        // lie only: c[i][j][k] over 0..2n, antisymmetric in (i,j)
    Box box;
    int orientation = 1;

    int dim() const { return 2 * n + 1; }
    Rational& lie_c(int i, int j, int k) {
        return lie[static_cast<std::size_t>((i * dim() + j) * dim() + k)];
    }
    const Rational& lie_c(int i, int j, int k) const {
        return lie[static_cast<std::size_t>((i * dim() + j) * dim() + k)];
    }
};

/// FNV-1a content hash, hex encoded.
inline std::string fingerprint(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline Rational parse_rational(const std::string& s) {
    try {
        Expr e = parse_expression(s, {});
        if (!e.is_const()) throw InputError("expected a rational constant, got '" + s + "'");
        return e.value();
    } catch (const ParseError& err) {
        throw InputError("expected a rational constant, got '" + s + "': " + err.what());
    }
}

inline int parse_int(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        int v = std::stoi(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw InputError(what + " must be an integer, got '" + s + "'");
}

} // namespace detail

/// Parses the structure file format:
///
///     [manifold]  mode = chart|lie ; n = <int> ; coords = <names> ; box = <lo> <hi> ; orientation = 1|-1
///     [frame]     X1 = <expr>, ..., <expr>
///     [brackets]  c <i> <j> <k> = <rational>
inline StructureDefinition parse_structure(const std::string& text, const std::string& source) {
    StructureDefinition def;
    def.source = source;
    def.text = text;
    std::string section;
    std::vector<std::pair<std::string, std::string>> frame_lines;
    std::vector<std::pair<int, std::string>> bracket_lines;
    bool have_mode = false, have_n = false;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto where = [&] { return source + ":" + std::to_string(lineno) + ": "; };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw InputError(where() + "malformed section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section != "manifold" && section != "frame" && section != "brackets")
                throw InputError(where() + "unknown section [" + section + "]");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError(where() + "expected 'key = value'");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (section == "manifold") {
            if (key == "mode") {
                if (value == "chart")
                    def.mode = Mode::Chart;
                else if (value == "lie")
                    def.mode = Mode::Lie;
                else
                    throw InputError(where() + "mode must be chart or lie");
                have_mode = true;
            } else if (key == "n") {
                def.n = detail::parse_int(value, "n");
                have_n = true;
            } else if (key == "coords") {
                def.coords = detail::split_words(value);
            } else if (key == "box") {
                auto w = detail::split_words(value);
                if (w.size() != 2) throw InputError(where() + "box needs two numbers");
                def.box = {parse_real(w[0]), parse_real(w[1])};
                if (!(def.box.lo < def.box.hi)) throw InputError(where() + "box must have lo < hi");
            } else if (key == "orientation") {
                def.orientation = detail::parse_int(value, "orientation");
                if (def.orientation != 1 && def.orientation != -1)
                    throw InputError(where() + "orientation must be 1 or -1");
            } else {
                throw InputError(where() + "unknown key '" + key + "' in [manifold]");
            }
        } else if (section == "frame") {
            frame_lines.emplace_back(key, value);
        } else if (section == "brackets") {
            bracket_lines.emplace_back(lineno, line);
        } else {
            throw InputError(where() + "key outside of any section");
        }
    }
    if (!have_mode || !have_n) throw InputError(source + ": [manifold] needs mode and n");
    if (def.n < 1) throw InputError(source + ": n must be >= 1");
    const int dim = def.dim();
    if (def.mode == Mode::Chart) {
        if (static_cast<int>(def.coords.size()) != dim)
            throw InputError(source + ": chart mode needs " + std::to_string(dim) + " coords");
        if (!bracket_lines.empty()) throw InputError(source + ": [brackets] is only valid in lie mode");
        if (static_cast<int>(frame_lines.size()) != 2 * def.n)
            throw InputError(source + ": [frame] needs " + std::to_string(2 * def.n) + " fields, got " +
                             std::to_string(frame_lines.size()));
        for (const auto& [name, value] : frame_lines) {
            auto parts = split_list(value, ',');
            if (static_cast<int>(parts.size()) != dim)
                throw InputError(source + ": frame field " + name + " needs " + std::to_string(dim) +
                                 " coefficients");
            VectorField f;
            for (const auto& p : parts) {
                try {
                    f.push_back(parse_expression(p, def.coords));
                } catch (const ParseError& err) {
                    throw InputError(source + ": frame field " + name + ": " + err.what());
                }
            }
            def.frame_names.push_back(name);
            def.frame.push_back(std::move(f));
        }
    } else {
        if (!frame_lines.empty()) throw InputError(source + ": [frame] is only valid in chart mode");
        def.lie.assign(dim * dim * dim, Rational(0));
        for (const auto& [ln, text_line] : bracket_lines) {
            auto eq = text_line.find('=');
            auto lhs = detail::split_words(text_line.substr(0, eq));
            std::string at = source + ":" + std::to_string(ln) + ": ";
            if (lhs.size() != 4 || lhs[0] != "c") throw InputError(at + "expected 'c <i> <j> <k> = <rational>'");
            int i = detail::parse_int(lhs[1], "i") - 1, j = detail::parse_int(lhs[2], "j") - 1,
                k = detail::parse_int(lhs[3], "k") - 1;
            if (i < 0 || j < 0 || k < 0 || i >= dim || j >= dim || k >= dim)
                throw InputError(at + "bracket index out of range 1.." + std::to_string(dim));
            if (i >= j) throw InputError(at + "bracket indices need i < j");
            Rational v = detail::parse_rational(detail::trim(text_line.substr(eq + 1)));
            def.lie_c(i, j, k) = v;
            def.lie_c(j, i, k) = -v;
        }
        for (int i = 0; i < 2 * def.n; ++i) def.frame_names.push_back("e" + std::to_string(i + 1));
    }
    return def;
}

/// Text of a built-in structure: `heisenberg:<n>` or `su2`.
inline std::string builtin_text(const std::string& name) {
    if (name == "su2") {
        return "# su(2)-type contact structure: [e1,e2]=e3, [e2,e3]=e1, [e3,e1]=e2; H = span{e1,e2}\n"
               "[manifold]\n"
               "mode = lie\n"
               "n = 1\n"
               "\n"
               "[brackets]\n"
               "c 1 2 3 = 1\n"
               "c 2 3 1 = 1\n"
               "c 1 3 2 = -1\n";
    }
    const std::string prefix = "heisenberg:";
    if (name.rfind(prefix, 0) == 0) {
        int n = detail::parse_int(name.substr(prefix.size()), "heisenberg dimension");
        if (n < 1 || n > 4) throw InputError("heisenberg:<n> supports 1 <= n <= 4");
        std::ostringstream os;
        os << "# Heisenberg group of dimension " << 2 * n + 1 << ", left-invariant orthonormal frame\n"
           << "[manifold]\nmode = chart\nn = " << n << "\ncoords = ";
        std::vector<std::string> xs, ys;
        for (int i = 1; i <= n; ++i) {
            xs.push_back(n == 1 ? "x" : "x" + std::to_string(i));
            ys.push_back(n == 1 ? "y" : "y" + std::to_string(i));
        }
        for (int i = 0; i < n; ++i) os << xs[i] << ", " << ys[i] << ", ";
        os << "z\n\n[frame]\n";
        const int dim = 2 * n + 1;
        for (int i = 0; i < n; ++i) {
            for (int half = 0; half < 2; ++half) {
                std::vector<std::string> coef(dim, "0");
                coef[2 * i + half] = "1";
                coef.back() = half == 0 ? "-" + ys[i] + "/2"
                                        : xs[i] + "/2";
                std::string label = n == 1 ? "X" + std::to_string(half + 1)
                                           : std::string(half == 0 ? "X" : "Y") + std::to_string(i + 1);
                os << label << " = ";
                for (int k = 0; k < dim; ++k) os << (k ? ", " : "") << coef[k];
                os << "\n";
            }
        }
        return os.str();
    }
    throw InputError("unknown built-in structure '" + name + "'");
}

inline bool is_builtin_name(const std::string& s) { return s == "su2" || s.rfind("heisenberg:", 0) == 0; }

/// Loads a built-in by name or a definition file by path.
inline StructureDefinition load_structure(const std::string& source) {
    if (is_builtin_name(source)) return parse_structure(builtin_text(source), source);
    std::ifstream f(source);
    if (!f) throw InputError("cannot read structure file '" + source + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_structure(ss.str(), source);
}

// --- symbolic linear algebra -------------------------------------------------

namespace detail {

inline Expr det_rec(const std::vector<std::vector<Expr>>& m, std::size_t row, std::uint32_t cols,
                    std::unordered_map<std::uint32_t, Expr>& memo) {
    if (row == m.size()) return Expr(1);
    if (auto it = memo.find(cols); it != memo.end()) return it->second;
    std::vector<Expr> terms;
    int pos = 0;
    for (std::size_t c = 0; c < m.size(); ++c) {
        if (!(cols >> c & 1U)) continue;
        const Expr& a = m[row][c];
        if (!a.is_zero()) {
            Expr minor = det_rec(m, row + 1, cols & ~(1U << c), memo);
            terms.push_back(pos % 2 == 0 ? a * minor : -(a * minor));
        }
        ++pos;
    }
    Expr r = add(std::move(terms));
    memo.emplace(cols, r);
    return r;
}

} // namespace detail

/// Determinant by Laplace expansion with memoized minors.
inline Expr determinant(const std::vector<std::vector<Expr>>& m) {
    if (m.empty()) return Expr(1);
    std::unordered_map<std::uint32_t, Expr> memo;
    return detail::det_rec(m, 0, (1U << m.size()) - 1U, memo);
}

/// Minor with row r and column c removed.
inline std::vector<std::vector<Expr>> minor_matrix(const std::vector<std::vector<Expr>>& m, std::size_t r,
                                                   std::size_t c) {
    std::vector<std::vector<Expr>> out;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i == r) continue;
        std::vector<Expr> row;
        for (std::size_t j = 0; j < m[i].size(); ++j)
            if (j != c) row.push_back(m[i][j]);
        out.push_back(std::move(row));
    }
    return out;
}

/// Jacobi-Lie bracket of coordinate vector fields: [V,W]^k = V^i d_i W^k - W^i d_i V^k.
inline VectorField lie_bracket(const VectorField& v, const VectorField& w) {
    const std::size_t dim = v.size();
    VectorField out(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        std::vector<Expr> terms;
        for (std::size_t i = 0; i < dim; ++i) {
            if (!v[i].is_zero()) terms.push_back(v[i] * differentiate(w[k], static_cast<int>(i)));
            if (!w[i].is_zero()) terms.push_back(-(w[i] * differentiate(v[k], static_cast<int>(i))));
        }
        out[k] = add(std::move(terms));
    }
    return out;
}

/// ⋀ⁿω(e_1..e_2n) = (1/2ⁿ) Σ_σ sgn σ Π_i ω(e_σ(2i-1), e_σ(2i)) for a 2-form given by its
/// 2n×2n matrix; permutations are visited in lexicographic order.
inline Expr top_power(const std::vector<std::vector<Expr>>& omega) {
    const int h = static_cast<int>(omega.size());
    std::vector<int> perm(h);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<Expr> terms;
    do {
        int inversions = 0;
        for (int i = 0; i < h; ++i)
            for (int j = i + 1; j < h; ++j)
                if (perm[i] > perm[j]) ++inversions;
        std::vector<Expr> f{Expr(inversions % 2 == 0 ? 1 : -1)};
        for (int i = 0; i < h; i += 2)
            f.push_back(omega[static_cast<std::size_t>(perm[i])]
                             [static_cast<std::size_t>(perm[i + 1])]);
        terms.push_back(mul(std::move(f)));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return mul({Expr(Rational(1, std::int64_t{1} << (h / 2))), add(std::move(terms))});
}

/// Frame structure functions of a contact structure in the basis (e_1..e_2n, ξ).
///
/// [e_i,e_j] = c^k_ij e_k + c^0_ij ξ and [ξ,e_j] = c^k_0j e_k + c^0_0j ξ.
/// Indices are 0-based; c^0_0j vanishes on special structures.
struct Brackets {
    int h = 0;
    std::vector<Expr> hor;     // c^k_ij at (i*h + j)*h + k
    std::vector<Expr> vert;    // c^0_ij at i*h + j
    std::vector<Expr> xi_hor;  // c^k_0j at j*h + k
    std::vector<Expr> xi_vert; // c^0_0j at j

    const Expr& c(int i, int j, int k) const { return hor[static_cast<std::size_t>((i * h + j) * h + k)]; }
    const Expr& c0(int i, int j) const { return vert[i * h + j]; }
    const Expr& cxi(int j, int k) const { return xi_hor[j * h + k]; }
    const Expr& cxi0(int j) const { return xi_vert[j]; }
};

/// Residuals of the "special" test: the Reeb field must be an infinitesimal isometry.
struct SpecialReport {
    double contact_residual = 0.0; // max |α([ξ,e_j])|
    double metric_residual = 0.0;  // max |<[ξ,e_i],e_j> + <e_i,[ξ,e_j]>|
    std::size_t points = 0;
    double tol = 1e-10;
    bool special() const { return contact_residual < tol && metric_residual < tol; }
};

/// A contact sub-Riemannian structure with its derived data.
///
/// The frame is orthonormal by definition. In chart mode every derived object
/// is a vector of coordinate expressions; in lie mode everything is a constant
/// expression in the left-invariant basis (e_1..e_2n, e_{2n+1}).
class ContactStructure {
  public:
    explicit ContactStructure(StructureDefinition def) : def_(std::move(def)) {
        if (def_.n < 1) throw InputError("n must be >= 1");
        if (def_.mode == Mode::Chart) {
            validate_chart();
            normalize_contact_form();
            compute_reeb();
            structure_functions();
        } else {
            validate_lie();
            normalize_contact_form_lie();
            compute_reeb_lie();
            structure_functions_lie();
        }
    }

    const StructureDefinition& definition() const { return def_; }
    Mode mode() const { return def_.mode; }
    int n() const { return def_.n; }
    int dim() const { return 2 * def_.n + 1; }
    int rank() const { return 2 * def_.n; }
    const std::vector<std::string>& coords() const { return def_.coords; }
    const std::vector<VectorField>& frame() const { return def_.frame; }
    Box box() const { return def_.box; }
    std::string fingerprint() const { return srk::fingerprint(def_.text); }

    /// Raw annihilator α₀(V) = det(e_1, ..., e_2n, V).
    const VectorField& raw_alpha() const { return alpha0_; }
    /// ⋀ⁿdα₀(e_1..e_2n).
    const Expr& raw_volume() const { return volume_; }
    /// Normalized contact form (chart: dx-coefficients; lie: components on e_1..e_{2n+1}).
    const VectorField& alpha() const { return alpha_; }
    /// Reeb field ξ (chart: ∂-coefficients; lie: components on e_1..e_{2n+1}).
    const VectorField& reeb() const { return reeb_; }
    /// ±1; for even n selects between the two normalized forms.
    int orientation_sign() const { return def_.orientation; }
    const Brackets& brackets() const { return brackets_; }

    /// Horizontal coframe θ^a with θ^a(e_b) = δ, θ^a(ξ) = 0 (chart mode).
    const std::vector<VectorField>& coframe() const { return theta_; }
    /// dα as a coordinate matrix dα_ij = ∂_iα_j − ∂_jα_i (chart mode).
    const std::vector<std::vector<Expr>>& dalpha() const { return dalpha_; }

    /// Directional derivative of a scalar along ξ (dir = 0) or e_dir (dir = 1..2n).
    Expr frame_derivative(int dir, const Expr& f) const {
        if (dir < 0 || dir > rank()) throw InputError("frame direction out of range");
        if (def_.mode == Mode::Lie) {
            if (f.var_mask() != 0) throw GeometryError("lie mode scalar depends on coordinates");
            return Expr(0);
        }
        if (f.var_mask() == 0) return Expr(0);
        const VectorField& v = dir == 0 ? reeb_ : def_.frame[dir - 1];
        std::vector<Expr> terms;
        for (int i = 0; i < dim(); ++i) {
            const Expr& c = v[i];
            if (c.is_zero()) continue;
            Expr d = differentiate(f, i);
            if (!d.is_zero()) terms.push_back(c * d);
        }
        return add(std::move(terms));
    }

    /// Components (α(V), θ^1(V), ..., θ^2n(V)) of a coordinate vector field.
    std::vector<Expr> split(const VectorField& v) const {
        require_chart("split");
        std::vector<Expr> out;
        out.push_back(pair(alpha_, v));
        for (const auto& t : theta_) out.push_back(pair(t, v));
        return out;
    }

    /// Coordinate vector field Σ x^a e_a + c ξ.
    VectorField assemble(const std::vector<Expr>& horizontal, const Expr& vertical) const {
        require_chart("assemble");
        VectorField out(static_cast<std::size_t>(dim()));
        for (int k = 0; k < dim(); ++k) {
            std::vector<Expr> t{vertical * reeb_[k]};
            for (int a = 0; a < rank(); ++a)
                t.push_back(horizontal[a] *
                            def_.frame[a][k]);
            out[k] = add(std::move(t));
        }
        return out;
    }

    /// Default sample set: 5 points per axis over the box (one point in lie mode).
    std::vector<Point> default_samples(int per_axis = 5) const {
        if (def_.mode == Mode::Lie) return {Point(static_cast<std::size_t>(dim()), 0.0)};
        return GridSpec::uniform(def_.coords, def_.box, per_axis).points();
    }

    /// Residuals of the special condition at the given points.
    SpecialReport check_special(const std::vector<Point>& points, double tol = 1e-10) const {
        SpecialReport r;
        r.tol = tol;
        const int h = rank();
        std::vector<Expr> contact, metric;
        for (int j = 0; j < h; ++j) contact.push_back(brackets_.cxi0(j));
        for (int i = 0; i < h; ++i)
            for (int j = i; j < h; ++j) metric.push_back(brackets_.cxi(i, j) + brackets_.cxi(j, i));
        CompiledExprs cc(contact), cm(metric);
        for (const auto& p : points) {
            for (double v : cc.eval(p)) r.contact_residual = std::max(r.contact_residual, std::abs(v));
            for (double v : cm.eval(p)) r.metric_residual = std::max(r.metric_residual, std::abs(v));
            ++r.points;
        }
        return r;
    }

    void require_chart(const char* what) const {
        if (def_.mode != Mode::Chart)
            throw InputError(std::string(what) + " needs a chart-mode structure");
    }

  private:
    static Expr pair(const VectorField& covector, const VectorField& v) {
        std::vector<Expr> t;
        for (std::size_t i = 0; i < v.size(); ++i)
            if (!covector[i].is_zero() && !v[i].is_zero()) t.push_back(covector[i] * v[i]);
        return add(std::move(t));
    }

    void validate_chart() {
        if (static_cast<int>(def_.coords.size()) != dim()) throw InputError("wrong number of coordinates");
        if (static_cast<int>(def_.frame.size()) != rank()) throw InputError("frame needs 2n fields");
        for (const auto& f : def_.frame)
            if (static_cast<int>(f.size()) != dim()) throw InputError("frame field has wrong length");
    }

    void validate_lie() {
        const int d = dim();
        if (static_cast<int>(def_.lie.size()) != d * d * d) throw InputError("bracket table has wrong size");
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k)
                    if (!(def_.lie_c(i, j, k) == -def_.lie_c(j, i, k)))
                        throw InputError("brackets are not antisymmetric");
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j)
                for (int k = j + 1; k < d; ++k)
                    for (int l = 0; l < d; ++l) {
                        Rational s(0);
                        for (int m = 0; m < d; ++m) {
                            s += def_.lie_c(i, j, m) * def_.lie_c(m, k, l);
                            s += def_.lie_c(j, k, m) * def_.lie_c(m, i, l);
                            s += def_.lie_c(k, i, m) * def_.lie_c(m, j, l);
                        }
                        if (!s.is_zero())
                            throw InputError("brackets violate the Jacobi identity at (" + std::to_string(i + 1) +
                                             "," + std::to_string(j + 1) + "," + std::to_string(k + 1) + ")");
                    }
    }

    // Sign and magnitude checks for v = ⋀ⁿdα₀ on the sample grid.
    void check_volume(const std::vector<Point>& samples) const {
        CompiledExprs cv(std::vector<Expr>{volume_});
        CompiledExprs ca(alpha0_);
        for (const auto& p : samples) {
            double norm = 0.0;
            for (double a : ca.eval(p)) norm = std::max(norm, std::abs(a));
            if (norm < 1e-12) throw GeometryError("degenerate frame: fields are linearly dependent at a sample point");
            double v = cv.eval(p)[0];
            if (std::abs(v) < 1e-12)
                throw GeometryError("distribution is not contact: dα₀ degenerates on H at a sample point");
            if (def_.n % 2 == 0 && v < 0)
                throw GeometryError("orientation mismatch: ⋀ⁿdα₀ < 0 on the frame for even n; "
                                    "negate one frame field to obtain a compatibly oriented frame");
        }
    }

    void normalize_contact_form() {
        const int d = dim(), h = rank();
        std::vector<std::vector<Expr>> f;
        for (const auto& e : def_.frame) f.push_back(e);
        alpha0_.resize(d);
        for (int i = 0; i < d; ++i) {
            std::vector<std::vector<Expr>> m;
            for (const auto& row : f) {
                std::vector<Expr> r;
                for (int j = 0; j < d; ++j)
                    if (j != i) r.push_back(row[j]);
                m.push_back(std::move(r));
            }
            Expr det = determinant(m);
            alpha0_[i] = i % 2 == 0 ? det : -det;
        }
        frame_brackets_.assign(h * h, VectorField(d));
        for (int a = 0; a < h; ++a)
            for (int b = a + 1; b < h; ++b) {
                auto br = lie_bracket(def_.frame[a], def_.frame[b]);
                VectorField neg(br.size());
                for (std::size_t k = 0; k < br.size(); ++k) neg[k] = -br[k];
                frame_brackets_[a * h + b] = br;
                frame_brackets_[b * h + a] = neg;
            }
        std::vector<std::vector<Expr>> omega0(h, std::vector<Expr>(h));
        for (int a = 0; a < h; ++a)
            for (int b = 0; b < h; ++b)
                if (a != b) omega0[a][b] = -pair(alpha0_, frame_brackets_[a * h + b]);
        volume_ = top_power(omega0);
        check_volume(default_samples());
        Expr scale = mul({Expr(def_.orientation), pow(volume_, Rational(-1, def_.n))});
        alpha_.resize(d);
        for (int i = 0; i < d; ++i) alpha_[i] = scale * alpha0_[i];
    }

    void compute_reeb() {
        const int d = dim(), h = rank();
        dalpha_.assign(d, std::vector<Expr>(d));
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) {
                Expr v = differentiate(alpha_[j], i) - differentiate(alpha_[i], j);
                dalpha_[i][j] = v;
                dalpha_[j][i] = -v;
            }
        // rows: dα(·, e_a) for each frame field, last row α
        std::vector<std::vector<Expr>> m(d, std::vector<Expr>(d));
        for (int a = 0; a < h; ++a)
            for (int i = 0; i < d; ++i) {
                std::vector<Expr> t;
                for (int j = 0; j < d; ++j)
                    t.push_back(dalpha_[i][j] * def_.frame[a][j]);
                m[a][i] = add(std::move(t));
            }
        m[h] = alpha_;
        std::vector<Expr> cof(d);
        std::vector<Expr> det_terms;
        for (int i = 0; i < d; ++i) {
            Expr minor = determinant(minor_matrix(m, h, i));
            cof[i] = (h + i) % 2 == 0 ? minor : -minor;
            det_terms.push_back(alpha_[i] * cof[i]);
        }
        Expr det = add(std::move(det_terms));
        CompiledExprs cd(std::vector<Expr>{det});
        for (const auto& p : default_samples())
            if (std::abs(cd.eval(p)[0]) < 1e-12)
                throw GeometryError("internal inconsistency: Reeb system is singular at a sample point");
        Expr inv = pow(det, Rational(-1));
        reeb_.resize(d);
        for (int i = 0; i < d; ++i) reeb_[i] = cof[i] * inv;
    }

    void structure_functions() {
        const int d = dim(), h = rank();
        // basis matrix with columns e_1..e_2n, ξ; θ^a is row a of its inverse
        std::vector<std::vector<Expr>> b(d, std::vector<Expr>(d));
        for (int i = 0; i < d; ++i) {
            for (int a = 0; a < h; ++a) b[i][a] = def_.frame[a][i];
            b[i][h] = reeb_[i];
        }
        Expr det = determinant(b);
        Expr inv = pow(det, Rational(-1));
        theta_.assign(h, VectorField(d));
        for (int a = 0; a < h; ++a)
            for (int i = 0; i < d; ++i) {
                Expr minor = determinant(minor_matrix(b, i, a));
                theta_[a][i] = ((i + a) % 2 == 0 ? minor : -minor) * inv;
            }
        brackets_.h = h;
        brackets_.hor.assign(h * h * h, Expr(0));
        brackets_.vert.assign(h * h, Expr(0));
        brackets_.xi_hor.assign(h * h, Expr(0));
        brackets_.xi_vert.assign(h, Expr(0));
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < h; ++j) {
                if (i == j) continue;
                const auto& br = frame_brackets_[i * h + j];
                brackets_.vert[i * h + j] = pair(alpha_, br);
                for (int k = 0; k < h; ++k)
                    brackets_.hor[static_cast<std::size_t>((i * h + j) * h + k)] = pair(theta_[k], br);
            }
        for (int j = 0; j < h; ++j) {
            auto br = lie_bracket(reeb_, def_.frame[j]);
            brackets_.xi_vert[j] = pair(alpha_, br);
            for (int k = 0; k < h; ++k) brackets_.xi_hor[j * h + k] = pair(theta_[k], br);
        }
    }

    // --- lie mode: constants in the basis e_1..e_{2n+1} ---

    Expr lc(int i, int j, int k) const { return Expr(def_.lie_c(i, j, k)); }

    void normalize_contact_form_lie() {
        const int d = dim(), h = rank();
        alpha0_.assign(d, Expr(0));
        alpha0_[h] = Expr(1);
        std::vector<std::vector<Expr>> omega0(h, std::vector<Expr>(h));
        for (int a = 0; a < h; ++a)
            for (int b = 0; b < h; ++b) omega0[a][b] = -lc(a, b, h);
        volume_ = top_power(omega0);
        double v = evaluate(volume_, {});
        if (std::abs(v) < 1e-12) throw GeometryError("distribution is not contact: dα₀ degenerates on H");
        if (def_.n % 2 == 0 && v < 0)
            throw GeometryError("orientation mismatch: ⋀ⁿdα₀ < 0 on the frame for even n; "
                                "negate one frame field to obtain a compatibly oriented frame");
        Expr scale = mul({Expr(def_.orientation), pow(volume_, Rational(-1, def_.n))});
        alpha_.assign(d, Expr(0));
        alpha_[h] = scale;
    }

    // dα(e_i, e_j) = −α([e_i, e_j]) for left-invariant fields
    Expr lie_dalpha(int i, int j) const {
        const int d = dim();
        std::vector<Expr> t;
        for (int k = 0; k < d; ++k) t.push_back(alpha_[k] * lc(i, j, k));
        return -add(std::move(t));
    }

    void compute_reeb_lie() {
        const int d = dim(), h = rank();
        std::vector<std::vector<Expr>> m(d, std::vector<Expr>(d));
        for (int a = 0; a < h; ++a)
            for (int i = 0; i < d; ++i) m[a][i] = lie_dalpha(i, a);
        m[h] = alpha_;
        std::vector<Expr> cof(d), det_terms;
        for (int i = 0; i < d; ++i) {
            Expr minor = determinant(minor_matrix(m, h, i));
            cof[i] = (h + i) % 2 == 0 ? minor : -minor;
            det_terms.push_back(alpha_[i] * cof[i]);
        }
        Expr det = add(std::move(det_terms));
        if (std::abs(evaluate(det, {})) < 1e-12)
            throw GeometryError("internal inconsistency: Reeb system is singular");
        Expr inv = pow(det, Rational(-1));
        reeb_.resize(d);
        for (int i = 0; i < d; ++i) reeb_[i] = cof[i] * inv;
    }

    // components of Σ V^k e_k on (e_1..e_2n, ξ)
    std::vector<Expr> lie_split(const std::vector<Expr>& v) const {
        const int d = dim(), h = rank();
        std::vector<Expr> t;
        for (int k = 0; k < d; ++k) t.push_back(alpha_[k] * v[k]);
        Expr vert = add(std::move(t));
        std::vector<Expr> out{vert};
        for (int a = 0; a < h; ++a) out.push_back(v[a] - vert * reeb_[a]);
        return out;
    }

    void structure_functions_lie() {
        const int d = dim(), h = rank();
        brackets_.h = h;
        brackets_.hor.assign(h * h * h, Expr(0));
        brackets_.vert.assign(h * h, Expr(0));
        brackets_.xi_hor.assign(h * h, Expr(0));
        brackets_.xi_vert.assign(h, Expr(0));
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < h; ++j) {
                std::vector<Expr> v;
                for (int k = 0; k < d; ++k) v.push_back(lc(i, j, k));
                auto s = lie_split(v);
                brackets_.vert[i * h + j] = s[0];
                for (int k = 0; k < h; ++k) brackets_.hor[static_cast<std::size_t>((i * h + j) * h + k)] = s[k + 1];
            }
        for (int j = 0; j < h; ++j) {
            std::vector<Expr> v;
            for (int k = 0; k < d; ++k) {
                std::vector<Expr> t;
                for (int i = 0; i < d; ++i) t.push_back(reeb_[i] * lc(i, j, k));
                v.push_back(add(std::move(t)));
            }
            auto s = lie_split(v);
            brackets_.xi_vert[j] = s[0];
            for (int k = 0; k < h; ++k) brackets_.xi_hor[j * h + k] = s[k + 1];
        }
    }

    StructureDefinition def_;
    VectorField alpha0_;
    Expr volume_;
    VectorField alpha_;
    VectorField reeb_;
    std::vector<VectorField> theta_;
    std::vector<std::vector<Expr>> dalpha_;
    std::vector<VectorField> frame_brackets_; // chart: [e_a, e_b] at a*h + b
    Brackets brackets_;
};

} // namespace srk
