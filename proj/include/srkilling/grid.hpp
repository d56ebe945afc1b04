#pragma once

#include <cstddef>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "srkilling/error.hpp"

namespace srk {

using Point = std::vector<double>;

/// Coordinate box [lo, hi]^dim used for sampling.
struct Box {
    double lo = -1.0;
    double hi = 1.0;
};

/// Tensor-product grid, e.g. `x:-1:1:5,y:-1:1:5,z:-1:1:5`.
struct GridSpec {
    struct Axis {
        std::string name;
        double lo = 0.0;
        double hi = 0.0;
        int count = 1;
        double coord(int i) const {
            return count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (count - 1);
        }
    };
    std::vector<Axis> axes;

    std::size_t size() const {
        if (axes.empty()) return 0;
        std::size_t s = 1;
        for (const auto& a : axes) s *= static_cast<std::size_t>(a.count);
        return s;
    }

    /// Multi-index of flat point k; the first axis varies slowest.
    std::vector<int> index(std::size_t k) const {
        std::vector<int> idx(axes.size());
        for (std::size_t d = axes.size(); d-- > 0;) {
            auto c = static_cast<std::size_t>(axes[d].count);
            idx[d] = static_cast<int>(k % c);
            k /= c;
        }
        return idx;
    }

    std::size_t flat(const std::vector<int>& idx) const {
        std::size_t k = 0;
        for (std::size_t d = 0; d < axes.size(); ++d)
            k = k * static_cast<std::size_t>(axes[d].count) + static_cast<std::size_t>(idx[d]);
        return k;
    }

    Point point(std::size_t k) const {
        auto idx = index(k);
        Point p(axes.size());
        for (std::size_t d = 0; d < axes.size(); ++d) p[d] = axes[d].coord(idx[d]);
        return p;
    }

    std::vector<Point> points() const {
        std::vector<Point> out;
        out.reserve(size());
        for (std::size_t k = 0; k < size(); ++k) out.push_back(point(k));
        return out;
    }

    /// Axis-adjacent neighbours of flat point k.
    std::vector<std::size_t> neighbours(std::size_t k) const {
        std::vector<std::size_t> out;
        auto idx = index(k);
        for (std::size_t d = 0; d < axes.size(); ++d) {
            for (int step : {-1, 1}) {
                int v = idx[d] + step;
                if (v < 0 || v >= axes[d].count) continue;
                auto j = idx;
                j[d] = v;
                out.push_back(flat(j));
            }
        }
        return out;
    }

    bool interior(std::size_t k) const {
        auto idx = index(k);
        for (std::size_t d = 0; d < axes.size(); ++d)
            if (idx[d] == 0 || idx[d] == axes[d].count - 1) return false;
        return true;
    }

    static GridSpec uniform(const std::vector<std::string>& names, Box box, int count) {
        GridSpec g;
        for (const auto& n : names) g.axes.push_back({n, box.lo, box.hi, count});
        return g;
    }
};

inline std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == sep && depth == 0) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    for (auto& t : out) {
        auto b = t.find_first_not_of(" \t\r\n");
        auto e = t.find_last_not_of(" \t\r\n");
        t = b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
    }
    return out;
}

inline double parse_real(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw InputError("not a number: '" + s + "'");
    }
    if (used != s.size()) throw InputError("not a number: '" + s + "'");
    return v;
}

/// Parses `name:lo:hi:count,...`; axes must follow the coordinate order.
inline GridSpec parse_grid(const std::string& spec, const std::vector<std::string>& coords) {
    GridSpec g;
    for (const auto& part : split_list(spec, ',')) {
        auto f = split_list(part, ':');
        if (f.size() != 4) throw InputError("grid axis must be name:lo:hi:count, got '" + part + "'");
        GridSpec::Axis a{f[0], parse_real(f[1]), parse_real(f[2]), 0};
        double c = parse_real(f[3]);
        if (c < 1 || c != static_cast<int>(c)) throw InputError("grid count must be a positive integer");
        a.count = static_cast<int>(c);
        if (a.hi < a.lo) throw InputError("grid axis '" + a.name + "' has hi < lo");
        g.axes.push_back(a);
    }
    if (!coords.empty()) {
        if (g.axes.size() != coords.size())
            throw InputError("grid has " + std::to_string(g.axes.size()) + " axes, structure has " +
                             std::to_string(coords.size()) + " coordinates");
        for (std::size_t i = 0; i < coords.size(); ++i)
            if (g.axes[i].name != coords[i])
                throw InputError("grid axis " + std::to_string(i + 1) + " is '" + g.axes[i].name +
                                 "', expected '" + coords[i] + "'");
    }
    return g;
}

/// Parses `x=0,y=1,z=0` (any order) or a bare list `0,1,0` in coordinate order.
inline Point parse_point(const std::string& spec, const std::vector<std::string>& coords, std::size_t dim) {
    auto parts = split_list(spec, ',');
    Point p(dim, 0.0);
    if (parts.size() != dim)
        throw InputError("point has " + std::to_string(parts.size()) + " entries, expected " +
                         std::to_string(dim));
    std::vector<bool> seen(dim, false);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        auto eq = parts[i].find('=');
        if (eq == std::string::npos) {
            p[i] = parse_real(parts[i]);
            seen[i] = true;
            continue;
        }
        auto name = split_list(parts[i].substr(0, eq), ',').front();
        auto val = split_list(parts[i].substr(eq + 1), ',').front();
        std::size_t k = 0;
        while (k < coords.size() && coords[k] != name) ++k;
        if (k == coords.size()) throw InputError("unknown coordinate '" + name + "' in point");
        p[k] = parse_real(val);
        seen[k] = true;
    }
    for (std::size_t i = 0; i < dim; ++i)
        if (!seen[i]) throw InputError("point is missing coordinate " + std::to_string(i + 1));
    return p;
}

/// Seeded uniform random points in box^dim.
inline std::vector<Point> random_points(std::size_t count, std::size_t dim, Box box, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(box.lo, box.hi);
    std::vector<Point> out(count, Point(dim));
    for (auto& p : out)
        for (auto& x : p) x = u(rng);
    return out;
}

} // namespace srk
