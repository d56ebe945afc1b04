#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "srkilling/expr.hpp"
#include "srkilling/grid.hpp"

namespace srk {

/// One named residual check: the max absolute residual over the tested points.
struct Check {
    std::string name;
    double max_residual = 0.0;
    std::size_t points = 0;
    double tol = 0.0;
    bool pass = true;
};

inline bool all_pass(const std::vector<Check>& checks) {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

inline const Check& find_check(const std::vector<Check>& checks, const std::string& name) {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw InputError("no check named '" + name + "'");
}

/// Evaluates residual expressions at every point; max |value| becomes the residual.
inline Check residual_check(std::string name, const std::vector<Expr>& residuals, const std::vector<Point>& points,
                            double tol) {
    Check c{std::move(name), 0.0, 0, tol, true};
    CompiledExprs tape(residuals);
    std::vector<double> out(tape.size());
    for (const auto& p : points) {
        tape.eval(p, out);
        for (double v : out) c.max_residual = std::max(c.max_residual, std::abs(v));
        ++c.points;
    }
    c.pass = c.max_residual < tol;
    return c;
}

} // namespace srk
