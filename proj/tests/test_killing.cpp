#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "srkilling/killing.hpp"

namespace {

using namespace srk;

ContactStructure load(const std::string& src) {
    if (is_builtin_name(src)) return ContactStructure(load_structure(src));
    return ContactStructure(load_structure(std::string(SRKILLING_STRUCTURES_DIR) + "/" + src));
}

const Geometry& heis() {
    static const Geometry g(load("heisenberg:1"));
    return g;
}
const Geometry& su2() {
    static const Geometry g(load("su2"));
    return g;
}
const Geometry& su2_chart() {
    static const Geometry g(load("su2_chart.toml"));
    return g;
}

std::vector<Expr> field(const std::string& text, const std::vector<std::string>& coords = {"x", "y", "z"}) {
    std::vector<Expr> out;
    for (const auto& part : split_list(text, ',')) out.push_back(parse_expression(part, coords));
    return out;
}

// The four Heisenberg isometries: ξ, left translations' generators, rotation.
std::vector<std::vector<Expr>> heisenberg_fields() {
    return {field("0, 0, -1"), field("1, 0, y/2"), field("0, 1, -x/2"), field("-y, x, 0")};
}

// Right-invariant fields i·p, j·p, k·p and the Reeb direction ½p·k in the graph chart.
std::vector<std::vector<Expr>> su2_chart_fields() {
    const std::string w = "pow(1 - x^2 - y^2 - z^2, 1/2)";
    return {field(w + ", -z, y"), field("z, " + w + ", -x"), field("-y, x, " + w), field("y/2, -x/2, " + w + "/2")};
}

Generator gen(std::vector<double> X, std::vector<double> lower, double c, Point q) {
    const int h = static_cast<int>(X.size());
    Generator g = Generator::zero(h, std::move(q));
    for (int i = 0; i < h; ++i) g.X[i] = X[static_cast<std::size_t>(i)];
    std::size_t k = 0;
    for (int p = 1; p < h; ++p)
        for (int r = 0; r < p; ++r) {
            g.A(p, r) = lower[k];
            g.A(r, p) = -lower[k++];
        }
    g.c = c;
    return g;
}

std::vector<Point> samples(const Geometry& g, int count, std::uint64_t seed = 7) {
    return random_points(static_cast<std::size_t>(count), static_cast<std::size_t>(g.dim()), g.structure().box(), seed);
}

// Rank by Gaussian elimination with partial pivoting; independent of the SVD path.
int gauss_rank(Eigen::MatrixXd m, double tol) {
    int rank = 0;
    for (Eigen::Index col = 0; col < m.cols() && rank < m.rows(); ++col) {
        Eigen::Index piv = rank;
        for (Eigen::Index r = rank; r < m.rows(); ++r)
            if (std::abs(m(r, col)) > std::abs(m(piv, col))) piv = r;
        if (std::abs(m(piv, col)) <= tol) continue;
        m.row(piv).swap(m.row(rank));
        for (Eigen::Index r = rank + 1; r < m.rows(); ++r) m.row(r) -= m(r, col) / m(rank, col) * m.row(rank);
        ++rank;
    }
    return rank;
}

TEST(AZ, HeisenbergHandValues) {
    const auto& g = heis();
    auto xi = a_z_matrix(g, field("0, 0, -1"), {0.3, -0.2, 0.7});
    EXPECT_NEAR(xi.gen.X.norm(), 0.0, 1e-15);
    EXPECT_NEAR(xi.gen.A.norm(), 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(xi.gen.c, 1.0);

    auto y1 = a_z_matrix(g, field("1, 0, y/2"), {0, 0, 0});
    EXPECT_DOUBLE_EQ(y1.gen.X[0], 1.0);
    EXPECT_DOUBLE_EQ(y1.gen.X[1], 0.0);
    EXPECT_DOUBLE_EQ(y1.gen.c, 0.0);
    auto y1b = a_z_matrix(g, field("1, 0, y/2"), {0, 1, 0});
    EXPECT_DOUBLE_EQ(y1b.gen.c, -1.0);
    EXPECT_NEAR(y1b.gen.A.norm(), 0.0, 1e-15);

    // [J, X1] = −X2 and [J, X2] = X1, so A e1 = −e2, A e2 = e1.
    auto j = a_z_matrix(g, field("-y, x, 0"), {0, 0, 0});
    EXPECT_DOUBLE_EQ(j.gen.A(1, 0), -1.0);
    EXPECT_DOUBLE_EQ(j.gen.A(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(j.gen.c, 0.0);
    EXPECT_DOUBLE_EQ(a_z_matrix(g, field("-y, x, 0"), {1, 1, 0}).gen.c, 1.0);
    EXPECT_LT(j.contact_residual, 1e-15);

    // [∂x, X2] = ½∂z, α(½∂z) = −½
    EXPECT_NEAR(a_z_matrix(g, field("1, 0, 0"), {0, 0, 0}).contact_residual, 0.5, 1e-15);
}

TEST(AZ, JetsMatchSymbolic) {
    // symbolic A_Z needs only the connection, not the (swelling) curvature
    Connection conn(SymbolicFrame(load("su2_chart.toml")));
    const auto& jet = su2_chart();
    ASSERT_TRUE(jet.uses_jets());
    for (const auto& z : su2_chart_fields()) {
        auto fd = field_frame_data(conn, z);
        for (const auto& p : samples(jet, 3)) {
            auto b = a_z_matrix(jet, z, p).gen;
            EXPECT_NEAR(evaluate(fd.c, p), b.c, 1e-12);
            for (int k = 0; k < 2; ++k) {
                EXPECT_NEAR(evaluate(fd.X[static_cast<std::size_t>(k)], p), b.X[k], 1e-12);
                for (int j = 0; j < 2; ++j) EXPECT_NEAR(evaluate(fd.A[{k, j}], p), b.A(k, j), 1e-12);
            }
        }
    }
}

TEST(Derivation, ZeroGeneratorAndReeb) {
    const auto& g = heis();
    Point q{0.2, 0.1, -0.4};
    auto v = g.values(q, 1);
    for (const auto& gn : {Generator::zero(2, q), gen({0, 0}, {0}, 1, q)}) {
        auto d = derivation_apply(gn, v.R[0], v.R[1], v.xi_R[0]);
        for (double x : d.data) EXPECT_EQ(x, 0.0);
    }
}

TEST(Derivation, RotationPreservesDalphaOnSu2) {
    const auto& g = su2();
    Point q{0, 0, 0};
    auto v = g.values(q, 1);
    auto d = derivation_apply(gen({0, 0}, {1}, 0, q), v.dalpha[0], v.dalpha[1], v.xi_dalpha[0]);
    for (double x : d.data) EXPECT_NEAR(x, 0.0, 1e-15);
}

TEST(Derivation, MatchesSlotwiseDefinition) {
    // random (1,2) tensor: D(T)^k_{ij} = X^c ∇_c T + c ∇_ξ T + A^k_m T^m_{ij} − T^k_{mj} A^m_i − T^k_{im} A^m_j
    const int h = 3;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    NumTensor T(h, 1, 2), nT(h, 1, 3), xT(h, 1, 2);
    for (auto* t : {&T, &nT, &xT})
        for (auto& x : t->data) x = u(rng);
    Generator g = Generator::zero(h, {0, 0, 0});
    for (int i = 0; i < h; ++i) g.X[i] = u(rng);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < h; ++j) g.A(i, j) = u(rng);
    g.c = u(rng);
    auto d = derivation_apply(g, T, nT, xT);
    for (int k = 0; k < h; ++k)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < h; ++j) {
                double want = g.c * xT[{k, i, j}];
                for (int c = 0; c < h; ++c) want += g.X[c] * nT[{k, i, j, c}];
                for (int m = 0; m < h; ++m)
                    want += g.A(k, m) * T[{m, i, j}] - T[{k, m, j}] * g.A(m, i) - T[{k, i, m}] * g.A(m, j);
                EXPECT_NEAR((d[{k, i, j}]), want, 1e-14);
            }
}

TEST(GeneratorSpace, HeisenbergHasFullDimension) {
    const auto& g = heis();
    auto sp = generator_space(g, {0, 0, 0});
    ASSERT_TRUE(sp.certified);
    EXPECT_LE(sp.m_used, 2);
    EXPECT_EQ(sp.dims, (std::vector<int>{4, 4, 4}));
    EXPECT_EQ(sp.dim(), 4);
    EXPECT_EQ(Generator::unknowns(2), 4);
    // basis orthonormal
    EXPECT_LT((sp.B.transpose() * sp.B - Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-12);
    Eigen::MatrixXd fields(4, 4);
    int col = 0;
    for (const auto& z : heisenberg_fields()) {
        auto a = a_z_matrix(g, z, {0, 0, 0});
        EXPECT_LT(sp.membership_residual(a.gen), 1e-8);
        fields.col(col++) = a.gen.to_vector();
    }
    EXPECT_EQ(gauss_rank(fields, 1e-9), 4);
}

TEST(GeneratorSpace, HeisenbergFiveDimensional) {
    Geometry g(load("heisenberg:2"));
    auto sp = generator_space(g, {0.1, 0.2, -0.3, 0.4, 0.5});
    EXPECT_TRUE(sp.certified);
    EXPECT_EQ(sp.dim(), 9);
    EXPECT_EQ(Generator::unknowns(4), 11);
}

TEST(GeneratorSpace, Su2MatchesGaussianRank) {
    const auto& g = su2();
    Point q{0, 0, 0};
    auto sp = generator_space(g, q);
    EXPECT_TRUE(sp.certified);
    EXPECT_EQ(sp.dim(), 4);
    Eigen::MatrixXd f = f_matrix(g.values(q, 3), 2, q);
    EXPECT_EQ(4 - gauss_rank(f, 1e-9), 4);
}

TEST(GeneratorSpace, Su2ChartAnalogue) {
    const auto& g = su2_chart();
    for (const auto& q : samples(g, 2)) {
        auto sp = generator_space(g, q);
        EXPECT_TRUE(sp.certified);
        EXPECT_EQ(sp.dim(), 4);
        for (const auto& z : su2_chart_fields()) EXPECT_LT(sp.membership_residual(a_z_matrix(g, z, q).gen), 1e-8);
    }
}

TEST(GeneratorSpace, Invariants) {
    for (const Geometry* g : {&heis(), &su2(), &su2_chart()}) {
        const int n = g->structure().n();
        for (const auto& q : samples(*g, 2, 11)) {
            auto sp = generator_space(*g, q);
            for (std::size_t i = 1; i < sp.dims.size(); ++i) EXPECT_LE(sp.dims[i], sp.dims[i - 1]);
            EXPECT_LE(sp.dim(), (n + 1) * (n + 1));
            EXPECT_LT(sp.membership_residual(gen({0, 0}, {0}, 1, q)), 1e-10);
        }
    }
}

TEST(GeneratorSpace, FixedOrderAndBound) {
    const auto& g = heis();
    GeneratorSpaceOptions opt;
    opt.order = 1;
    auto sp = generator_space(g, {0, 0, 0}, opt);
    EXPECT_EQ(sp.m_used, 1);
    EXPECT_FALSE(sp.certified);

    Geometry small(load("heisenberg:1"), Backend::Auto, 64);
    auto capped = generator_space(small, {0, 0, 0});
    EXPECT_FALSE(capped.certified);
    EXPECT_FALSE(capped.note.empty());
    EXPECT_EQ(capped.dims.size(), 2u);  // ∇²R has 64 components, ∇³R does not fit
}

TEST(GeneratorSpace, RefusesNonSpecial) {
    EXPECT_THROW(Geometry(load("nonspecial.toml")), GeometryError);
}

TEST(LieDerivative, KillingFieldsAnnihilateCurvature) {
    // L_Z R = 0 and L_Z dα = 0 for Killing Z: the A_Z generator is in ker f_q.
    struct Case {
        const Geometry* g;
        std::vector<std::vector<Expr>> fields;
    };
    for (const auto& cs : {Case{&heis(), heisenberg_fields()}, Case{&su2_chart(), su2_chart_fields()}})
        for (const auto& q : samples(*cs.g, 2, 5)) {
            Eigen::MatrixXd f = f_matrix(cs.g->values(q, 3), 2, q);
            for (const auto& z : cs.fields) EXPECT_LT((f * a_z_matrix(*cs.g, z, q).gen.to_vector()).norm(), 1e-8);
        }
}

TEST(Transport, Y1AlongVerticalLine) {
    const auto& g = heis();
    auto r = transport(g, gen({1, 0}, {0}, 0, {0, 0, 0}), Curve::from_exprs(field("0, t, 0", {"t"}), 0, 1), 1e-3);
    EXPECT_EQ(r.steps, 1000u);
    EXPECT_NEAR(r.end.X[0], 1.0, 1e-8);
    EXPECT_NEAR(r.end.X[1], 0.0, 1e-8);
    EXPECT_NEAR(r.end.A.norm(), 0.0, 1e-8);
    EXPECT_NEAR(r.end.c, -1.0, 1e-8);
}

TEST(Transport, TrivialGeneratorsAreInvariant) {
    auto curve = Curve::from_exprs(field("sin(t)/4, t^2/4, (cos(t) - 1)/4", {"t"}), 0, 1);
    for (const Geometry* g : {&heis(), &su2_chart()}) {
        for (const auto& g0 : {Generator::zero(2, {0, 0, 0}), gen({0, 0}, {0}, 1, {0, 0, 0})}) {
            auto r = transport(*g, g0, curve, 1e-2);
            EXPECT_LT(deviation(r.end, g0), 1e-15);
        }
    }
}

TEST(Transport, Errors) {
    const auto& g = heis();
    auto curve = Curve::segment({0, 0, 0}, {1, 0, 0});
    EXPECT_THROW(transport(g, Generator::zero(2, {0, 0, 0}), curve, 0.0), InputError);
    EXPECT_THROW(transport(g, Generator::zero(2, {0, 0, 1e-6}), curve), InputError);
    EXPECT_THROW(transport(g, Generator::zero(4, {0, 0, 0}), curve), InputError);
}

TEST(Transport, AgreesWithKillingFieldsAlongCurves) {
    // transporting A_Z(q0) reproduces A_Z at the curve end; skewness is kept
    struct Case {
        const Geometry* g;
        std::vector<std::vector<Expr>> fields;
        std::string curve;
    };
    for (const auto& cs : {Case{&heis(), heisenberg_fields(), "t - t^2, sin(2*t)/2, t/3"},
                           Case{&su2_chart(), su2_chart_fields(), "t/3, t^2/4 - t/5, sin(t)/4"}}) {
        auto curve = Curve::from_exprs(field(cs.curve, {"t"}), 0, 1);
        for (const auto& z : cs.fields) {
            auto start = a_z_matrix(*cs.g, z, curve.start()).gen;
            auto r = transport(*cs.g, start, curve, 1e-2);
            EXPECT_LT(r.skew_drift, 1e-8);
            EXPECT_LT(deviation(r.end, a_z_matrix(*cs.g, z, curve.end()).gen), 1e-7);
            EXPECT_LT(generator_space(*cs.g, curve.end()).membership_residual(r.end), 1e-6);
        }
    }
}

TEST(Transport, RotationEquivariance) {
    // φ = rotation by ϑ about the z-axis is an isometry with dφ(e1, e2) = rotation of the frame
    const auto& g = heis();
    const double th = 0.7, co = std::cos(th), si = std::sin(th);
    Eigen::Matrix2d rot;
    rot << co, -si, si, co;
    Generator g0 = gen({0.3, -0.8}, {0.4}, 0.25, {0, 0, 0});
    auto curve = Curve::from_exprs(field("t, t^2 - t/2, sin(t)/3", {"t"}), 0, 1);
    auto moved = Curve::from_exprs(field("0.7648421872844885*t - 0.644217687237691*(t^2 - t/2),"
                                         "0.644217687237691*t + 0.7648421872844885*(t^2 - t/2), sin(t)/3",
                                         {"t"}),
                                   0, 1);
    ASSERT_NEAR(co, 0.7648421872844885, 1e-15);
    ASSERT_NEAR(si, 0.644217687237691, 1e-15);
    auto push = [&](const Generator& a, Point q) {
        return Generator{rot * a.X, rot * a.A * rot.transpose(), a.c, std::move(q)};
    };
    auto end = transport(g, g0, curve, 1e-3).end;
    auto other = transport(g, push(g0, {0, 0, 0}), moved, 1e-3).end;
    EXPECT_LT(deviation(push(end, other.q), other), 1e-6);
}

TEST(PathIndependence, Heisenberg) {
    const auto& g = heis();
    Generator y1 = gen({1, 0}, {0}, 0, {0, 0, 0});
    auto seg = Curve::segment({0, 0, 0}, {1, 1, 0});
    auto arc = Curve::from_exprs(field("t, t^2, 0", {"t"}), 0, 1);
    auto r = path_independence(g, y1, seg, arc, 1e-3);
    EXPECT_LT(r.deviation, 1e-6);
    // analytic: A_{Y1} at (1,1,0)
    EXPECT_LT(deviation(r.first.end, a_z_matrix(g, field("1, 0, y/2"), {1, 1, 0}).gen), 1e-8);
    EXPECT_EQ(path_independence(g, y1, seg, seg).deviation, 0.0);
    EXPECT_EQ(path_independence(g, gen({0, 0}, {0}, 1, {0, 0, 0}), seg, arc).deviation, 0.0);
    EXPECT_THROW(path_independence(g, y1, seg, Curve::segment({0, 0, 0}, {1, 1, 0.1})), InputError);
}

TEST(Reconstruct, RotationOnGrid) {
    const auto& g = heis();
    auto grid = parse_grid("x:-1:1:5,y:-1:1:5,z:-1:1:5", {"x", "y", "z"});
    auto f = reconstruct_field(g, gen({0, 0}, {-1}, 0, {0, 0, 0}), grid);
    ASSERT_EQ(f.values.size(), 125u);
    double err = 0;
    for (std::size_t k = 0; k < f.points.size(); ++k) {
        const auto& p = f.points[k];
        err = std::max(err, deviation(f.values[k], a_z_matrix(g, field("-y, x, 0"), p).gen));
        // Z = −y∂x + x∂y in coordinates
        err = std::max({err, std::abs(f.Z[k][0] + p[1]), std::abs(f.Z[k][1] - p[0]), std::abs(f.Z[k][2])});
        err = std::max(err, std::abs(f.values[k].c - 0.5 * (p[0] * p[0] + p[1] * p[1])));
    }
    EXPECT_LT(err, 1e-6);
    auto checks = verify_field(g, f);
    EXPECT_TRUE(all_pass(checks));
    EXPECT_EQ(find_check(checks, "eqs_a").points, 27u);
}

TEST(Reconstruct, TranslationAndReeb) {
    const auto& g = heis();
    auto grid = parse_grid("x:-1:1:3,y:-1:1:3,z:-1:1:3", {"x", "y", "z"});
    auto f = reconstruct_field(g, gen({1, 0}, {0}, 0, {0, 0, 0}), grid);
    for (std::size_t k = 0; k < f.points.size(); ++k) {
        EXPECT_NEAR(f.values[k].X[0], 1.0, 1e-12);
        EXPECT_NEAR(f.values[k].X[1], 0.0, 1e-12);
        EXPECT_NEAR(f.values[k].c, -f.points[k][1], 1e-12);
    }
    auto r = reconstruct_field(g, gen({0, 0}, {0}, 1, {0, 0, 0}), grid);
    for (std::size_t k = 0; k < r.points.size(); ++k) {
        EXPECT_EQ(r.values[k].c, 1.0);
        EXPECT_EQ(r.Z[k], (Point{0, 0, -1}));
    }
}

TEST(Reconstruct, RejectsNonMembersAndBadGrids) {
    Geometry g(load("heisenberg:2"));
    Point q0(5, 0.0);
    auto sp = generator_space(g, q0);
    ASSERT_EQ(sp.dim(), 9);
    // the part of a coordinate direction orthogonal to the generator space
    Eigen::VectorXd u = Eigen::VectorXd::Zero(11);
    Eigen::VectorXd best;
    for (int j = 0; j < 11; ++j) {
        u.setZero();
        u[j] = 1;
        Eigen::VectorXd r = u - sp.B * (sp.B.transpose() * u);
        if (best.size() == 0 || r.norm() > best.norm()) best = r;
    }
    Generator bad = Generator::from_vector(best / best.norm(), 4, q0);
    auto grid = GridSpec::uniform(g.structure().coords(), g.structure().box(), 2);
    EXPECT_THROW(reconstruct_field(g, bad, grid), GeometryError);

    auto outside = parse_grid("x:-2:1:3,y:-1:1:3,z:-1:1:3", {"x", "y", "z"});
    EXPECT_THROW(reconstruct_field(heis(), Generator::zero(2, {0, 0, 0}), outside), InputError);
}

TEST(VerifyKilling, HeisenbergFields) {
    const auto& g = heis();
    auto pts = samples(g, 100);
    for (const auto& z : heisenberg_fields()) {
        auto checks = verify_killing(g, z, pts, 1e-9);
        EXPECT_EQ(checks.size(), 8u);
        for (const auto& c : checks) {
            EXPECT_TRUE(c.pass) << c.name << " " << c.max_residual;
            EXPECT_EQ(c.points, 100u);
        }
    }
    auto zero = verify_killing(g, field("0, 0, 0"), pts);
    for (const auto& c : zero) EXPECT_EQ(c.max_residual, 0.0);
}

TEST(VerifyKilling, TranslationInXIsNotKilling) {
    auto grid = GridSpec::uniform({"x", "y", "z"}, {-1, 1}, 3).points();
    auto checks = verify_killing(heis(), field("1, 0, 0"), grid);
    EXPECT_FALSE(all_pass(checks));
    EXPECT_GE(find_check(checks, "contact").max_residual, 0.1);
}

TEST(VerifyKilling, Su2ChartFields) {
    const auto& g = su2_chart();
    auto pts = samples(g, 10);
    for (const auto& z : su2_chart_fields()) {
        auto checks = verify_killing(g, z, pts, 1e-9);
        for (const auto& c : checks) EXPECT_TRUE(c.pass) << c.name << " " << c.max_residual;
        EXPECT_LT(find_check(checks, "curvature").max_residual, 1e-8);
    }
    // a field that is contact-like nowhere near Killing
    EXPECT_FALSE(all_pass(verify_killing(g, field("1, 0, 0"), pts)));
}

TEST(VerifyKilling, NoPointsStillNamesChecks) {
    auto checks = verify_killing(su2_chart(), su2_chart_fields()[0], {});
    EXPECT_EQ(checks.size(), 8u);
    for (const auto& c : checks) EXPECT_EQ(c.points, 0u);
}

TEST(RiemannianExtension, HeisenbergFields) {
    const auto& g = heis();
    auto pts = samples(g, 100);
    for (const auto& z : heisenberg_fields()) EXPECT_TRUE(all_pass(riemannian_extension_check(g, z, pts)));
    EXPECT_EQ(riemannian_extension_check(g, field("0, 0, -1"), pts).front().max_residual, 0.0);
    auto bad = riemannian_extension_check(g, field("1, 0, 0"), pts);
    EXPECT_GE(bad.front().max_residual, 0.1);
    EXPECT_FALSE(bad.front().pass);
}

TEST(Scan, HeisenbergIsRegular) {
    const auto& g = heis();
    auto grid = parse_grid("x:-1:1:3,y:-1:1:3,z:-1:1:3", {"x", "y", "z"});
    auto m = scan_regularity(g, grid);
    ASSERT_EQ(m.dims.size(), 27u);
    for (std::size_t k = 0; k < 27; ++k) {
        EXPECT_EQ(m.dims[k], 4);
        EXPECT_TRUE(m.regular[k]);
    }
    EXPECT_EQ(m.semicontinuity_violations, 0u);
    EXPECT_TRUE(scan_regularity(g, GridSpec{}).dims.empty());
}

TEST(Scan, LieModeIsOnePoint) {
    auto m = scan_regularity(su2(), GridSpec{});
    EXPECT_TRUE(m.homogeneous);
    ASSERT_EQ(m.dims.size(), 1u);
    EXPECT_EQ(m.dims[0], 4);
    EXPECT_TRUE(m.regular[0]);
}

} // namespace
