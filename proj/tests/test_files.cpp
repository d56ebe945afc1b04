#include <gtest/gtest.h>

#include "srkilling/files.hpp"

namespace {

using namespace srk;

const ContactStructure& heis() {
    static const ContactStructure s(load_structure("heisenberg:1"));
    return s;
}

TEST(CurveFile, ParsesRangeAndComponents) {
    auto c = parse_curve("# comment\n[curve]\nt_range = 0 2\ngamma = t, t^2, 1  # trailing\n", 3);
    EXPECT_EQ(c.t0, 0.0);
    EXPECT_EQ(c.t1, 2.0);
    ASSERT_EQ(c.gamma.size(), 3u);
    auto curve = c.curve();
    auto p = curve.position(1.5);
    EXPECT_DOUBLE_EQ(p[0], 1.5);
    EXPECT_DOUBLE_EQ(p[1], 2.25);
    EXPECT_DOUBLE_EQ(p[2], 1.0);
}

TEST(CurveFile, Rejects) {
    EXPECT_THROW(parse_curve("t_range = 0 1\ngamma = t, t, t\n", 3), InputError);
    EXPECT_THROW(parse_curve("[curve]\nt_range = 0 1\n", 3), InputError);
    EXPECT_THROW(parse_curve("[curve]\nt_range = 1 0\ngamma = t, t, t\n", 3), InputError);
    EXPECT_THROW(parse_curve("[curve]\nt_range = 0 1\ngamma = t, t\n", 3), InputError);
    EXPECT_THROW(parse_curve("[curve]\nt_range = 0 1\ngamma = t, x, t\n", 3), InputError);
    EXPECT_THROW(parse_curve("[curve]\nt_range = 0 1\nt_range = 0 1\ngamma = t, t, t\n", 3), InputError);
    EXPECT_THROW(parse_curve("[curve]\nt_range = 0 1\ngamma = t, t, t\nspeed = 2\n", 3), InputError);
    EXPECT_THROW(parse_curve("[generator]\n", 3), InputError);
    EXPECT_THROW(load_curve("/nonexistent/file.curve", 3), InputError);
}

TEST(GeneratorFile, LowerTriangleFixesSkewMatrix) {
    auto g = parse_generator("[generator]\nX = 1 -2\nA = 0.5\nc = 3\nat = x=1, y=0, z=0\n", heis());
    EXPECT_EQ(g.X[0], 1.0);
    EXPECT_EQ(g.X[1], -2.0);
    EXPECT_EQ(g.A(1, 0), 0.5);
    EXPECT_EQ(g.A(0, 1), -0.5);
    EXPECT_EQ(g.A(0, 0), 0.0);
    EXPECT_EQ(g.c, 3.0);
    EXPECT_EQ(g.q, (Point{1, 0, 0}));
}

TEST(GeneratorFile, RowsOfLargerRank) {
    const ContactStructure s(load_structure("heisenberg:2"));
    auto g = parse_generator("[generator]\nX = 0 0 0 0\nA = 1 ; 2 3 ; 4 5 6\nc = 0\nat = 0,0,0,0,0\n", s);
    EXPECT_EQ(g.A(2, 1), 3.0);
    EXPECT_EQ(g.A(3, 0), 4.0);
    EXPECT_EQ(g.A(0, 3), -4.0);
    EXPECT_EQ(g.skew_residual(), 0.0);
    EXPECT_THROW(parse_generator("[generator]\nX = 0 0 0 0\nA = 1 ; 2 ; 4 5 6\nc = 0\nat = 0,0,0,0,0\n", s),
                 InputError);
    EXPECT_THROW(parse_generator("[generator]\nX = 0 0 0 0\nA = 1 ; 2 3\nc = 0\nat = 0,0,0,0,0\n", s), InputError);
}

TEST(GeneratorFile, Rejects) {
    const auto& s = heis();
    EXPECT_THROW(parse_generator("[generator]\nX = 1\nA = 0\nc = 0\nat = 0,0,0\n", s), InputError);
    EXPECT_THROW(parse_generator("[generator]\nX = 1 0\nA = 0\nc = 0 1\nat = 0,0,0\n", s), InputError);
    EXPECT_THROW(parse_generator("[generator]\nX = 1 0\nA = 0\nat = 0,0,0\n", s), InputError);
    EXPECT_THROW(parse_generator("[generator]\nX = 1 0\nA = 0\nc = 0\nat = 0,0\n", s), InputError);
    EXPECT_THROW(parse_generator("[generator]\nX = 1 zero\nA = 0\nc = 0\nat = 0,0,0\n", s), InputError);
}

TEST(GeneratorFile, FormatRoundTripsExactly) {
    Generator g = Generator::zero(2, {0.1, -1.0 / 3.0, 2e-17});
    g.X << 1.0 / 7.0, -0.3;
    g.A(1, 0) = 0.7;
    g.A(0, 1) = -0.7;
    g.c = std::sqrt(2.0);
    auto back = parse_generator(format_generator(g), heis());
    EXPECT_EQ(back.X, g.X);
    EXPECT_EQ(back.A, g.A);
    EXPECT_EQ(back.c, g.c);
    EXPECT_EQ(back.q, g.q);
}

TEST(FormatReal, SeventeenDigits) {
    EXPECT_EQ(format_real(0.1), "0.10000000000000001");
    EXPECT_EQ(format_real(1.0), "1");
    EXPECT_EQ(std::stod(format_real(1.0 / 3.0)), 1.0 / 3.0);
}

} // namespace
