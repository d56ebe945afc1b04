#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "random_expr.hpp"
#include "srkilling/jet.hpp"

namespace {

using namespace srk;

const std::vector<std::string> kXYZ{"x", "y", "z"};

TEST(JetSpace, MonomialCounts) {
    const auto& s = JetSpace::get(3, 4);
    EXPECT_EQ(s.mono.size(), 35u);
    EXPECT_EQ(s.upto[0], 1u);
    EXPECT_EQ(s.upto[1], 4u);
    EXPECT_EQ(s.upto[2], 10u);
}

TEST(Jet, ZeroIsExact) {
    Jet z;
    EXPECT_TRUE(z.is_zero());
    EXPECT_TRUE((z * Jet::constant(JetSpace::get(2, 2), 3.0)).is_zero());
    EXPECT_EQ(z.derivative(0).value(), 0.0);
}

TEST(Jet, OrderIsTracked) {
    const auto& s = JetSpace::get(2, 3);
    Jet x = Jet::variable(s, 0, 0.5);
    EXPECT_EQ(x.order(), 3);
    EXPECT_EQ(x.derivative(0).order(), 2);
    EXPECT_EQ((x * x.derivative(1)).order(), 2);
    EXPECT_THROW(x.derivative(0).derivative(0).derivative(0).derivative(0), Error);
}

TEST(Jet, ProductRule) {
    const auto& s = JetSpace::get(2, 3);
    Jet x = Jet::variable(s, 0, 0.3), y = Jet::variable(s, 1, -0.7);
    Jet f = x * x * y; // x²y
    EXPECT_NEAR(f.value(), 0.09 * -0.7, 1e-15);
    EXPECT_NEAR(f.derivative(0).value(), 2 * 0.3 * -0.7, 1e-15);
    EXPECT_NEAR(f.derivative(0).derivative(1).value(), 0.6, 1e-15);
    EXPECT_NEAR(f.derivative(0).derivative(0).derivative(1).value(), 2.0, 1e-15);
}

// Jets of random expressions reproduce nested symbolic derivatives.
TEST(Property, JetDerivativesMatchSymbolic) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    std::uniform_int_distribution<int> var(0, 2);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        Expr e = testing_support::random_expr(rng, kXYZ, 3);
        std::vector<Expr> one{e};
        JetTape tape(one);
        std::vector<double> p{u(rng), u(rng), u(rng)};
        int v1 = var(rng), v2 = var(rng), v3 = var(rng);
        try {
            Jet j = tape.eval(p, 3)[0];
            Expr d1 = differentiate(e, v1), d2 = differentiate(d1, v2), d3 = differentiate(d2, v3);
            double vals[4] = {evaluate(e, p), evaluate(d1, p), evaluate(d2, p), evaluate(d3, p)};
            Jet j1 = j.derivative(v1), j2 = j1.derivative(v2), j3 = j2.derivative(v3);
            double got[4] = {j.value(), j1.value(), j2.value(), j3.value()};
            for (int k = 0; k < 4; ++k) EXPECT_NEAR(got[k], vals[k], 1e-9 * (1 + std::abs(vals[k]))) << to_string(e);
            ++checked;
        } catch (const EvalError&) {
        }
    }
    EXPECT_GT(checked, 150);
}

TEST(JetTape, SignAwareRootsAndErrors) {
    Expr cube = pow(variable(0, "x"), Rational(1, 3));
    Expr root = pow(variable(0, "x"), Rational(1, 2));
    std::vector<Expr> a{cube}, b{root};
    std::vector<double> p{-8.0};
    Jet j = JetTape(a).eval(p, 2)[0];
    EXPECT_NEAR(j.value(), -2.0, 1e-14);
    EXPECT_NEAR(j.derivative(0).value(), 1.0 / 12.0, 1e-14); // (1/3)·x^(-2/3) = 1/12
    EXPECT_THROW(JetTape(b).eval(p, 2), EvalError);
}

} // namespace
