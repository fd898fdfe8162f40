#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "rsv/statespace.hpp"

using namespace rsv;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST(Grid, RejectsTinyOrBadGrids)
{
    EXPECT_THROW(Grid(8, 1.0), Error);
    EXPECT_THROW(Grid(64, 0.0), Error);
    EXPECT_THROW(Grid(64, -1.0), Error);
    Grid const g(64, 2.0);
    EXPECT_DOUBLE_EQ(g.dx(), 2.0 / 64);
    EXPECT_DOUBLE_EQ(g.x(10), 10 * 2.0 / 64);
}

TEST(Params, Validation)
{
    Params p;
    EXPECT_NO_THROW(p.validate());
    p.alpha = 1.5;
    EXPECT_THROW(p.validate(), Error);
    p = {};
    p.classical_branch = true;
    EXPECT_THROW(p.validate(), Error);
    p.epsilon = 0;
    EXPECT_NO_THROW(p.validate());
}

TEST(Derivative, ConstantAndLengthMismatch)
{
    Grid const g(32, 1.0);
    Field const c(32, 3.5);
    for (double v : derivative(c, g)) {
        EXPECT_EQ(v, 0.0);
    }
    try {
        (void)derivative(Field(31), g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::length_mismatch);
    }
}

TEST(Derivative, SineWithinTaylorBound)
{
    // Central difference error: |f'''| dx^2 / 6.
    for (std::size_t n : {64u, 256u, 1024u}) {
        Grid const g(n, 2 * pi);
        Field const f = tabulate(g, [](double x) { return std::sin(3 * x); });
        Field const d = derivative(f, g);
        double const bound = 27 * g.dx() * g.dx() / 6;
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_LE(std::fabs(d[i] - 3 * std::cos(3 * g.x(i))), bound * 1.0001);
        }
    }
}

TEST(Derivative, ExactOnInteriorLinear)
{
    Grid const g(32, 1.0);
    Field const f = tabulate(g, [](double x) { return 2 * x + 1; });
    Field const d = derivative(f, g);
    for (std::size_t i = 1; i + 1 < 32; ++i) {
        EXPECT_NEAR(d[i], 2.0, 1e-12);
    }
}

TEST(SecondDerivative, CosineSymbol)
{
    Grid const g(128, 2 * pi);
    Field const f = tabulate(g, [](double x) { return std::cos(2 * x); });
    Field const d = second_derivative(f, g);
    double const sym = -4 * std::pow(std::sin(g.dx()), 2) / (g.dx() * g.dx());
    for (std::size_t i = 0; i < 128; ++i) {
        EXPECT_NEAR(d[i], sym * f[i], 1e-10);
    }
}

TEST(Integrate, TrigonometricIdentities)
{
    Grid const g(200, 2 * pi);
    Field const s2 = tabulate(g, [](double x) { return std::sin(x) * std::sin(x); });
    EXPECT_NEAR(integrate(s2, g), pi, 1e-12);
    EXPECT_NEAR(integrate(Field(200, 1.0), g), 2 * pi, 1e-12);
    // Integral of a discrete derivative vanishes.
    Field const f = tabulate(g, [](double x) { return std::exp(std::sin(x)); });
    EXPECT_NEAR(integrate(derivative(f, g), g), 0.0, 1e-12);
}

TEST(CumulativePrimitive, ZeroOnesAndCosine)
{
    Grid const g(256, 2 * pi);
    for (double v : cumulative_primitive(Field(256), g, 7)) {
        EXPECT_EQ(v, 0.0);
    }
    Field const ones = cumulative_primitive(Field(256, 1.0), g, 0);
    for (std::size_t i = 0; i < 256; ++i) {
        EXPECT_NEAR(ones[i], i * g.dx(), 1e-12);
    }
    // Trapezoid error <= L dx^2 max|f''| / 12.
    Field const c = tabulate(g, [](double x) { return std::cos(x); });
    Field const F = cumulative_primitive(c, g, 0);
    double const bound = 2 * pi * g.dx() * g.dx() / 12;
    for (std::size_t i = 0; i < 256; ++i) {
        EXPECT_LE(std::fabs(F[i] - std::sin(g.x(i))), bound);
    }
    EXPECT_THROW((void)cumulative_primitive(c, g, 256), Error);
}

TEST(CumulativePrimitive, AnchorWrapsForward)
{
    Grid const g(16, 1.0);
    Field const F = cumulative_primitive(Field(16, 1.0), g, 10);
    EXPECT_EQ(F[10], 0.0);
    EXPECT_NEAR(F[15], 5 * g.dx(), 1e-14);
    EXPECT_NEAR(F[0], 6 * g.dx(), 1e-14);
    EXPECT_NEAR(F[9], 15 * g.dx(), 1e-14);
}

TEST(Sample, NodesAndPeriodicity)
{
    Grid const g(64, 1.0);
    Field const f = tabulate(g, [](double x) { return std::sin(2 * pi * x) + x * x; });
    for (std::size_t i = 0; i < 64; ++i) {
        EXPECT_NEAR(sample(f, g.x(i), g), f[i], 1e-14);
    }
    EXPECT_NEAR(sample(f, 0.3137, g), sample(f, 0.3137 + 1.0, g), 1e-13);
    EXPECT_NEAR(sample(f, 0.3137, g), sample(f, 0.3137 - 3.0, g), 1e-13);
}

TEST(Sample, CubicReproducedAwayFromWrap)
{
    Grid const g(32, 1.0);
    auto cubic = [](double x) { return 1 - 2 * x + 3 * x * x - 4 * x * x * x; };
    Field const f = tabulate(g, cubic);
    for (double x : {0.21, 0.5, 0.6123}) {
        EXPECT_NEAR(sample(f, x, g), cubic(x), 1e-13);
    }
}

TEST(Sample, MidpointQuarticBound)
{
    // |w(t)| at t = 1/2 is (9/16) dx^4; remainder max|f''''| |w| / 24.
    for (std::size_t n : {32u, 64u, 128u}) {
        Grid const g(n, 2 * pi);
        Field const f = tabulate(g, [](double x) { return std::sin(x); });
        double const h = g.dx();
        double const bound = 9.0 / 16 * std::pow(h, 4) / 24;
        for (std::size_t i = 0; i < n; i += 7) {
            double const x = g.x(i) + 0.5 * h;
            EXPECT_LE(std::fabs(sample(f, x, g) - std::sin(x)), bound * 1.0001);
        }
    }
}

TEST(Helpers, Extremes)
{
    Field const f(std::vector<double>{3, -1, 4, -5, 9, 2});
    EXPECT_EQ(min_value(f), -5);
    EXPECT_EQ(max_value(f), 9);
    EXPECT_EQ(max_abs(f), 9);
    EXPECT_EQ(argmin(f), 3u);
    EXPECT_TRUE(all_finite(f));
    Field g = f;
    g[2] = std::nan("");
    EXPECT_FALSE(all_finite(g));
}

TEST(Helpers, DepthFromState)
{
    Params p;
    p.alpha = 0.5;
    p.h_star = 2;
    State s{Field(std::vector<double>{0, 1, -2}), Field(3), 0};
    Field const h = depth(s, p);
    EXPECT_DOUBLE_EQ(h[0], 2);
    EXPECT_DOUBLE_EQ(h[1], 2.5);
    EXPECT_DOUBLE_EQ(h[2], 1);
}
