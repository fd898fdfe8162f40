#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rsv/criteria.hpp"

using namespace rsv;

namespace {

constexpr double pi = std::numbers::pi;

Field unit(std::size_t n, std::size_t k)
{
    Field e(n);
    e[k] = 1;
    return e;
}

double rel(const Field& a, const Field& b)
{
    return oracle::max_diff(a, b) / std::fmax(max_abs(b), 1e-300);
}

} // namespace

TEST(Assemble, ConstantVectorGivesDepth)
{
    Grid const g(64, 1.0);
    auto const op = assemble(Field(64, 1.0), 1.0, g);
    Field const r = op.apply(Field(64, 2.5));
    for (double v : r) {
        EXPECT_NEAR(v, 2.5, 1e-9);
    }
}

TEST(Assemble, RejectsBadDepthAndEpsilon)
{
    Grid const g(32, 1.0);
    Field h(32, 1.0);
    EXPECT_THROW(assemble(h, 0.0, g), Error);
    h[5] = 0;
    try {
        (void)assemble(h, 1.0, g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::non_positive_depth);
    }
}

TEST(Assemble, FourierSymbol)
{
    double const hs = 1.3, eps = 0.4;
    Grid const g(128, 2 * pi);
    auto const op = assemble(Field(128, hs), eps, g);
    for (int k : {1, 5, 31, 64}) {
        Field const c = tabulate(g, [&](double x) { return std::cos(k * x); });
        double const s = std::sin(k * g.dx() / 2);
        double const sym = hs + 4 * eps * hs * hs * hs * s * s / (g.dx() * g.dx());
        Field const r = op.apply(c);
        for (std::size_t i = 0; i < 128; ++i) {
            EXPECT_NEAR(r[i], sym * c[i], 1e-9 * sym);
        }
    }
}

TEST(Assemble, MatchesDenseEntriesAndIsSymmetric)
{
    Grid const g(32, 1.0);
    Field const h = oracle::smooth_random(g, 1.0, 0.25, 3);
    auto const op = assemble(h, 0.7, g);
    auto const A = oracle::dense_operator(h, 0.7, g.dx());
    std::vector<Field> cols;
    for (std::size_t j = 0; j < 32; ++j) {
        cols.push_back(op.apply(unit(32, j)));
    }
    for (std::size_t i = 0; i < 32; ++i) {
        for (std::size_t j = 0; j < 32; ++j) {
            EXPECT_NEAR(cols[j][i], A[i][j], 1e-12 * std::fabs(A[i][i]));
            EXPECT_EQ(cols[j][i], cols[i][j]);
        }
    }
}

TEST(Solve, DepthGivesOnes)
{
    Grid const g(256, 1.0);
    Field const h = oracle::smooth_random(g, 1.0, 0.25, 11);
    Field const v = assemble(h, 1.0, g).solve(h);
    for (double x : v) {
        EXPECT_NEAR(x, 1.0, 1e-9);
    }
}

TEST(Solve, SineFourierOracle)
{
    for (std::size_t n : {64u, 512u, 4096u}) {
        Grid const g(n, 2 * pi);
        Field const s = tabulate(g, [](double x) { return std::sin(x); });
        Field const v = assemble(Field(n, 1.0), 1.0, g).solve(s);
        double const kt2 = 4 * std::pow(std::sin(g.dx() / 2), 2) / (g.dx() * g.dx());
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_NEAR(v[i], s[i] / (1 + kt2), 1e-10);
        }
        // Continuum limit sin/2 at O(dx^2).
        EXPECT_LE(oracle::max_diff(v, tabulate(g, [](double x) { return std::sin(x) / 2; })),
                  g.dx() * g.dx());
    }
}

TEST(Solve, DenseGaussianEliminationOracle)
{
    for (unsigned seed : {1u, 2u, 3u}) {
        Grid const g(200, 1.0);
        Field const h = oracle::smooth_random(g, 1.0, 0.25, seed);
        Field const b = oracle::smooth_random(g, 0.0, 1.0, seed + 100);
        EXPECT_GE(min_value(h), 0.5);
        EXPECT_LE(max_value(h), 1.5);
        for (double eps : {1.0, 1e-3}) {
            auto const x = oracle::gauss_solve(oracle::dense_operator(h, eps, g.dx()), b.values());
            Field const v = assemble(h, eps, g).solve(b);
            EXPECT_LE(rel(v, Field(x)), 1e-10) << "seed " << seed << " eps " << eps;
        }
    }
}

TEST(Solve, InvertsApply)
{
    Grid const g(1024, 3.0);
    Field const h = oracle::smooth_random(g, 1.0, 0.3, 5);
    Field const v = oracle::smooth_random(g, 0.2, 1.0, 6);
    auto const op = assemble(h, 0.5, g);
    EXPECT_LE(rel(op.solve(op.apply(v)), v), 1e-10);
    // Backward error of the solve: |A x - b| / (|A| |x| + |b|).
    Field const x = op.solve(v);
    Field const r = op.apply(x);
    double norm_A = 0;
    for (std::size_t i = 0; i < 1024; ++i) {
        std::size_t const im = i == 0 ? 1023 : i - 1;
        norm_A = std::fmax(norm_A, std::fabs(op.diagonal()[i]) + std::fabs(op.off_diagonal()[i])
                                       + std::fabs(op.off_diagonal()[im]));
    }
    EXPECT_LE(oracle::max_diff(r, v) / (norm_A * max_abs(x) + max_abs(v)), 1e-12);
}

TEST(Solve, EnergyPairingSymmetry)
{
    Grid const g(300, 2.0);
    Field const h = oracle::smooth_random(g, 1.0, 0.3, 8);
    Field const u = oracle::smooth_random(g, 0.0, 1.0, 9);
    Field const v = oracle::smooth_random(g, 0.0, 1.0, 10);
    auto const op = assemble(h, 0.8, g);
    Field const Au = op.apply(u);
    Field const Av = op.apply(v);
    double a = 0, b = 0, scale = 0;
    for (std::size_t i = 0; i < 300; ++i) {
        a += Au[i] * v[i];
        b += u[i] * Av[i];
        scale += std::fabs(Au[i] * v[i]);
    }
    EXPECT_LE(std::fabs(a - b), 1e-13 * scale);
}

TEST(Solve, MaximumPrincipleBounds)
{
    for (unsigned seed : {21u, 22u, 23u}) {
        for (double eps : {1.0, 0.1, 0.01}) {
            Grid const g(1024, 1.0);
            Field const h = oracle::smooth_random(g, 1.0, 0.25, seed);
            Field const phi = oracle::smooth_random(g, 0.3, 1.0, seed + 7);
            Field hphi(1024);
            for (std::size_t i = 0; i < 1024; ++i) {
                hphi[i] = h[i] * phi[i];
            }
            Field const v = assemble(h, eps, g).solve(hphi);
            double const np = max_abs(phi);
            EXPECT_LE(max_abs(v), np * (1 + 1e-8));
            double const hmin = min_value(h), hmax = max_value(h);
            double const bound = 2 / std::sqrt(eps) * hmax * hmax / (hmin * hmin * hmin) * np;
            EXPECT_LE(max_abs(derivative(v, g)), bound * 1.05);
        }
    }
}

//---------------------------------------------------------------------------//
TEST(NonlocalF, ConstantStateIsZero)
{
    Grid const g(64, 1.0);
    Params p;
    State const s{Field(64, 0.2), Field(64, -0.4), 0};
    for (double v : nonlocal_f(s, p, g)) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(NonlocalF, FourierOracle)
{
    // h = h_star, eta = 0: psi = 2 h^3 (D u)^2, f = eps alpha I^{-1} D psi mode by mode.
    Params p;
    p.h_star = 1.2;
    p.epsilon = 0.3;
    p.alpha = 0.6;
    std::size_t const n = 96;
    Grid const g(n, 5.0);
    State s{Field(n), tabulate(g, [&](double x) {
                          return 0.7 * std::sin(2 * pi * x / 5) + 0.2 * std::cos(6 * pi * x / 5);
                      }),
            0};
    Field ux(n);
    for (std::size_t i = 0; i < n; ++i) {
        ux[i] = (s.u[(i + 1) % n] - s.u[(i + n - 1) % n]) / (2 * g.dx());
    }
    Field psi(n);
    double const h3 = std::pow(p.h_star, 3);
    for (std::size_t i = 0; i < n; ++i) {
        psi[i] = 2 * h3 * ux[i] * ux[i];
    }
    auto F = oracle::dft(psi);
    for (std::size_t k = 0; k < n; ++k) {
        double const kk = oracle::wavenumber(k, n, 5.0);
        std::complex<double> const D(0, std::sin(kk * g.dx()) / g.dx());
        double const s2 = std::pow(std::sin(kk * g.dx() / 2), 2);
        double const sym = p.h_star + 4 * p.epsilon * h3 * s2 / (g.dx() * g.dx());
        F[k] *= p.epsilon * p.alpha * D / sym;
    }
    Field const expect = oracle::idft(F);
    Field const f = nonlocal_f(s, p, g);
    EXPECT_LE(oracle::max_diff(f, expect), 1e-10 * max_abs(expect));
}

TEST(NonlocalF, DenseSolveOracle)
{
    Params p;
    p.epsilon = 0.5;
    std::size_t const n = 128;
    Grid const g(n, 2.0);
    State s{oracle::smooth_random(g, 0.0, 0.3, 41), oracle::smooth_random(g, 0.0, 0.5, 42), 0};
    Field const h = depth(s, p);
    Field const rhs = derivative(nonlocal_flux(s, p, g), g);
    auto x = oracle::gauss_solve(oracle::dense_operator(h, p.epsilon, g.dx()), rhs.values());
    for (double& v : x) {
        v *= p.epsilon * p.alpha;
    }
    EXPECT_LE(rel(nonlocal_f(s, p, g), Field(x)), 1e-10);
}

//---------------------------------------------------------------------------//
TEST(RiccatiQ, ConstantStateIsZero)
{
    Grid const g(64, 1.0);
    Params p;
    State const s{Field(64, 0.1), Field(64, 0.3), 0};
    for (double v : riccati_Q(s, p, g)) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(RiccatiQ, SupNormBound)
{
    Params p;
    for (unsigned seed : {51u, 52u}) {
        for (double eps : {1.0, 0.05}) {
            p.epsilon = eps;
            Grid const g(1024, 4.0);
            State s{oracle::smooth_random(g, 0.0, 0.2, seed),
                    oracle::smooth_random(g, 0.0, 0.4, seed + 1), 0};
            Field const prod = speed_gradient_product(s, p, g);
            Field const G = cumulative_primitive(prod, g, far_anchor(prod));
            Field const Q = riccati_Q(s, p, g);
            Field const h = depth(s, p);
            double const hmin = min_value(h), hmax = max_value(h);
            double const bound = 4 / std::sqrt(eps) * hmax * hmax / std::pow(hmin, 3) * max_abs(G);
            EXPECT_LE(max_abs(Q), bound * 1.05);
        }
    }
}

TEST(RiccatiQ, DecompositionRouteForZeroMeanIntegrand)
{
    // With a periodic primitive, 2 D I^{-1}(h G) equals the node average of the
    // face values 2 (phi_f + eps d+ I^{-1} d-(H phi_f)).
    Params p;
    p.epsilon = 0.3;
    Grid const g(512, 2.0);
    Field const h = oracle::smooth_random(g, 1.0, 0.25, 61);
    Field const phi = derivative(oracle::smooth_random(g, 0.0, 1.0, 62), g);
    Field const Q = riccati_Q(h, phi, p.epsilon, g);

    auto const op = assemble(h, p.epsilon, g);
    Field const pf = face_average(phi);
    Field const hf = face_average(h);
    Field flux(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        flux[i] = hf[i] * hf[i] * hf[i] * pf[i];
    }
    Field const w = forward_difference(op.solve(backward_difference(flux, g)), g);
    double const scale = max_abs(phi);
    double diff = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        std::size_t const im = i == 0 ? g.size() - 1 : i - 1;
        double const qf = 2 * (pf[i] + p.epsilon * w[i]);
        double const qfm = 2 * (pf[im] + p.epsilon * w[im]);
        diff = std::fmax(diff, std::fabs(Q[i] - 0.5 * (qf + qfm)));
    }
    EXPECT_LE(diff, 1e-8 * scale);
}

TEST(RiccatiQ, SimpleWaveDenseOracle)
{
    Params p;
    Grid const g(256, 1e-2);
    State const s = generate_blowup_data(0.1, p, g);
    Field const h = depth(s, p);
    Field const prod = speed_gradient_product(s, p, g);
    // Primitive summed by hand from the same anchor.
    std::size_t const n = g.size();
    std::size_t peak = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::fabs(prod[i]) > std::fabs(prod[peak])) {
            peak = i;
        }
    }
    std::size_t const a = (peak + n / 2) % n;
    std::vector<double> hG(n);
    double G = 0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t const i = (a + k) % n;
        if (k > 0) {
            G += 0.5 * g.dx() * (prod[(i + n - 1) % n] + prod[i]);
        }
        hG[i] = h[i] * G;
    }
    auto const y = oracle::gauss_solve(oracle::dense_operator(h, p.epsilon, g.dx()), hG);
    Field expect(n);
    for (std::size_t i = 0; i < n; ++i) {
        expect[i] = (y[(i + 1) % n] - y[(i + n - 1) % n]) / g.dx();
    }
    Field const Q = riccati_Q(s, p, g);
    // Q is tiny next to the local product here; check against both scales.
    EXPECT_LE(oracle::max_diff(Q, expect), 1e-8 * max_abs(prod));
    EXPECT_LE(oracle::max_diff(Q, expect), 1e-6 * max_abs(expect));
}

//---------------------------------------------------------------------------//
TEST(Decomposition, ZeroPhi)
{
    Grid const g(64, 1.0);
    EXPECT_EQ(decomposition_residual(Field(64, 1.0), Field(64), Params{}, g), 0.0);
}

TEST(Decomposition, ConstantDepthCosine)
{
    for (std::size_t n : {64u, 512u}) {
        Grid const g(n, 3.0);
        Field const phi = tabulate(g, [](double x) { return std::cos(2 * pi * x / 3); });
        EXPECT_LE(decomposition_residual(Field(n, 1.0), phi, Params{}, g), 1e-8);
    }
}

TEST(Decomposition, RandomDepthExact)
{
    for (std::size_t n : {256u, 512u, 1024u, 2048u}) {
        Grid const g(n, 1.0);
        Field const h = oracle::smooth_random(g, 1.0, 0.25, 77);
        Field const b = tabulate(g, [](double x) { return bump((x - 0.5) / 0.3); });
        Field const phi = derivative(b, g);
        double const r = decomposition_residual(h, phi, Params{}, g);
        EXPECT_LE(r, 1e-6 * max_abs(phi)) << "n = " << n;
    }
}

TEST(Decomposition, RejectsNonZeroMean)
{
    Grid const g(64, 1.0);
    try {
        (void)decomposition_residual(Field(64, 1.0), Field(64, 1.0), Params{}, g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::non_zero_mean);
    }
}

TEST(LandauKolmogorov, ConstantSineAndBumps)
{
    Grid const g(2048, 2.0);
    auto const c = landau_kolmogorov_check(Field(2048, 4.0), g);
    EXPECT_EQ(c.lhs, 0.0);
    EXPECT_EQ(c.rhs, 0.0);

    double const k = 2 * pi / 2.0;
    auto const s = landau_kolmogorov_check(tabulate(g, [&](double x) { return std::sin(k * x); }), g);
    EXPECT_NEAR(s.lhs, k * k, 1e-5 * k * k);
    EXPECT_NEAR(s.rhs, 2 * k * k, 1e-5 * k * k);

    for (double w : {2.0 / 10, 2.0 / 40}) {
        Field const b = tabulate(g, [&](double x) { return std::exp(-std::pow((x - 1.0) / w, 2)); });
        auto const r = landau_kolmogorov_check(b, g);
        EXPECT_GT(r.lhs, 0.0);
        EXPECT_LE(r.lhs, r.rhs * 1.05) << "w = " << w;
    }
}
