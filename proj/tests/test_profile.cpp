#include <gtest/gtest.h>

#include "rsv/run.hpp"

using namespace rsv;

namespace {

// P = -c |x - x0|^(beta - 1) and a matching R, with x0 off the nodes.
struct Synthetic {
    Field P;
    Field R;
};

Synthetic power_law(const Grid& g, double beta, double c, double offset_cells = 0.37)
{
    double const x0 = 0.5 * g.length() + offset_cells * g.dx();
    Synthetic s{Field(g.size()), Field(g.size())};
    for (std::size_t i = 0; i < g.size(); ++i) {
        double const d = g.x(i) - x0;
        s.P[i] = -c * std::pow(std::fabs(d), beta - 1);
        s.R[i] = 1 - (c / beta) * std::copysign(std::pow(std::fabs(d), beta), d);
    }
    return s;
}

} // namespace

TEST(ProfileFit, ThreeFifthsRoot)
{
    Grid const g(4096, 1.0);
    auto const s = power_law(g, 0.6, 1.0);
    auto const f = fit_profile(s.P, s.R, g);
    EXPECT_NEAR(f.exponent, 0.6, 0.01);
    EXPECT_GT(f.r_squared, 0.999);
    EXPECT_NEAR(f.b_fit, 1.0 / f.exponent, 0.05);
    EXPECT_EQ(f.points, f.distance.size());
    EXPECT_LT(f.window_lo, f.x0);
    EXPECT_GT(f.window_hi, f.x0);
}

TEST(ProfileFit, CubeRoot)
{
    Grid const g(4096, 1.0);
    auto const s = power_law(g, 1.0 / 3, 2.0);
    auto const f = fit_profile(s.P, s.R, g);
    EXPECT_NEAR(f.exponent, 1.0 / 3, 0.01);
}

TEST(ProfileFit, ScaleInvariant)
{
    Grid const g(4096, 1.0);
    auto const a = fit_profile(power_law(g, 0.6, 1.0).P, power_law(g, 0.6, 1.0).R, g);
    // Amplitude and length rescaling leave the exponent unchanged.
    Grid const g2(4096, 3e-3);
    auto const s2 = power_law(g2, 0.6, 40.0);
    auto const b = fit_profile(s2.P, s2.R, g2);
    EXPECT_NEAR(a.exponent, b.exponent, 1e-9);
    EXPECT_EQ(a.points, b.points);
}

TEST(ProfileFit, TighterOuterWindowStillConverges)
{
    Grid const g(8192, 1.0);
    auto const s = power_law(g, 0.6, 1.0);
    ProfileWindow w;
    w.inner_cells = 8;
    w.outer_fraction = 0.2;
    auto const f = fit_profile(s.P, s.R, g, w);
    EXPECT_NEAR(f.exponent, 0.6, 0.005);
}

TEST(ProfileFit, WindowTooNarrow)
{
    Grid const g(256, 1.0);
    Field P(256, 0.0), R(256, 0.0);
    P[100] = -5;
    P[101] = -3;
    P[99] = -3;
    try {
        fit_profile(P, R, g);
        FAIL() << "expected WindowTooNarrow";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::window_too_narrow);
    }
}

TEST(ProfileFit, NeedsNegativeMinimum)
{
    Grid const g(64, 1.0);
    Field P(64, 1.0), R(64, 0.0);
    try {
        fit_profile(P, R, g);
        FAIL() << "expected NoBlowupDetected";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::no_blowup_detected);
    }
}

TEST(HeuristicTime, ReducedRiccatiLaw)
{
    EXPECT_NEAR(heuristic_blowup_time(-8.0 / 3), 1.0, 1e-15);
    EXPECT_NEAR(heuristic_blowup_time(-16.0), 1.0 / 6, 1e-15);
    for (double bad : {0.0, 2.0}) {
        try {
            heuristic_blowup_time(bad);
            FAIL() << "expected NonNegativeInput";
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::non_negative_input);
        }
    }
}

TEST(StretchCheck, ExactTracesHaveZeroDeviation)
{
    std::vector<CharTrace> bundle;
    std::vector<double> P0{-10, -8, -6};
    double const t = 0.2;
    for (double p0 : P0) {
        CharTrace tr;
        tr.times = {0.0, t};
        double const s = 1 + 0.375 * p0 * t;
        tr.stretch = {1.0, s * s};
        tr.P_along = {p0, p0 / s};
        bundle.push_back(tr);
    }
    auto const rep = stretch_profile_check(bundle, P0, 0, {{1, 2}});
    EXPECT_NEAR(rep.max_relative_deviation, 0, 1e-15);
    EXPECT_NEAR(rep.center_relative_deviation, 0, 1e-15);
    ASSERT_EQ(rep.ratio_measured.size(), 1u);
    EXPECT_NEAR(rep.ratio_measured[0], rep.ratio_predicted[0], 1e-15);
    EXPECT_NEAR(predicted_stretch(t, -8), (1 - 0.6) * (1 - 0.6), 1e-15);
}

TEST(StretchCheck, ReportsDeviation)
{
    CharTrace tr;
    tr.times = {0.0, 0.1};
    tr.stretch = {1.0, 0.5};
    tr.P_along = {-4, -5};
    auto const rep = stretch_profile_check({tr}, {-4.0}, 0);
    double const pred = (1 - 0.15) * (1 - 0.15);
    EXPECT_NEAR(rep.samples[0].predicted, pred, 1e-15);
    EXPECT_NEAR(rep.max_relative_deviation, std::fabs(0.5 - pred) / pred, 1e-14);
    EXPECT_THROW(stretch_profile_check({tr}, {-4.0, -3.0}, 0), Error);
}
