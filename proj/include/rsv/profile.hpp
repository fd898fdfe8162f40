#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "criteria.hpp"
#include "riemann.hpp"

namespace rsv {

struct ProfileFit {
    double x0 = 0;
    double a_fit = 0;
    double b_fit = 0;
    double exponent = 0;
    double r_squared = 0;
    double window_lo = 0;
    double window_hi = 0;
    std::size_t points = 0;
    double t_fit = 0;
    // Samples used, as (|x - x0|, |P+|).
    std::vector<double> distance;
    std::vector<double> magnitude;
};

struct ProfileWindow {
    // Cells around x0 left out of the fit.
    std::size_t inner_cells = 3;
    // Stop once |P+| drops below this fraction of |min P+|.
    double outer_fraction = 0.1;
};

/*!
 * Power-law fit P+ ~ -c |x - x0|^(beta - 1) around the minimum of P+.
 *
 * The window runs outward from argmin on both sides, skipping the innermost
 * cells and stopping where |P+| first falls below the outer fraction. The
 * returned exponent is beta, the exponent of the R+ profile
 * R+ ~ a - b |x - x0|^beta, so b = c / beta.
 */
inline ProfileFit fit_profile(const Field& P_plus, const Field& R_plus, const Grid& grid,
                              const ProfileWindow& window = {})
{
    check_length(P_plus, grid);
    std::size_t const n = grid.size();
    std::size_t const i0 = argmin(P_plus);
    double const pmin = P_plus[i0];
    require(pmin < 0, ErrorCode::no_blowup_detected, "P+ has no negative minimum");
    double const cutoff = window.outer_fraction * std::fabs(pmin);

    ProfileFit fit;
    fit.x0 = grid.x(i0);
    fit.a_fit = R_plus[i0];

    std::vector<double> lx, ly;
    std::size_t reach_left = 0, reach_right = 0;
    for (int side : {-1, 1}) {
        for (std::size_t k = 1; k < n / 2; ++k) {
            long const j = (static_cast<long>(i0) + side * static_cast<long>(k) + static_cast<long>(n))
                           % static_cast<long>(n);
            double const p = P_plus[static_cast<std::size_t>(j)];
            if (!(p < 0) || std::fabs(p) < cutoff) {
                break;
            }
            if (k <= window.inner_cells) {
                continue;
            }
            double const d = static_cast<double>(k) * grid.dx();
            fit.distance.push_back(d);
            fit.magnitude.push_back(std::fabs(p));
            lx.push_back(std::log(d));
            ly.push_back(std::log(std::fabs(p)));
            (side < 0 ? reach_left : reach_right) = k;
        }
    }
    fit.points = lx.size();
    require(fit.points >= 8, ErrorCode::window_too_narrow,
            "only " + std::to_string(fit.points) + " points in the fit window");

    LineFit const lf = fit_line(lx, ly);
    fit.exponent = lf.slope + 1;
    fit.r_squared = lf.r_squared;
    double const c = std::exp(lf.intercept);
    fit.b_fit = c / fit.exponent;
    fit.window_lo = fit.x0 - static_cast<double>(reach_left) * grid.dx();
    fit.window_hi = fit.x0 + static_cast<double>(reach_right) * grid.dx();
    return fit;
}

inline ProfileFit fit_profile(const State& state, const Params& params, const Grid& grid,
                              const ProfileWindow& window = {})
{
    auto const inv = invariants(state, params, grid);
    ProfileFit f = fit_profile(inv.P_plus, inv.R_plus, grid, window);
    f.t_fit = state.time;
    return f;
}

// 8 / (3 |P0_min|): blow-up time of dP/dt = -(3/8) P^2.
inline double heuristic_blowup_time(double P0_min)
{
    require(P0_min < 0, ErrorCode::non_negative_input, "heuristic time needs P0_min < 0");
    return 8 / (3 * std::fabs(P0_min));
}

//---------------------------------------------------------------------------//
struct StretchSample {
    double xi0;
    double P0;
    double t;
    double measured;
    double predicted;
    double relative_deviation;
};

struct StretchReport {
    std::vector<StretchSample> samples;
    double max_relative_deviation = 0;
    // Deviation for the trace launched closest to the minimum.
    double center_relative_deviation = 0;
    // stretch(xi)/stretch(2 xi) measured and predicted, offsets taken from the minimum.
    std::vector<double> ratio_measured;
    std::vector<double> ratio_predicted;
};

// (1 + (3/8) t P0)^2
inline double predicted_stretch(double t, double P0)
{
    double const s = 1 + 0.375 * t * P0;
    return s * s;
}

/*!
 * Compare final stretch of each plus trace with the reduced Riccati law.
 *
 * P0 holds P+(xi0, 0) per trace. Traces must share their final time. For the
 * ratio test the bundle should contain offsets d and 2d from the launch at
 * center_index, listed in pairs (center + d, center + 2d).
 */
inline StretchReport stretch_profile_check(const std::vector<CharTrace>& bundle,
                                           const std::vector<double>& P0,
                                           std::size_t center_index,
                                           const std::vector<std::pair<std::size_t, std::size_t>>& pairs = {})
{
    require(!bundle.empty() && bundle.size() == P0.size(), ErrorCode::invalid_argument,
            "stretch check needs one P0 per trace");
    StretchReport rep;
    for (std::size_t k = 0; k < bundle.size(); ++k) {
        const CharTrace& tr = bundle[k];
        require(!tr.times.empty(), ErrorCode::no_blowup_detected, "empty trace");
        double const t = tr.times.back();
        double const meas = tr.stretch.back();
        double const pred = predicted_stretch(t, P0[k]);
        double const dev = std::fabs(meas - pred) / pred;
        rep.samples.push_back({tr.xi0, P0[k], t, meas, pred, dev});
        rep.max_relative_deviation = std::max(rep.max_relative_deviation, dev);
    }
    rep.center_relative_deviation = rep.samples.at(center_index).relative_deviation;
    for (auto const& [a, b] : pairs) {
        rep.ratio_measured.push_back(rep.samples.at(a).measured / rep.samples.at(b).measured);
        rep.ratio_predicted.push_back(rep.samples.at(a).predicted / rep.samples.at(b).predicted);
    }
    return rep;
}

} // namespace rsv
