#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "riemann.hpp"

namespace rsv {

//---------------------------------------------------------------------------//
// Energy thresholds.
inline double energy_threshold_floor(const Params& p)
{
    return p.g * std::sqrt(p.epsilon) * p.h_star * p.h_star * p.h_star / 3;
}

inline double energy_threshold_blowup(const Params& p)
{
    return p.g * std::sqrt(p.epsilon) * p.h_star * p.h_star * p.h_star / 6;
}

// (g sqrt(eps) / 3) (h - h_star)^2 (2h + h_star)
inline double depth_cubic(double h, const Params& p)
{
    double const d = h - p.h_star;
    return p.g * std::sqrt(p.epsilon) / 3 * d * d * (2 * h + p.h_star);
}

struct DepthBounds {
    double floor;
    double ceiling;
};

// Root of depth_cubic(h) = E_star on (0, h_star], by bisection.
inline DepthBounds depth_floor(double E_star, const Params& p)
{
    require(E_star >= 0, ErrorCode::invalid_argument, "negative energy");
    require(p.epsilon > 0, ErrorCode::invalid_argument, "depth floor needs epsilon > 0");
    require(E_star < energy_threshold_floor(p), ErrorCode::above_threshold,
            "energy " + std::to_string(E_star) + " at or above the depth threshold");
    if (E_star == 0) {
        return {p.h_star, p.h_star};
    }
    double lo = 0;         // cubic(lo) > E
    double hi = p.h_star;  // cubic(hi) = 0 <= E
    for (int it = 0; it < 200 && hi - lo > 1e-15 * p.h_star; ++it) {
        double const mid = 0.5 * (lo + hi);
        if (depth_cubic(mid, p) > E_star) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    double const h = 0.5 * (lo + hi);
    return {h, 2 * p.h_star - h};
}

//---------------------------------------------------------------------------//
struct ConstantsLedger {
    double C1, C2, C3, C4;
    double kappa0;
    double T_star, T_star_star;
    double E_threshold_prop21;
    double E_threshold_step0;
};

inline ConstantsLedger constants_ledger(const Params& p)
{
    require(p.epsilon > 0, ErrorCode::invalid_argument, "constants need epsilon > 0");
    double const se = std::sqrt(p.epsilon);
    double const c0 = std::sqrt(p.g * p.h_star);
    double const c2 = std::sqrt(2 * p.g * p.h_star);

    ConstantsLedger L{};
    L.C1 = 6 * p.g / se;
    L.C2 = 72 * L.C1 / (se * p.h_star);
    L.C3 = 16 * L.C1 / c2;
    double const K = 3 * L.C3 * L.C3 + L.C2;
    L.C4 = std::sqrt(2 * K);

    double const margin = 1 - 1e-9;
    double const t1 = 1 / (6 * L.C3);
    double const t2 = 1 / (10 * (L.C3 * L.C3 * L.C3 + L.C2 * L.C2));
    double const t3 = L.C3 * c2 / (16 * (6 * L.C3 * L.C1 + c0));
    L.T_star_star = std::min({t1, t2, t3}) * margin;
    L.T_star = std::min(L.T_star_star, L.C3 / (16 * K) * margin);
    L.kappa0 = -std::max(std::sqrt(8 * K), 8 / L.T_star) * (1 + 1e-9);
    L.E_threshold_prop21 = energy_threshold_floor(p);
    L.E_threshold_step0 = energy_threshold_blowup(p);
    return L;
}

struct InequalityCheck {
    std::string name;
    double lhs;
    double rhs;
    bool strict;
    bool holds;
};

// The printed conditions on T_star, T_star_star and kappa0, by direct substitution.
inline std::vector<InequalityCheck> ledger_inequalities(const ConstantsLedger& L, const Params& p)
{
    double const K = 3 * L.C3 * L.C3 + L.C2;
    double const c0 = std::sqrt(p.g * p.h_star);
    double const c2 = std::sqrt(2 * p.g * p.h_star);
    auto lt = [](std::string name, double a, double b) {
        return InequalityCheck{std::move(name), a, b, true, a < b};
    };
    auto le = [](std::string name, double a, double b) {
        return InequalityCheck{std::move(name), a, b, false, a <= b};
    };
    return {
        le("T_star <= T_star_star", L.T_star, L.T_star_star),
        lt("2 T_star (3 C3^2 + C2) < C3 / 8", 2 * L.T_star * K, L.C3 / 8),
        lt("3 C3 T_star_star < 1/2", 3 * L.C3 * L.T_star_star, 0.5),
        lt("5 (C3^3 + C2^2) T_star_star < 1/2",
           5 * (L.C3 * L.C3 * L.C3 + L.C2 * L.C2) * L.T_star_star, 0.5),
        le("(6 C3 C1 + sqrt(g h*)) T_star_star / sqrt(2 g h*) <= C3 / 16",
           (6 * L.C3 * L.C1 + c0) * L.T_star_star / c2, L.C3 / 16),
        lt("3 C3^2 + C2 < kappa0^2 / 8", K, L.kappa0 * L.kappa0 / 8),
        lt("kappa0 < -8 / T_star", L.kappa0, -8 / L.T_star),
    };
}

//---------------------------------------------------------------------------//
// exp(-1/(1-s^2)) on |s| < 1.
inline double bump(double s)
{
    return std::fabs(s) < 1 ? std::exp(-1 / (1 - s * s)) : 0.0;
}

inline double bump_derivative(double s)
{
    if (std::fabs(s) >= 1) {
        return 0;
    }
    double const d = 1 - s * s;
    return bump(s) * (-2 * s / (d * d));
}

// Scaled state from physical depth and velocity profiles.
template<class DepthFn, class VelocityFn>
State state_from_physical(const Grid& grid, const Params& p, DepthFn&& h_of_x,
                          VelocityFn&& U_of_x)
{
    State s{Field(grid.size()), Field(grid.size()), 0.0};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double const x = grid.x(i);
        s.eta[i] = (h_of_x(x) - p.h_star) / p.alpha;
        s.u[i] = U_of_x(x) / p.alpha;
    }
    return s;
}

// Right-moving simple wave: h = h* + delta^2 bump((x - L/2)/delta^3), R- = -2 sqrt(g h*).
inline State generate_blowup_data(double delta, const Params& p, const Grid& grid)
{
    require(delta > 0, ErrorCode::invalid_argument, "delta must be positive");
    double const a = delta * delta;
    double const w = delta * delta * delta;
    require(2 * w <= grid.length() / 4, ErrorCode::support_too_wide,
            "support 2*delta^3 = " + std::to_string(2 * w) + " exceeds L/4");
    double const xc = 0.5 * grid.length();
    double const c_far = std::sqrt(p.g * p.h_star);
    auto h = [&](double x) { return p.h_star + a * bump((x - xc) / w); };
    return state_from_physical(grid, p, h,
                               [&](double x) { return 2 * (std::sqrt(p.g * h(x)) - c_far); });
}

// Energy of the simple-wave family, by midpoint quadrature in the bump variable.
inline double simple_wave_energy(double delta, const Params& p)
{
    double const a = delta * delta;
    double const w = delta * delta * delta;
    double const c_far = std::sqrt(p.g * p.h_star);
    int const m = 20000;
    double const ds = 2.0 / m;
    double sum = 0;
    for (int k = 0; k < m; ++k) {
        double const s = -1 + (k + 0.5) * ds;
        double const h = p.h_star + a * bump(s);
        double const hx = a / w * bump_derivative(s);
        double const U = 2 * (std::sqrt(p.g * h) - c_far);
        double const Ux = std::sqrt(p.g / h) * hx;
        sum += h * U * U + p.g * (h - p.h_star) * (h - p.h_star)
               + p.epsilon * (h * h * h * Ux * Ux + p.g * h * h * hx * hx);
    }
    return 0.5 * sum * ds * w;
}

// Largest delta whose simple wave stays within the blow-up energy threshold.
inline double simple_wave_delta_max(const Params& p)
{
    double const target = energy_threshold_blowup(p);
    double lo = 0;
    double hi = 0.05;
    while (simple_wave_energy(hi, p) < target && hi < 10) {
        lo = hi;
        hi *= 1.5;
    }
    for (int it = 0; it < 100; ++it) {
        double const mid = 0.5 * (lo + hi);
        (simple_wave_energy(mid, p) < target ? lo : hi) = mid;
    }
    return lo;
}

struct TwoBumpSpec {
    double depth_amplitude = 0.1;
    double depth_width = 0.1;
    double depth_center = 0.5;
    double velocity_amplitude = 0.1;
    double velocity_width = 0.1;
    double velocity_center = 0.5;
};

// Independent bumps in depth and physical velocity; centers in units of L.
inline State generate_two_bump(const TwoBumpSpec& b, const Params& p, const Grid& grid)
{
    double const L = grid.length();
    return state_from_physical(
        grid, p,
        [&](double x) {
            return p.h_star
                   + b.depth_amplitude * bump((x - b.depth_center * L) / (b.depth_width * L));
        },
        [&](double x) {
            return b.velocity_amplitude
                   * bump((x - b.velocity_center * L) / (b.velocity_width * L));
        });
}

//---------------------------------------------------------------------------//
enum class BlowupMode { P_plus_blowup, depth_vanishing, horizon_reached, unconfirmed_blowup };

inline std::string to_string(BlowupMode m)
{
    switch (m) {
    case BlowupMode::P_plus_blowup: return "P_plus_blowup";
    case BlowupMode::depth_vanishing: return "depth_vanishing";
    case BlowupMode::horizon_reached: return "horizon_reached";
    case BlowupMode::unconfirmed_blowup: return "unconfirmed_blowup";
    }
    return "unknown";
}

struct BlowupVerdict {
    bool detected = false;
    double t_detect = 0;
    double t_blowup_extrapolated = 0;
    BlowupMode mode = BlowupMode::horizon_reached;
    // Rate at which 1/|min P+| decreases; 3/8 for the reduced Riccati law.
    double slope_fit = 0;
    double r_squared = 0;
    double fit_t_lo = 0;
    double fit_t_hi = 0;
    std::size_t fit_samples = 0;
    double threshold = 0;
    // False for depth_vanishing below the energy threshold, which Prop.-2.1-type
    // bounds rule out analytically.
    bool valid = true;
};

struct DetectorConfig {
    // Detection when min P+ < -threshold.
    double threshold = 1e3;
    double fit_fraction = 0.25;
    double r_squared_min = 0.99;
    double depth_margin = 0.05;
};

struct LineFit {
    double slope = 0;
    double intercept = 0;
    double r_squared = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                        std::size_t begin = 0, std::size_t end = std::size_t(-1))
{
    end = std::min(end, x.size());
    double const m = static_cast<double>(end - begin);
    double sx = 0, sy = 0;
    for (std::size_t k = begin; k < end; ++k) {
        sx += x[k];
        sy += y[k];
    }
    double const mx = sx / m;
    double const my = sy / m;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t k = begin; k < end; ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    LineFit f;
    f.slope = sxx > 0 ? sxy / sxx : 0;
    f.intercept = my - f.slope * mx;
    f.r_squared = (sxx > 0 && syy > 0) ? sxy * sxy / (sxx * syy) : (syy == 0 ? 1.0 : 0.0);
    return f;
}

/*!
 * Watches min P+ and min h once per accepted step.
 *
 * The Riccati fit uses 1/min P+ over the last quarter of the samples taken
 * up to the threshold crossing.
 */
class BlowupDetector {
  public:
    BlowupDetector(DetectorConfig config, double E_star0, const Params& params)
        : config_(config)
    {
        if (!params.classical_branch && E_star0 < energy_threshold_floor(params)) {
            floor_ = depth_floor(E_star0, params).floor;
        }
    }

    // Returns true once a stopping condition is met.
    bool observe(double t, double min_P_plus, double min_h)
    {
        if (stopped()) {
            return true;
        }
        times_.push_back(t);
        min_P_.push_back(min_P_plus);
        if (floor_ && min_h < *floor_ * (1 - config_.depth_margin)) {
            depth_hit_ = true;
            t_stop_ = t;
        } else if (min_P_plus < -config_.threshold) {
            crossed_ = true;
            t_stop_ = t;
        }
        return stopped();
    }

    void depth_failure(double t)
    {
        depth_hit_ = true;
        t_stop_ = t;
    }

    bool stopped() const { return crossed_ || depth_hit_; }
    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& min_P_plus() const { return min_P_; }
    std::optional<double> floor() const { return floor_; }
    const DetectorConfig& config() const { return config_; }

    void restore(std::vector<double> times, std::vector<double> min_P, bool crossed,
                 bool depth_hit, double t_stop)
    {
        times_ = std::move(times);
        min_P_ = std::move(min_P);
        crossed_ = crossed;
        depth_hit_ = depth_hit;
        t_stop_ = t_stop;
    }
    bool crossed() const { return crossed_; }
    bool depth_hit() const { return depth_hit_; }
    double t_stop() const { return t_stop_; }

    BlowupVerdict verdict() const
    {
        BlowupVerdict v;
        v.threshold = config_.threshold;
        if (depth_hit_) {
            v.detected = true;
            v.mode = BlowupMode::depth_vanishing;
            v.t_detect = t_stop_;
            v.valid = !floor_.has_value();
            return v;
        }
        if (!crossed_) {
            return v;
        }
        v.t_detect = t_stop_;
        std::size_t const m = times_.size();
        auto const count = std::max<std::size_t>(
            3, static_cast<std::size_t>(std::floor(config_.fit_fraction * static_cast<double>(m))));
        std::size_t const begin = m > count ? m - count : 0;
        std::vector<double> inv(m);
        for (std::size_t k = 0; k < m; ++k) {
            inv[k] = 1 / min_P_[k];
        }
        LineFit const f = fit_line(times_, inv, begin, m);
        v.slope_fit = f.slope;
        v.r_squared = f.r_squared;
        v.fit_t_lo = times_[begin];
        v.fit_t_hi = times_[m - 1];
        v.fit_samples = m - begin;
        v.t_blowup_extrapolated = f.slope > 0 ? -f.intercept / f.slope : t_stop_;
        bool const ok = f.r_squared >= config_.r_squared_min && f.slope > 0;
        v.detected = ok;
        v.mode = ok ? BlowupMode::P_plus_blowup : BlowupMode::unconfirmed_blowup;
        return v;
    }

  private:
    DetectorConfig config_;
    std::optional<double> floor_;
    std::vector<double> times_;
    std::vector<double> min_P_;
    bool crossed_ = false;
    bool depth_hit_ = false;
    double t_stop_ = 0;
};

// Verdict for a recorded (t, min P+, min h) series.
inline BlowupVerdict detect_blowup(const std::vector<double>& t, const std::vector<double>& min_P,
                                   const std::vector<double>& min_h, double E_star0,
                                   const Params& params, const DetectorConfig& config = {})
{
    BlowupDetector det(config, E_star0, params);
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (det.observe(t[k], min_P[k], min_h[k])) {
            break;
        }
    }
    return det.verdict();
}

//---------------------------------------------------------------------------//
struct HypothesisCheck {
    std::string name;
    double value;
    double bound;
    bool pass;
    // bound - value for upper bounds, value - bound for the kappa0 condition
    // (positive margin means pass).
    double margin;
};

struct CertificationReport {
    std::vector<HypothesisCheck> items;
    bool certified = false;
    ConstantsLedger ledger{};
};

inline CertificationReport certify_hypotheses(const State& state0, const Params& params,
                                              const Grid& grid,
                                              std::optional<ConstantsLedger> ledger_override = {})
{
    CertificationReport rep;
    rep.ledger = ledger_override ? *ledger_override : constants_ledger(params);
    double const E = params.alpha * params.alpha * scaled_energy(state0, params, grid);
    auto const inv = invariants(state0, params, grid);
    double const M0 = max_value(inv.P_plus) + max_abs(inv.P_minus);
    double const inf_P = min_value(inv.P_plus);

    double const Ebound = rep.ledger.E_threshold_step0;
    double const Mbound = rep.ledger.C3 / 4;
    rep.items.push_back({"energy", E, Ebound, E <= Ebound, Ebound - E});
    rep.items.push_back({"M0", M0, Mbound, M0 <= Mbound, Mbound - M0});
    rep.items.push_back(
        {"inf_P_plus", inf_P, rep.ledger.kappa0, inf_P < rep.ledger.kappa0, rep.ledger.kappa0 - inf_P});
    rep.certified = std::all_of(rep.items.begin(), rep.items.end(),
                                [](const HypothesisCheck& c) { return c.pass; });
    return rep;
}

} // namespace rsv
