#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "elliptic.hpp"

namespace rsv {

// Riemann invariants and characteristic speeds in physical velocity alpha*u.
// Derivatives are central differences of R and lambda, so the linear
// relations lambda = (3R+ + R-)/4 etc. carry over exactly to the gradients.
struct InvariantFields {
    Field R_plus, R_minus;
    Field lambda_plus, lambda_minus;
    Field P_plus, P_minus;
    Field lambda_plus_x, lambda_minus_x;
};

inline InvariantFields invariants(const State& state, const Params& params, const Grid& grid)
{
    check_length(state.eta, grid);
    check_length(state.u, grid);
    std::size_t const n = grid.size();
    InvariantFields f{Field(n), Field(n), Field(n), Field(n), {}, {}, {}, {}};
    for (std::size_t i = 0; i < n; ++i) {
        double const h = params.h_star + params.alpha * state.eta[i];
        require(h > 0, ErrorCode::non_positive_depth, "invariants on non-positive depth");
        double const U = params.alpha * state.u[i];
        double const c = std::sqrt(params.g * h);
        f.R_plus[i] = U + 2 * c;
        f.R_minus[i] = U - 2 * c;
        f.lambda_plus[i] = U + c;
        f.lambda_minus[i] = U - c;
    }
    f.P_plus = derivative(f.R_plus, grid);
    f.P_minus = derivative(f.R_minus, grid);
    f.lambda_plus_x = derivative(f.lambda_plus, grid);
    f.lambda_minus_x = derivative(f.lambda_minus, grid);
    return f;
}

inline Field speed_gradient_product(const InvariantFields& inv)
{
    Field prod(inv.lambda_plus_x.size());
    for (std::size_t i = 0; i < prod.size(); ++i) {
        prod[i] = inv.lambda_plus_x[i] * inv.lambda_minus_x[i];
    }
    return prod;
}

// Q for a state whose invariants are already known. On the classical branch
// this is the eps -> 0 limit 2 lambda+_x lambda-_x, so riccati_rhs below
// reduces to the classical law.
inline Field riccati_Q(const State& state, const InvariantFields& inv, const Params& params,
                       const Grid& grid)
{
    Field prod = speed_gradient_product(inv);
    if (params.classical_branch) {
        for (std::size_t i = 0; i < prod.size(); ++i) {
            prod[i] *= 2;
        }
        return prod;
    }
    return riccati_Q(depth(state, params), prod, params.epsilon, grid);
}

//---------------------------------------------------------------------------//
// A time-ordered sequence of states, visited in one forward pass.
class StateSequence {
  public:
    virtual ~StateSequence() = default;
    virtual const Grid& grid() const = 0;
    virtual const Params& params() const = 0;
    // Stops early when visit returns false.
    virtual void for_each(const std::function<bool(const State&)>& visit) const = 0;
};

class StoredRun final : public StateSequence {
  public:
    StoredRun(Grid grid, Params params, std::vector<State> states)
        : grid_(grid), params_(params), states_(std::move(states))
    {
    }

    const Grid& grid() const override { return grid_; }
    const Params& params() const override { return params_; }
    const std::vector<State>& states() const { return states_; }

    void for_each(const std::function<bool(const State&)>& visit) const override
    {
        for (const State& s : states_) {
            if (!visit(s)) {
                return;
            }
        }
    }

  private:
    Grid grid_;
    Params params_;
    std::vector<State> states_;
};

//---------------------------------------------------------------------------//
enum class Family { plus, minus };

struct CharTrace {
    Family family = Family::plus;
    double xi0 = 0;
    std::vector<double> times;
    // Unwrapped positions.
    std::vector<double> positions;
    std::vector<double> P_along;
    std::vector<double> stretch;
    std::vector<double> Q_along;
    // Gradient of the other family and of this family's speed, for the
    // Riccati and concentration right-hand sides.
    std::vector<double> P_other_along;
    std::vector<double> lambda_x_along;
};

struct TraceOptions {
    // Periodic runs may carry a trace around the domain several times.
    bool allow_wrap = false;
    double t_end = std::numeric_limits<double>::infinity();
};

namespace detail {

struct TraceFrame {
    double t;
    Field lambda;
    Field lambda_x;
    Field P;
    Field P_other;
    Field Q;
};

inline TraceFrame make_frame(const State& s, Family fam, const Params& params, const Grid& grid)
{
    InvariantFields inv = invariants(s, params, grid);
    Field Q = riccati_Q(s, inv, params, grid);
    if (fam == Family::plus) {
        return {s.time, std::move(inv.lambda_plus), std::move(inv.lambda_plus_x),
                std::move(inv.P_plus), std::move(inv.P_minus), std::move(Q)};
    }
    return {s.time, std::move(inv.lambda_minus), std::move(inv.lambda_minus_x),
            std::move(inv.P_minus), std::move(inv.P_plus), std::move(Q)};
}

inline void record(CharTrace& tr, const TraceFrame& fr, double x, double log_stretch,
                   const Grid& grid)
{
    tr.times.push_back(fr.t);
    tr.positions.push_back(x);
    tr.stretch.push_back(std::exp(log_stretch));
    tr.P_along.push_back(sample(fr.P, x, grid));
    tr.Q_along.push_back(sample(fr.Q, x, grid));
    tr.P_other_along.push_back(sample(fr.P_other, x, grid));
    tr.lambda_x_along.push_back(sample(fr.lambda_x, x, grid));
}

} // namespace detail

/*!
 * Integrate dX/dt = lambda(X, t) and d(log stretch)/dt = lambda_x(X, t) for
 * several launch points in one pass over the run. Fields are sampled with
 * cubic interpolation in x and linearly in t between consecutive states;
 * each interval is one RK4 step.
 */
inline std::vector<CharTrace> trace_bundle(const StateSequence& run, Family family,
                                           const std::vector<double>& xi0s,
                                           const TraceOptions& options = {})
{
    const Grid& grid = run.grid();
    const Params& params = run.params();
    std::vector<CharTrace> traces(xi0s.size());
    std::vector<double> X(xi0s);
    std::vector<double> logs(xi0s.size(), 0.0);
    for (std::size_t k = 0; k < xi0s.size(); ++k) {
        traces[k].family = family;
        traces[k].xi0 = xi0s[k];
    }

    bool have_prev = false;
    detail::TraceFrame prev;
    run.for_each([&](const State& s) {
        if (s.time > options.t_end) {
            return false;
        }
        detail::TraceFrame cur = detail::make_frame(s, family, params, grid);
        if (have_prev) {
            double const dt = cur.t - prev.t;
            auto rate = [&](double x, double theta, double& dx, double& dlog) {
                dx = (1 - theta) * sample(prev.lambda, x, grid)
                     + theta * sample(cur.lambda, x, grid);
                dlog = (1 - theta) * sample(prev.lambda_x, x, grid)
                       + theta * sample(cur.lambda_x, x, grid);
            };
            for (std::size_t k = 0; k < X.size(); ++k) {
                double a1, b1, a2, b2, a3, b3, a4, b4;
                rate(X[k], 0.0, a1, b1);
                rate(X[k] + 0.5 * dt * a1, 0.5, a2, b2);
                rate(X[k] + 0.5 * dt * a2, 0.5, a3, b3);
                rate(X[k] + dt * a3, 1.0, a4, b4);
                X[k] += dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4);
                logs[k] += dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4);
                if (!options.allow_wrap && std::fabs(X[k] - xi0s[k]) > 0.5 * grid.length()) {
                    throw Error(ErrorCode::trace_left_domain,
                                "trace from " + std::to_string(xi0s[k])
                                    + " moved more than half a period");
                }
            }
        }
        for (std::size_t k = 0; k < X.size(); ++k) {
            detail::record(traces[k], cur, X[k], logs[k], grid);
        }
        prev = std::move(cur);
        have_prev = true;
        return true;
    });
    return traces;
}

inline CharTrace trace_characteristic(const StateSequence& run, Family family, double xi0,
                                      const TraceOptions& options = {})
{
    return trace_bundle(run, family, {xi0}, options).front();
}

//---------------------------------------------------------------------------//
// Right side of the Riccati equation for the traced family.
inline double riccati_rhs(Family family, double P, double P_other, double Q)
{
    if (family == Family::plus) {
        return -0.375 * P * P + P * P_other + 0.375 * P_other * P_other - Q;
    }
    return 0.375 * P_other * P_other + P_other * P - 0.375 * P * P - Q;
}

// |dP/dt - rhs| per sample, with central differences in time over +-stride
// samples (one-sided at the ends). A stride of several steps keeps the
// interpolation noise in P_along out of the difference quotient.
inline std::vector<double> riccati_residual(const CharTrace& tr, std::size_t stride = 1)
{
    require(stride >= 1, ErrorCode::invalid_argument, "stride must be >= 1");
    std::size_t const m = tr.times.size();
    std::vector<double> res(m, 0.0);
    if (m < 2) {
        return res;
    }
    for (std::size_t k = 0; k < m; ++k) {
        std::size_t const lo = k < stride ? 0 : k - stride;
        std::size_t const hi = std::min(m - 1, k + stride);
        double const dPdt = (tr.P_along[hi] - tr.P_along[lo]) / (tr.times[hi] - tr.times[lo]);
        res[k] = std::fabs(dPdt - riccati_rhs(tr.family, tr.P_along[k], tr.P_other_along[k],
                                              tr.Q_along[k]));
    }
    return res;
}

inline std::vector<double> riccati_rhs_along(const CharTrace& tr)
{
    std::vector<double> r(tr.times.size());
    for (std::size_t k = 0; k < r.size(); ++k) {
        r[k] = riccati_rhs(tr.family, tr.P_along[k], tr.P_other_along[k], tr.Q_along[k]);
    }
    return r;
}

// stretch * P^2 along a plus trace.
inline std::vector<double> concentration_invariant(const CharTrace& tr)
{
    std::vector<double> c(tr.times.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
        c[k] = tr.stretch[k] * tr.P_along[k] * tr.P_along[k];
    }
    return c;
}

// stretch * P (3 P_other lambda_x - 2 Q): the time derivative of the invariant.
inline std::vector<double> concentration_source(const CharTrace& tr)
{
    std::vector<double> c(tr.times.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
        c[k] = tr.stretch[k] * tr.P_along[k]
               * (3 * tr.P_other_along[k] * tr.lambda_x_along[k] - 2 * tr.Q_along[k]);
    }
    return c;
}

//---------------------------------------------------------------------------//
// Running supremum of (max P+)^+ plus running supremum of max |P-|.
class SupTracker {
  public:
    double update(const InvariantFields& inv)
    {
        sup_plus_ = std::max(sup_plus_, std::max(0.0, max_value(inv.P_plus)));
        sup_minus_ = std::max(sup_minus_, max_abs(inv.P_minus));
        return value();
    }

    double value() const { return sup_plus_ + sup_minus_; }
    double sup_plus() const { return sup_plus_; }
    double sup_minus() const { return sup_minus_; }

    void restore(double sup_plus, double sup_minus)
    {
        sup_plus_ = sup_plus;
        sup_minus_ = sup_minus;
    }

  private:
    double sup_plus_ = 0;
    double sup_minus_ = 0;
};

inline std::vector<double> sup_tracker(const StateSequence& run)
{
    SupTracker tracker;
    std::vector<double> M;
    run.for_each([&](const State& s) {
        M.push_back(tracker.update(invariants(s, run.params(), run.grid())));
        return true;
    });
    return M;
}

} // namespace rsv
