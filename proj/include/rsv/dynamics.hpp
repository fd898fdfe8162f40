#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "elliptic.hpp"

namespace rsv {

class NonPositiveDepthError : public Error {
  public:
    NonPositiveDepthError(State stage, double min_h)
        : Error(ErrorCode::non_positive_depth,
                "min h = " + std::to_string(min_h) + " at t = " + std::to_string(stage.time)),
          stage_(std::move(stage)), min_h_(min_h)
    {
    }

    const State& stage_state() const { return stage_; }
    double min_h() const { return min_h_; }

  private:
    State stage_;
    double min_h_;
};

// Discretization of the velocity equation. Both share the mass equation
// d_eta = -D(h u).
enum class Scheme {
    // Momentum form m = I_h u with a discrete Hamiltonian structure; conserves
    // the face-quadrature energy exactly in semi-discrete form.
    conservative,
    // Literal d_u = -g eta_x - alpha u u_x - f(W).
    direct,
};

// Source terms added to the evolution: d_eta gains `mass`, and the momentum
// balance I_h(u_t + g eta_x + alpha u u_x) + eps alpha psi_x gains `momentum`.
// Either may be left empty.
struct ForcingTerms {
    Field mass;
    Field momentum;
};

using Forcing = std::function<ForcingTerms(double)>;

struct RhsOptions {
    Scheme scheme = Scheme::conservative;
    Forcing forcing;
};

struct RhsEval {
    Field d_eta;
    Field d_u;
};

inline Field checked_depth(const State& state, const Params& params)
{
    Field h = depth(state, params);
    double const hmin = min_value(h);
    if (!(hmin > 0)) {
        throw NonPositiveDepthError(state, hmin);
    }
    return h;
}

namespace detail {

inline Field mass_tendency(const Field& h, const Field& u, const Grid& grid)
{
    std::size_t const n = grid.size();
    double const c = 0.5 / grid.dx();
    Field d(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t const ip = i + 1 == n ? 0 : i + 1;
        std::size_t const im = i == 0 ? n - 1 : i - 1;
        d[i] = -c * (h[ip] * u[ip] - h[im] * u[im]);
    }
    return d;
}

inline Field local_tendency(const State& state, const Params& params, const Grid& grid)
{
    std::size_t const n = grid.size();
    double const c = 0.5 / grid.dx();
    const Field& u = state.u;
    const Field& eta = state.eta;
    Field d(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t const ip = i + 1 == n ? 0 : i + 1;
        std::size_t const im = i == 0 ? n - 1 : i - 1;
        d[i] = -c * (params.g * (eta[ip] - eta[im]) + params.alpha * u[i] * (u[ip] - u[im]));
    }
    return d;
}

// Per-thread buffers for the conservative right side.
struct RhsScratch {
    std::vector<double> hf, B, du, de, etf, off, diag, m, phi, mu, adot, cp, z;

    void resize(std::size_t n)
    {
        for (auto* v : {&hf, &B, &du, &de, &etf, &off, &diag, &m, &phi, &mu, &adot, &cp, &z}) {
            v->resize(n);
        }
    }
};

inline RhsScratch& rhs_scratch()
{
    thread_local RhsScratch s;
    return s;
}

/*!
 * Velocity tendency of the conservative scheme.
 *
 * Solves A(h) u_t = alpha (-D(m u) - m D u - A'[eta_t] u) - h D(Phi/alpha) + S
 * with m = A(h) u. Assembly, the cyclic tridiagonal factorization and the
 * Sherman-Morrison correction are fused into a few sweeps.
 */
inline Field conservative_velocity(const State& state, const Field& h, const Field& d_eta,
                                   const Params& params, const Grid& grid,
                                   const Field* forcing)
{
    std::size_t const n = grid.size();
    double const inv_dx = 1.0 / grid.dx();
    double const half_inv_dx = 0.5 * inv_dx;
    double const a = params.alpha;
    double const eps = params.epsilon;
    double const g = params.g;
    double const c = eps * inv_dx * inv_dx;
    const Field& u = state.u;
    const Field& eta = state.eta;

    RhsScratch& w = rhs_scratch();
    w.resize(n);
    double* hf = w.hf.data();
    double* B = w.B.data();
    double* du = w.du.data();
    double* de = w.de.data();
    double* etf = w.etf.data();
    double* off = w.off.data();
    double* diag = w.diag.data();
    double* m = w.m.data();
    double* phi = w.phi.data();
    double* mu = w.mu.data();
    double* adot = w.adot.data();

    for (std::size_t i = 0; i < n; ++i) {
        std::size_t const ip = i + 1 == n ? 0 : i + 1;
        hf[i] = 0.5 * (h[i] + h[ip]);
        B[i] = hf[i] * hf[i];
        du[i] = (u[ip] - u[i]) * inv_dx;
        de[i] = (eta[ip] - eta[i]) * inv_dx;
        etf[i] = 0.5 * (d_eta[i] + d_eta[ip]);
        off[i] = -c * B[i] * hf[i];
    }

    // Phi / alpha, the scaled variational derivative of the energy in h.
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t const kp = k + 1 == n ? 0 : k + 1;
        std::size_t const km = k == 0 ? n - 1 : k - 1;
        diag[k] = h[k] - off[k] - off[km];
        m[k] = diag[k] * u[k] + off[k] * u[kp] + off[km] * u[km];
        double const kin = 0.5 * u[k] * u[k]
                           + 0.75 * eps * (B[k] * du[k] * du[k] + B[km] * du[km] * du[km]);
        double const pot = g * eta[k]
                           + a * 0.5 * eps * g * (hf[k] * de[k] * de[k] + hf[km] * de[km] * de[km])
                           + eps * g * (B[km] * de[km] - B[k] * de[k]) * inv_dx;
        phi[k] = pot - a * kin;
        mu[k] = m[k] * u[k];
        adot[k] = d_eta[k] * u[k]
                  - 3 * eps * inv_dx * (B[k] * etf[k] * du[k] - B[km] * etf[km] * du[km]);
    }

    Field y(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t const kp = k + 1 == n ? 0 : k + 1;
        std::size_t const km = k == 0 ? n - 1 : k - 1;
        y[k] = a * (-half_inv_dx * (mu[kp] - mu[km]) - m[k] * half_inv_dx * (u[kp] - u[km])
                    - adot[k])
               - h[k] * half_inv_dx * (phi[kp] - phi[km]);
    }
    if (forcing) {
        for (std::size_t k = 0; k < n; ++k) {
            y[k] += (*forcing)[k];
        }
    }

    // Cyclic solve as in EllipticOperator: T + w v^T with gamma = -diag[0].
    double* cp = w.cp.data();
    double* z = w.z.data();
    double const gamma = -diag[0];
    double const corner = off[n - 1];
    bool ok = true;
    double pivot = diag[0] - gamma;
    ok = ok && pivot > 0;
    y[0] /= pivot;
    z[0] = gamma / pivot;
    cp[0] = off[0] / pivot;
    for (std::size_t i = 1; i < n; ++i) {
        double b = diag[i];
        if (i + 1 == n) {
            b -= corner * corner / gamma;
        }
        pivot = b - off[i - 1] * cp[i - 1];
        ok = ok && pivot > 0;
        double const ip = 1.0 / pivot;
        y[i] = (y[i] - off[i - 1] * y[i - 1]) * ip;
        z[i] = ((i + 1 == n ? corner : 0.0) - off[i - 1] * z[i - 1]) * ip;
        cp[i] = i + 1 < n ? off[i] * ip : 0.0;
    }
    require(ok && std::isfinite(pivot), ErrorCode::singular_factorization,
            "non-positive pivot in cyclic tridiagonal factorization");
    for (std::size_t i = n - 1; i-- > 0;) {
        y[i] -= cp[i] * y[i + 1];
        z[i] -= cp[i] * z[i + 1];
    }
    double const v_last = corner / gamma;
    double const scale = (y[0] + v_last * y[n - 1]) / (1.0 + z[0] + v_last * z[n - 1]);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] -= scale * z[i];
    }
    return y;
}

} // namespace detail

//---------------------------------------------------------------------------//
inline RhsEval rhs(const State& state, const Params& params, const Grid& grid,
                   const RhsOptions& options = {})
{
    check_length(state.eta, grid);
    check_length(state.u, grid);
    Field const h = checked_depth(state, params);

    RhsEval out;
    out.d_eta = detail::mass_tendency(h, state.u, grid);

    ForcingTerms src;
    if (options.forcing) {
        src = options.forcing(state.time);
        if (src.mass.size() > 0) {
            check_length(src.mass, grid);
        }
        if (src.momentum.size() > 0) {
            check_length(src.momentum, grid);
        }
    }
    Field const* fp = src.momentum.size() > 0 ? &src.momentum : nullptr;

    if (params.classical_branch) {
        out.d_u = detail::local_tendency(state, params, grid);
        if (fp) {
            for (std::size_t i = 0; i < h.size(); ++i) {
                out.d_u[i] += (*fp)[i] / h[i];
            }
        }
    } else if (options.scheme == Scheme::conservative) {
        // The momentum form assumes eta_t = -D(h u); a mass source enters only d_eta.
        out.d_u = detail::conservative_velocity(state, h, out.d_eta, params, grid, fp);
    } else {
        auto const op = assemble(h, params.epsilon, grid);
        Field rhs_m = derivative(nonlocal_flux(state, params, grid), grid);
        double const scale = params.epsilon * params.alpha;
        for (std::size_t i = 0; i < rhs_m.size(); ++i) {
            rhs_m[i] = -scale * rhs_m[i] + (fp ? (*fp)[i] : 0.0);
        }
        Field const nonlocal = op.solve(rhs_m);
        out.d_u = detail::local_tendency(state, params, grid);
        for (std::size_t i = 0; i < h.size(); ++i) {
            out.d_u[i] += nonlocal[i];
        }
    }

    if (src.mass.size() > 0) {
        for (std::size_t i = 0; i < h.size(); ++i) {
            out.d_eta[i] += src.mass[i];
        }
    }
    return out;
}

//---------------------------------------------------------------------------//
// Classical four-stage Runge-Kutta.
inline State step(const State& state, double dt, const Params& params, const Grid& grid,
                  const RhsOptions& options = {})
{
    std::size_t const n = grid.size();
    auto stage = [&](const RhsEval& k, double c) {
        State s{Field(n), Field(n), state.time + c * dt};
        for (std::size_t i = 0; i < n; ++i) {
            s.eta[i] = state.eta[i] + c * dt * k.d_eta[i];
            s.u[i] = state.u[i] + c * dt * k.d_u[i];
        }
        return s;
    };
    RhsEval const k1 = rhs(state, params, grid, options);
    RhsEval const k2 = rhs(stage(k1, 0.5), params, grid, options);
    RhsEval const k3 = rhs(stage(k2, 0.5), params, grid, options);
    RhsEval const k4 = rhs(stage(k3, 1.0), params, grid, options);

    State next{Field(n), Field(n), state.time + dt};
    double const w = dt / 6;
    for (std::size_t i = 0; i < n; ++i) {
        next.eta[i] = state.eta[i]
                      + w * (k1.d_eta[i] + 2 * k2.d_eta[i] + 2 * k3.d_eta[i] + k4.d_eta[i]);
        next.u[i] = state.u[i] + w * (k1.d_u[i] + 2 * k2.d_u[i] + 2 * k3.d_u[i] + k4.d_u[i]);
    }
    Field const h = depth(next, params);
    double const hmin = min_value(h);
    if (!(hmin > 0)) {
        throw NonPositiveDepthError(next, hmin);
    }
    return next;
}

inline double max_wave_speed(const State& state, const Params& params)
{
    Field const h = checked_depth(state, params);
    double s = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        s = std::max(s, std::fabs(params.alpha * state.u[i]) + std::sqrt(params.g * h[i]));
    }
    return s;
}

inline double cfl_dt(const State& state, const Params& params, const Grid& grid,
                     double cfl_number = 0.4)
{
    return cfl_number * grid.dx() / max_wave_speed(state, params);
}

//---------------------------------------------------------------------------//
struct EnergyReport {
    double E_tilde = 0;
    double E_star = 0;
    Field density;
    Field flux;
    double conservation_residual = 0;
};

// Face quadrature of the scaled energy; this is the functional the
// conservative scheme preserves.
inline double scaled_energy(const State& state, const Params& params, const Grid& grid)
{
    Field const h = checked_depth(state, params);
    std::size_t const n = grid.size();
    double const dx = grid.dx();
    double const eps = params.epsilon;
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t const ip = i + 1 == n ? 0 : i + 1;
        double const hf = 0.5 * (h[i] + h[ip]);
        double const du = (state.u[ip] - state.u[i]) / dx;
        double const de = (state.eta[ip] - state.eta[i]) / dx;
        s += 0.5 * h[i] * state.u[i] * state.u[i] + 0.5 * params.g * state.eta[i] * state.eta[i]
             + 0.5 * eps * hf * hf * (hf * du * du + params.g * de * de);
    }
    return s * dx;
}

inline double mass(const State& state, const Grid& grid)
{
    return integrate(state.eta, grid);
}

namespace detail {

struct DensityFlux {
    Field density;
    Field flux;
};

inline DensityFlux density_flux(const State& state, const Params& params, const Grid& grid)
{
    Field const h = checked_depth(state, params);
    Field const ux = derivative(state.u, grid);
    Field const ex = derivative(state.eta, grid);
    std::size_t const n = grid.size();
    double const eps = params.epsilon;
    double const g = params.g;
    double const a = params.alpha;

    Field S(n);
    if (eps > 0) {
        // S = (I + eps h^3 d/dx I_h^{-1} d/dx) psi
        Field const psi = nonlocal_flux(state, params, grid);
        Field const w = derivative(assemble(h, eps, grid).solve(derivative(psi, grid)), grid);
        for (std::size_t i = 0; i < n; ++i) {
            S[i] = psi[i] + eps * h[i] * h[i] * h[i] * w[i];
        }
    }

    DensityFlux out{Field(n), Field(n)};
    for (std::size_t i = 0; i < n; ++i) {
        double const hi = h[i];
        double const u = state.u[i];
        double const h3 = hi * hi * hi;
        double const reg = 0.5 * h3 * ux[i] * ux[i] + 0.5 * g * hi * hi * ex[i] * ex[i];
        out.density[i] = 0.5 * hi * u * u + 0.5 * g * state.eta[i] * state.eta[i] + eps * reg;
        out.flux[i] = 0.5 * a * hi * u * u * u + g * state.eta[i] * hi * u
                      + eps * ((reg + S[i]) * a * u + g * h3 * ex[i] * ux[i]);
    }
    return out;
}

} // namespace detail

// Pass the same state twice to skip the time-difference residual.
inline EnergyReport energy_report(const State& state, const State& state_prev,
                                  const Params& params, const Grid& grid)
{
    EnergyReport rep;
    rep.E_tilde = scaled_energy(state, params, grid);
    rep.E_star = params.alpha * params.alpha * rep.E_tilde;
    auto cur = detail::density_flux(state, params, grid);
    double const dt = state.time - state_prev.time;
    if (dt != 0) {
        auto prev = detail::density_flux(state_prev, params, grid);
        Field const dq = derivative(cur.flux, grid);
        Field const dq_prev = derivative(prev.flux, grid);
        double res = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double const r = (cur.density[i] - prev.density[i]) / dt + 0.5 * (dq[i] + dq_prev[i]);
            res = std::max(res, std::fabs(r));
        }
        rep.conservation_residual = res;
    }
    rep.density = std::move(cur.density);
    rep.flux = std::move(cur.flux);
    return rep;
}

} // namespace rsv
