#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "statespace.hpp"

namespace rsv {

//---------------------------------------------------------------------------//
// Face helpers. Face i sits at x_{i+1/2}.
inline Field face_average(const Field& f)
{
    std::size_t const n = f.size();
    Field a(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        a[i] = 0.5 * (f[i] + f[i + 1]);
    }
    a[n - 1] = 0.5 * (f[n - 1] + f[0]);
    return a;
}

// Node to face: (f[i+1] - f[i]) / dx.
inline Field forward_difference(const Field& f, const Grid& grid)
{
    check_length(f, grid);
    std::size_t const n = f.size();
    double const inv = 1.0 / grid.dx();
    Field d(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        d[i] = inv * (f[i + 1] - f[i]);
    }
    d[n - 1] = inv * (f[0] - f[n - 1]);
    return d;
}

// Face to node: (F[i+1/2] - F[i-1/2]) / dx.
inline Field backward_difference(const Field& faces, const Grid& grid)
{
    check_length(faces, grid);
    std::size_t const n = faces.size();
    double const inv = 1.0 / grid.dx();
    Field d(n);
    d[0] = inv * (faces[0] - faces[n - 1]);
    for (std::size_t i = 1; i < n; ++i) {
        d[i] = inv * (faces[i] - faces[i - 1]);
    }
    return d;
}

//---------------------------------------------------------------------------//
/*!
 * Discrete I_h = h - eps d/dx (h^3 d/dx) with face-averaged h^3.
 *
 * Row i: diag h_i + eps (H_{i-1/2} + H_{i+1/2}) / dx^2, neighbours
 * -eps H_{i+-1/2} / dx^2, periodic corners. The cyclic system is reduced to
 * a tridiagonal one with a Sherman-Morrison correction; the Thomas sweep and
 * the correction vector are computed once at assembly.
 */
class EllipticOperator {
  public:
    EllipticOperator(const Field& h, double epsilon, const Grid& grid)
        : grid_(grid), h_(h), epsilon_(epsilon)
    {
        check_length(h, grid);
        require(epsilon > 0, ErrorCode::invalid_argument, "elliptic operator needs epsilon > 0");
        double const hmin = min_value(h);
        require(hmin > 0, ErrorCode::non_positive_depth,
                "min h = " + std::to_string(hmin) + " in elliptic assembly");

        std::size_t const n = grid.size();
        double const c = epsilon / (grid.dx() * grid.dx());
        diag_ = Field(n);
        off_ = Field(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t const ip = i + 1 == n ? 0 : i + 1;
            double const hf = 0.5 * (h[i] + h[ip]);
            off_[i] = -c * hf * hf * hf;
        }
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t const im = i == 0 ? n - 1 : i - 1;
            diag_[i] = h[i] - off_[i] - off_[im];
        }
        factor();
    }

    const Grid& grid() const { return grid_; }
    const Field& h() const { return h_; }
    double epsilon() const { return epsilon_; }
    // diagonal()[i] = A(i,i); off_diagonal()[i] = A(i,i+1) = A(i+1,i), cyclic.
    const Field& diagonal() const { return diag_; }
    const Field& off_diagonal() const { return off_; }

    Field apply(const Field& v) const
    {
        check_length(v, grid_);
        std::size_t const n = v.size();
        Field r(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t const ip = i + 1 == n ? 0 : i + 1;
            std::size_t const im = i == 0 ? n - 1 : i - 1;
            r[i] = diag_[i] * v[i] + off_[i] * v[ip] + off_[im] * v[im];
        }
        return r;
    }

    Field solve(const Field& rhs) const
    {
        check_length(rhs, grid_);
        Field y = thomas(rhs);
        std::size_t const n = y.size();
        double const vy = y[0] + v_last_ * y[n - 1];
        double const scale = vy / denom_;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] -= scale * z_[i];
        }
        return y;
    }

  private:
    Grid grid_;
    Field h_;
    double epsilon_;
    Field diag_;
    Field off_;
    // Thomas factors of the modified tridiagonal matrix.
    std::vector<double> cprime_;
    std::vector<double> inv_pivot_;
    Field z_;
    double v_last_ = 0;
    double denom_ = 1;

    void factor()
    {
        std::size_t const n = grid_.size();
        // A = T + w v^T with w = (gamma, 0, ..., corner), v = (1, 0, ..., corner / gamma).
        double const gamma = -diag_[0];
        double const corner = off_[n - 1];
        std::vector<double> b(diag_.begin(), diag_.end());
        b[0] -= gamma;
        b[n - 1] -= corner * corner / gamma;

        cprime_.assign(n, 0.0);
        inv_pivot_.assign(n, 0.0);
        double pivot = b[0];
        for (std::size_t i = 0; i < n; ++i) {
            if (i > 0) {
                pivot = b[i] - off_[i - 1] * cprime_[i - 1];
            }
            require(pivot > 0 && std::isfinite(pivot), ErrorCode::singular_factorization,
                    "non-positive pivot in cyclic tridiagonal factorization");
            inv_pivot_[i] = 1.0 / pivot;
            cprime_[i] = i + 1 < n ? off_[i] * inv_pivot_[i] : 0.0;
        }

        Field w(n);
        w[0] = gamma;
        w[n - 1] = corner;
        z_ = thomas(w);
        v_last_ = corner / gamma;
        denom_ = 1.0 + z_[0] + v_last_ * z_[n - 1];
        require(std::fabs(denom_) > 0 && std::isfinite(denom_), ErrorCode::singular_factorization,
                "degenerate Sherman-Morrison correction");
    }

    Field thomas(const Field& rhs) const
    {
        std::size_t const n = rhs.size();
        Field y(n);
        y[0] = rhs[0] * inv_pivot_[0];
        for (std::size_t i = 1; i < n; ++i) {
            y[i] = (rhs[i] - off_[i - 1] * y[i - 1]) * inv_pivot_[i];
        }
        for (std::size_t i = n - 1; i-- > 0;) {
            y[i] -= cprime_[i] * y[i + 1];
        }
        return y;
    }
};

inline EllipticOperator assemble(const Field& h, double epsilon, const Grid& grid)
{
    return EllipticOperator(h, epsilon, grid);
}

inline Field solve(const EllipticOperator& op, const Field& rhs)
{
    return op.solve(rhs);
}

//---------------------------------------------------------------------------//
// psi = 2 h^3 u_x^2 - (1/2) g h^2 eta_x^2, with central derivatives.
inline Field nonlocal_flux(const State& state, const Params& params, const Grid& grid)
{
    Field const h = depth(state, params);
    Field const ux = derivative(state.u, grid);
    Field const ex = derivative(state.eta, grid);
    Field psi(grid.size());
    for (std::size_t i = 0; i < psi.size(); ++i) {
        double const h2 = h[i] * h[i];
        psi[i] = 2 * h2 * h[i] * ux[i] * ux[i] - 0.5 * params.g * h2 * ex[i] * ex[i];
    }
    return psi;
}

// f(W) = eps alpha I_h^{-1} d/dx psi
inline Field nonlocal_f(const State& state, const Params& params, const Grid& grid)
{
    Field const h = depth(state, params);
    auto const op = assemble(h, params.epsilon, grid);
    Field f = op.solve(derivative(nonlocal_flux(state, params, grid), grid));
    double const scale = params.epsilon * params.alpha;
    for (double& v : f) {
        v *= scale;
    }
    return f;
}

//---------------------------------------------------------------------------//
// Anchor for primitives of compactly supported integrands: half a period away
// from where the integrand peaks.
inline std::size_t far_anchor(const Field& integrand)
{
    std::size_t peak = 0;
    for (std::size_t i = 1; i < integrand.size(); ++i) {
        if (std::fabs(integrand[i]) > std::fabs(integrand[peak])) {
            peak = i;
        }
    }
    return (peak + integrand.size() / 2) % integrand.size();
}

// Q = 2 d/dx I_h^{-1}(h G), G the primitive of the product of characteristic
// speed gradients. Operates on physical velocity alpha*u.
inline Field riccati_Q(const Field& h, const Field& lambda_product, double epsilon,
                       const Grid& grid)
{
    Field const G = cumulative_primitive(lambda_product, grid, far_anchor(lambda_product));
    Field hG(grid.size());
    for (std::size_t i = 0; i < hG.size(); ++i) {
        hG[i] = h[i] * G[i];
    }
    Field Q = derivative(assemble(h, epsilon, grid).solve(hG), grid);
    for (double& v : Q) {
        v *= 2;
    }
    return Q;
}

inline Field speed_gradient_product(const State& state, const Params& params, const Grid& grid)
{
    Field const h = depth(state, params);
    Field lp(grid.size());
    Field lm(grid.size());
    for (std::size_t i = 0; i < lp.size(); ++i) {
        double const c = std::sqrt(params.g * h[i]);
        lp[i] = params.alpha * state.u[i] + c;
        lm[i] = params.alpha * state.u[i] - c;
    }
    Field const dp = derivative(lp, grid);
    Field const dm = derivative(lm, grid);
    Field prod(grid.size());
    for (std::size_t i = 0; i < prod.size(); ++i) {
        prod[i] = dp[i] * dm[i];
    }
    return prod;
}

inline Field riccati_Q(const State& state, const Params& params, const Grid& grid)
{
    Field const h = depth(state, params);
    require(min_value(h) > 0, ErrorCode::non_positive_depth, "riccati_Q on non-positive depth");
    return riccati_Q(h, speed_gradient_product(state, params, grid), params.epsilon, grid);
}

//---------------------------------------------------------------------------//
/*!
 * Residual of -eps d/dx I^{-1} d/dx (h^3 phi) = phi - d/dx I^{-1} (h int phi).
 *
 * Both sides live on faces: the outer derivative is the forward difference,
 * h^3 phi is taken on faces as H phi_face with the assembly's H, the inner
 * derivative is the backward difference, and the primitive is the trapezoid
 * sum. With these stencils the identity holds exactly for any depth, so the
 * residual measures solver round-off.
 */
inline double decomposition_residual(const Field& h, const Field& phi, const Params& params,
                                     const Grid& grid)
{
    check_length(h, grid);
    check_length(phi, grid);
    double const norm = max_abs(phi);
    if (norm == 0) {
        return 0;
    }
    double const mean = integrate(phi, grid) / grid.length();
    require(std::fabs(mean) <= 1e-10 * norm, ErrorCode::non_zero_mean,
            "decomposition identity needs zero-mean phi");

    auto const op = assemble(h, params.epsilon, grid);
    std::size_t const n = grid.size();
    Field const phi_face = face_average(phi);
    Field const hf = face_average(h);

    Field flux(n);
    for (std::size_t i = 0; i < n; ++i) {
        flux[i] = hf[i] * hf[i] * hf[i] * phi_face[i];
    }
    Field lhs = forward_difference(op.solve(backward_difference(flux, grid)), grid);
    for (double& v : lhs) {
        v *= -params.epsilon;
    }

    Field const G = cumulative_primitive(phi, grid, 0);
    Field hG(n);
    for (std::size_t i = 0; i < n; ++i) {
        hG[i] = h[i] * G[i];
    }
    Field const nonlocal = forward_difference(op.solve(hG), grid);

    double res = 0;
    for (std::size_t i = 0; i < n; ++i) {
        res = std::fmax(res, std::fabs(lhs[i] - (phi_face[i] - nonlocal[i])));
    }
    return res;
}

struct LandauKolmogorov {
    double lhs; // ||phi'||^2
    double rhs; // 2 ||phi|| ||phi''||
};

inline LandauKolmogorov landau_kolmogorov_check(const Field& phi, const Grid& grid)
{
    double const d1 = max_abs(derivative(phi, grid));
    double const d2 = max_abs(second_derivative(phi, grid));
    return {d1 * d1, 2 * max_abs(phi) * d2};
}

} // namespace rsv
