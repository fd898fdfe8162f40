#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "error.hpp"

namespace rsv {

//---------------------------------------------------------------------------//
// Uniform periodic mesh on [0, L).
class Grid {
  public:
    Grid(std::size_t n_points, double length) : n_(n_points), length_(length)
    {
        require(n_points >= 16, ErrorCode::invalid_argument, "grid needs at least 16 points");
        require(length > 0 && std::isfinite(length), ErrorCode::invalid_argument,
                "grid length must be positive");
    }

    std::size_t size() const { return n_; }
    double length() const { return length_; }
    double dx() const { return length_ / static_cast<double>(n_); }
    double x(std::size_t i) const { return static_cast<double>(i) * dx(); }

    friend bool operator==(const Grid&, const Grid&) = default;

  private:
    std::size_t n_;
    double length_;
};

//---------------------------------------------------------------------------//
struct Params {
    double g = 1.0;
    double epsilon = 1.0;
    double alpha = 1.0;
    double h_star = 1.0;
    // Drop the regularization entirely (plain shallow water); requires epsilon = 0.
    bool classical_branch = false;

    void validate() const
    {
        require(g > 0 && alpha > 0 && alpha <= 1 && h_star > 0, ErrorCode::invalid_argument,
                "g, alpha, h_star must be positive and alpha <= 1");
        if (classical_branch) {
            require(epsilon == 0, ErrorCode::invalid_argument,
                    "classical branch runs with epsilon = 0");
        } else {
            require(epsilon > 0 && epsilon <= 1, ErrorCode::invalid_argument,
                    "epsilon must lie in (0, 1]");
        }
    }

    friend bool operator==(const Params&, const Params&) = default;
};

//---------------------------------------------------------------------------//
// Samples of a scalar function on a Grid.
class Field {
  public:
    Field() = default;
    explicit Field(std::size_t n, double value = 0.0) : values_(n, value) {}
    explicit Field(std::vector<double> values) : values_(std::move(values)) {}

    std::size_t size() const { return values_.size(); }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    auto begin() { return values_.begin(); }
    auto end() { return values_.end(); }
    auto begin() const { return values_.begin(); }
    auto end() const { return values_.end(); }
    std::span<const double> span() const { return values_; }
    const std::vector<double>& values() const { return values_; }

    friend bool operator==(const Field&, const Field&) = default;

  private:
    std::vector<double> values_;
};

struct State {
    Field eta;
    Field u;
    double time = 0.0;

    friend bool operator==(const State&, const State&) = default;
};

//---------------------------------------------------------------------------//
inline void check_length(const Field& f, const Grid& grid)
{
    require(f.size() == grid.size(), ErrorCode::length_mismatch,
            "field has " + std::to_string(f.size()) + " samples, grid has "
                + std::to_string(grid.size()));
}

template<class F>
Field tabulate(const Grid& grid, F&& func)
{
    Field f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        f[i] = func(grid.x(i));
    }
    return f;
}

// h = h_star + alpha * eta
inline Field depth(const State& state, const Params& params)
{
    Field h(state.eta.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        h[i] = params.h_star + params.alpha * state.eta[i];
    }
    return h;
}

inline double min_value(const Field& f)
{
    double m = f[0];
    for (double v : f) {
        m = v < m ? v : m;
    }
    return m;
}

inline double max_value(const Field& f)
{
    double m = f[0];
    for (double v : f) {
        m = v > m ? v : m;
    }
    return m;
}

inline double max_abs(const Field& f)
{
    double m = 0;
    for (double v : f) {
        m = std::fabs(v) > m ? std::fabs(v) : m;
    }
    return m;
}

inline std::size_t argmin(const Field& f)
{
    std::size_t k = 0;
    for (std::size_t i = 1; i < f.size(); ++i) {
        if (f[i] < f[k]) {
            k = i;
        }
    }
    return k;
}

inline bool all_finite(const Field& f)
{
    for (double v : f) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

//---------------------------------------------------------------------------//
// Second-order central difference with periodic wraparound.
inline Field derivative(const Field& f, const Grid& grid)
{
    check_length(f, grid);
    std::size_t const n = f.size();
    double const c = 0.5 / grid.dx();
    Field d(n);
    d[0] = c * (f[1] - f[n - 1]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        d[i] = c * (f[i + 1] - f[i - 1]);
    }
    d[n - 1] = c * (f[0] - f[n - 2]);
    return d;
}

// Compact second difference (f[i+1] - 2 f[i] + f[i-1]) / dx^2.
inline Field second_derivative(const Field& f, const Grid& grid)
{
    check_length(f, grid);
    std::size_t const n = f.size();
    double const c = 1.0 / (grid.dx() * grid.dx());
    Field d(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t const ip = i + 1 == n ? 0 : i + 1;
        std::size_t const im = i == 0 ? n - 1 : i - 1;
        d[i] = c * (f[ip] - 2 * f[i] + f[im]);
    }
    return d;
}

// Periodic trapezoid rule.
inline double integrate(const Field& f, const Grid& grid)
{
    check_length(f, grid);
    double s = 0;
    for (double v : f) {
        s += v;
    }
    return s * grid.dx();
}

// Trapezoid primitive with F[anchor] = 0, accumulated forward around the period.
inline Field cumulative_primitive(const Field& f, const Grid& grid, std::size_t anchor)
{
    check_length(f, grid);
    std::size_t const n = f.size();
    require(anchor < n, ErrorCode::invalid_argument, "anchor outside grid");
    double const half_dx = 0.5 * grid.dx();
    Field F(n);
    F[anchor] = 0;
    std::size_t i = anchor;
    for (std::size_t k = 1; k < n; ++k) {
        std::size_t const next = i + 1 == n ? 0 : i + 1;
        F[next] = F[i] + half_dx * (f[i] + f[next]);
        i = next;
    }
    return F;
}

// Four-point periodic Lagrange interpolation.
inline double sample(const Field& f, double x, const Grid& grid)
{
    check_length(f, grid);
    auto const n = static_cast<long>(grid.size());
    double const s = x / grid.dx();
    double const fl = std::floor(s);
    double const t = s - fl;
    long i = static_cast<long>(fl) % n;
    if (i < 0) {
        i += n;
    }
    auto at = [&](long k) { return f[static_cast<std::size_t>(((k % n) + n) % n)]; };
    double const fm = at(i - 1);
    double const f0 = at(i);
    double const f1 = at(i + 1);
    double const f2 = at(i + 2);
    // Nodes at -1, 0, 1, 2 in units of dx.
    double const wm = -t * (t - 1) * (t - 2) / 6;
    double const w0 = (t + 1) * (t - 1) * (t - 2) / 2;
    double const w1 = -(t + 1) * t * (t - 2) / 2;
    double const w2 = (t + 1) * t * (t - 1) / 6;
    return wm * fm + w0 * f0 + w1 * f1 + w2 * f2;
}

} // namespace rsv
