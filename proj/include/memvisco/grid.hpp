#pragma once

// Dirichlet box discretization. Only interior nodes are stored; the boundary
// value is identically zero and enters stencils as a ghost.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "memvisco/error.hpp"

namespace memvisco {

class Grid {
public:
    /// 1D interval (0, extent) with n interior nodes.
    static Grid line(std::size_t n, double extent = 1.0) { return Grid(1, {n, 1, 1}, {extent, 1.0, 1.0}); }

    /// 3D box (0,Lx)x(0,Ly)x(0,Lz).
    static Grid box(std::array<std::size_t, 3> n, std::array<double, 3> extent = {1.0, 1.0, 1.0}) {
        return Grid(3, n, extent);
    }

    static Grid cube(std::size_t n, double extent = 1.0) { return box({n, n, n}, {extent, extent, extent}); }

    Grid(int dim, std::array<std::size_t, 3> n, std::array<double, 3> extent) : dim_(dim), n_(n), extent_(extent) {
        if (dim != 1 && dim != 3) throw InvalidSpec("grid: dim must be 1 or 3");
        for (int a = 0; a < dim; ++a) {
            if (n[a] < 3) throw InvalidSpec("grid: need at least 3 interior points per axis");
            if (!(extent[a] > 0.0) || !std::isfinite(extent[a])) throw InvalidSpec("grid: extent must be > 0");
            h_[a] = extent[a] / static_cast<double>(n[a] + 1);
        }
        for (int a = dim; a < 3; ++a) {
            n_[a] = 1;
            extent_[a] = 1.0;
            h_[a] = 1.0;
        }
    }

    int dim() const noexcept { return dim_; }
    std::size_t points(int axis) const noexcept { return n_[axis]; }
    double extent(int axis) const noexcept { return extent_[axis]; }
    double spacing(int axis) const noexcept { return h_[axis]; }

    double min_spacing() const noexcept {
        double h = h_[0];
        for (int a = 1; a < dim_; ++a) h = std::min(h, h_[a]);
        return h;
    }

    std::size_t size() const noexcept { return n_[0] * n_[1] * n_[2]; }

    /// Quadrature weight of one interior node (midpoint rule).
    double cell_volume() const noexcept {
        double v = 1.0;
        for (int a = 0; a < dim_; ++a) v *= h_[a];
        return v;
    }

    double measure() const noexcept {
        double v = 1.0;
        for (int a = 0; a < dim_; ++a) v *= extent_[a];
        return v;
    }

    std::size_t index(std::size_t i, std::size_t j = 0, std::size_t k = 0) const noexcept {
        return i + n_[0] * (j + n_[1] * k);
    }

    /// Interior node coordinates (unused axes are 0).
    std::array<double, 3> coordinates(std::size_t idx) const noexcept {
        std::array<double, 3> x{0.0, 0.0, 0.0};
        const std::size_t i = idx % n_[0];
        const std::size_t j = (idx / n_[0]) % n_[1];
        const std::size_t k = idx / (n_[0] * n_[1]);
        const std::array<std::size_t, 3> ijk{i, j, k};
        for (int a = 0; a < dim_; ++a) x[a] = static_cast<double>(ijk[a] + 1) * h_[a];
        return x;
    }

    std::size_t stride(int axis) const noexcept {
        return axis == 0 ? 1 : (axis == 1 ? n_[0] : n_[0] * n_[1]);
    }

    friend bool operator==(const Grid& a, const Grid& b) noexcept {
        return a.dim_ == b.dim_ && a.n_ == b.n_ && a.extent_ == b.extent_;
    }

    std::string describe() const {
        std::string s = "grid(dim=" + std::to_string(dim_) + ", n=";
        for (int a = 0; a < dim_; ++a) s += (a ? "x" : "") + std::to_string(n_[a]);
        s += ", extent=";
        for (int a = 0; a < dim_; ++a) s += (a ? "x" : "") + detail_fmt(extent_[a]);
        return s + ")";
    }

private:
    static std::string detail_fmt(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    int dim_;
    std::array<std::size_t, 3> n_;
    std::array<double, 3> extent_;
    std::array<double, 3> h_{1.0, 1.0, 1.0};
};

/// Nodal values on the interior of a grid.
class Field {
public:
    explicit Field(Grid grid) : grid_(std::move(grid)), values_(grid_.size(), 0.0) {}
    Field(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != grid_.size()) throw DomainError("field: value count does not match grid");
    }

    const Grid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }

    Field& operator+=(const Field& o) {
        check_same(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
        return *this;
    }
    Field& operator-=(const Field& o) {
        check_same(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
        return *this;
    }
    Field& operator*=(double s) noexcept {
        for (double& v : values_) v *= s;
        return *this;
    }
    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(double s, Field a) { return a *= s; }

    bool all_finite() const noexcept {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    void check_same(const Field& o) const {
        if (!(o.grid_ == grid_)) throw DomainError("field: grid mismatch");
    }

    Grid grid_;
    std::vector<double> values_;
};

/// Second-order central differences with zero Dirichlet ghosts, raw arrays.
inline void laplacian_into(const Grid& g, std::span<const double> u, std::span<double> out) {
    const std::size_t N = g.size();
    for (std::size_t p = 0; p < N; ++p) out[p] = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
        const std::size_t n = g.points(a);
        const std::size_t st = g.stride(a);
        const double w = 1.0 / (g.spacing(a) * g.spacing(a));
        for (std::size_t p = 0; p < N; ++p) {
            const std::size_t i = (p / st) % n;
            const double left = i > 0 ? u[p - st] : 0.0;
            const double right = i + 1 < n ? u[p + st] : 0.0;
            out[p] += w * (left - 2.0 * u[p] + right);
        }
    }
}

inline Field laplacian(const Grid& g, const Field& u) {
    if (!(u.grid() == g)) throw DomainError("laplacian: field lives on a different grid");
    Field out(g);
    laplacian_into(g, u.values(), out.values());
    return out;
}

/// sum over staggered edges of |D+ u|^2 times the cell volume, i.e. the discrete
/// int |grad u|^2. Equals -<lap u, u> exactly (summation by parts).
inline double gradient_energy(const Grid& g, std::span<const double> u) {
    double total = 0.0;
    const std::size_t N = g.size();
    for (int a = 0; a < g.dim(); ++a) {
        const std::size_t n = g.points(a);
        const std::size_t st = g.stride(a);
        double s = 0.0;
        for (std::size_t p = 0; p < N; ++p) {
            const std::size_t i = (p / st) % n;
            const double left = i > 0 ? u[p - st] : 0.0;
            const double d = u[p] - left;
            s += d * d;
            if (i + 1 == n) s += u[p] * u[p];
        }
        total += s / (g.spacing(a) * g.spacing(a));
    }
    return total * g.cell_volume();
}

/// int (grad a . grad b) on the staggered grid.
inline double gradient_inner(const Grid& g, std::span<const double> a, std::span<const double> b) {
    double total = 0.0;
    const std::size_t N = g.size();
    for (int ax = 0; ax < g.dim(); ++ax) {
        const std::size_t n = g.points(ax);
        const std::size_t st = g.stride(ax);
        double s = 0.0;
        for (std::size_t p = 0; p < N; ++p) {
            const std::size_t i = (p / st) % n;
            const double da = a[p] - (i > 0 ? a[p - st] : 0.0);
            const double db = b[p] - (i > 0 ? b[p - st] : 0.0);
            s += da * db;
            if (i + 1 == n) s += a[p] * b[p];
        }
        total += s / (g.spacing(ax) * g.spacing(ax));
    }
    return total * g.cell_volume();
}

inline double inner(const Grid& g, std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s * g.cell_volume();
}

inline double l2_space(const Grid& g, const Field& u) {
    if (!(u.grid() == g)) throw DomainError("l2_space: field lives on a different grid");
    return std::sqrt(inner(g, u.values(), u.values()));
}

inline double max_abs(std::span<const double> u) {
    double m = 0.0;
    for (double v : u) m = std::max(m, std::abs(v));
    return m;
}

// --- closed-form initializers ---------------------------------------------

/// amplitude * prod_a sin(k_a pi x_a / L_a); vanishes on the boundary.
inline Field sin_pi_product(const Grid& g, double amplitude = 1.0, std::array<int, 3> modes = {1, 1, 1}) {
    Field f(g);
    for (std::size_t p = 0; p < g.size(); ++p) {
        const auto x = g.coordinates(p);
        double v = amplitude;
        for (int a = 0; a < g.dim(); ++a) v *= std::sin(modes[a] * std::numbers::pi * x[a] / g.extent(a));
        f[p] = v;
    }
    return f;
}

/// -lap of the continuous sine product: sum_a (k_a pi / L_a)^2.
inline double sine_eigenvalue(const Grid& g, std::array<int, 3> modes = {1, 1, 1}) {
    double s = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
        const double k = modes[a] * std::numbers::pi / g.extent(a);
        s += k * k;
    }
    return s;
}

/// -lap_h of the sampled sine product: sum_a (2/h^2)(1 - cos(k pi h / L)).
inline double discrete_sine_eigenvalue(const Grid& g, std::array<int, 3> modes = {1, 1, 1}) {
    double s = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
        const double h = g.spacing(a);
        s += 2.0 / (h * h) * (1.0 - std::cos(modes[a] * std::numbers::pi * h / g.extent(a)));
    }
    return s;
}

/// Smooth compactly supported bump amplitude * exp(1 - 1/(1 - r^2/R^2)),
/// centered at `center` (fractions of the extent) with radius R (fraction of the smallest extent).
inline Field bump(const Grid& g, double amplitude = 1.0, double radius = 0.25,
                  std::array<double, 3> center = {0.5, 0.5, 0.5}) {
    if (!(radius > 0.0)) throw InvalidSpec("bump: radius must be > 0");
    double lmin = g.extent(0);
    for (int a = 1; a < g.dim(); ++a) lmin = std::min(lmin, g.extent(a));
    const double R = radius * lmin;
    Field f(g);
    for (std::size_t p = 0; p < g.size(); ++p) {
        const auto x = g.coordinates(p);
        double r2 = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            const double d = x[a] - center[a] * g.extent(a);
            r2 += d * d;
        }
        const double q = r2 / (R * R);
        f[p] = q < 1.0 ? amplitude * std::exp(1.0 - 1.0 / (1.0 - q)) : 0.0;
    }
    return f;
}

}  // namespace memvisco
