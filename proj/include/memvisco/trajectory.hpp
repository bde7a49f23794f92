#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "memvisco/grid.hpp"

namespace memvisco {

/// Full time history u(., t_j), t_j = j dt, j = 0..steps. Immutable once a
/// solver hands it out.
class TrajectorySolution {
public:
    TrajectorySolution(Grid grid, double dt, std::size_t steps, Field initial_velocity, std::string spec_hash = {})
        : grid_(std::move(grid)),
          dt_(dt),
          steps_(steps),
          data_((steps + 1) * grid_.size(), 0.0),
          initial_velocity_(std::move(initial_velocity)),
          spec_hash_(std::move(spec_hash)) {
        if (!(initial_velocity_.grid() == grid_)) throw DomainError("trajectory: initial velocity on wrong grid");
    }

    const Grid& grid() const noexcept { return grid_; }
    double dt() const noexcept { return dt_; }
    std::size_t steps() const noexcept { return steps_; }
    std::size_t levels() const noexcept { return steps_ + 1; }
    double time(std::size_t j) const noexcept { return static_cast<double>(j) * dt_; }
    double final_time() const noexcept { return time(steps_); }
    const std::string& spec_hash() const noexcept { return spec_hash_; }
    const Field& initial_velocity() const noexcept { return initial_velocity_; }

    std::span<const double> level(std::size_t j) const noexcept {
        return std::span<const double>(data_).subspan(j * grid_.size(), grid_.size());
    }
    std::span<double> level(std::size_t j) noexcept { return std::span<double>(data_).subspan(j * grid_.size(), grid_.size()); }
    std::span<const double> data() const noexcept { return data_; }

    Field field(std::size_t j) const {
        auto v = level(j);
        return Field(grid_, std::vector<double>(v.begin(), v.end()));
    }

    /// u_t at level j: u1 at j = 0, centered inside, second-order backward at the end.
    void velocity(std::size_t j, std::span<double> out) const {
        const std::size_t N = grid_.size();
        if (j == 0) {
            auto v = initial_velocity_.values();
            for (std::size_t i = 0; i < N; ++i) out[i] = v[i];
        } else if (j < steps_) {
            auto a = level(j + 1), b = level(j - 1);
            for (std::size_t i = 0; i < N; ++i) out[i] = (a[i] - b[i]) / (2.0 * dt_);
        } else if (steps_ >= 2) {
            auto a = level(j), b = level(j - 1), c = level(j - 2);
            for (std::size_t i = 0; i < N; ++i) out[i] = (3.0 * a[i] - 4.0 * b[i] + c[i]) / (2.0 * dt_);
        } else {
            auto a = level(j), b = level(j - 1);
            for (std::size_t i = 0; i < N; ++i) out[i] = (a[i] - b[i]) / dt_;
        }
    }

    /// Trapezoid-in-time weight of level j.
    double time_weight(std::size_t j) const noexcept {
        return (j == 0 || j == steps_) ? 0.5 * dt_ : dt_;
    }

private:
    Grid grid_;
    double dt_;
    std::size_t steps_;
    std::vector<double> data_;
    Field initial_velocity_;
    std::string spec_hash_;
};

/// Midpoint in space, trapezoid in time.
inline double l2_spacetime(const TrajectorySolution& u) {
    double s = 0.0;
    for (std::size_t j = 0; j < u.levels(); ++j) {
        auto v = u.level(j);
        s += u.time_weight(j) * inner(u.grid(), v, v);
    }
    return std::sqrt(s);
}

inline void check_same_discretization(const TrajectorySolution& a, const TrajectorySolution& b) {
    if (!(a.grid() == b.grid()) || a.steps() != b.steps() || a.dt() != b.dt())
        throw DomainError("trajectories live on different space-time grids");
}

/// ||a - b|| in L2(Q).
inline double l2_distance(const TrajectorySolution& a, const TrajectorySolution& b) {
    check_same_discretization(a, b);
    double s = 0.0;
    const std::size_t N = a.grid().size();
    for (std::size_t j = 0; j < a.levels(); ++j) {
        auto x = a.level(j), y = b.level(j);
        double acc = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double d = x[i] - y[i];
            acc += d * d;
        }
        s += a.time_weight(j) * acc * a.grid().cell_volume();
    }
    return std::sqrt(s);
}

/// Max over all nodes and levels of |u|.
inline double sup_norm(const TrajectorySolution& u) { return max_abs(u.data()); }

/// CSV rows: t, node index, x, y, z, u, u_t, every `stride` levels (last level always).
inline void export_csv(const TrajectorySolution& u, std::ostream& os, std::size_t stride = 1) {
    if (stride == 0) stride = 1;
    os << "t,node,x,y,z,u,u_t\n";
    char buf[256];
    std::vector<double> ut(u.grid().size());
    for (std::size_t j = 0; j < u.levels(); ++j) {
        if (j % stride != 0 && j != u.steps()) continue;
        u.velocity(j, ut);
        auto v = u.level(j);
        for (std::size_t p = 0; p < v.size(); ++p) {
            const auto x = u.grid().coordinates(p);
            std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", u.time(j), p, x[0], x[1], x[2],
                          v[p], ut[p]);
            os << buf;
        }
    }
}

/// Raw little-endian doubles, row-major (level, node), preceded by a 32-byte
/// header: magic "MVTRAJ01", levels (u64), nodes (u64), dt (f64).
inline void export_binary(const TrajectorySolution& u, std::ostream& os) {
    const char magic[8] = {'M', 'V', 'T', 'R', 'A', 'J', '0', '1'};
    os.write(magic, 8);
    const std::uint64_t levels = u.levels(), nodes = u.grid().size();
    const double dt = u.dt();
    os.write(reinterpret_cast<const char*>(&levels), 8);
    os.write(reinterpret_cast<const char*>(&nodes), 8);
    os.write(reinterpret_cast<const char*>(&dt), 8);
    os.write(reinterpret_cast<const char*>(u.data().data()), static_cast<std::streamsize>(u.data().size() * sizeof(double)));
}

}  // namespace memvisco
