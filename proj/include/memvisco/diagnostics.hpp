#pragma once

// Post-processing of trajectories: energy balance, the a-priori energy bound
// and residuals of the space-time weak formulation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "memvisco/error.hpp"
#include "memvisco/forcing.hpp"
#include "memvisco/grid.hpp"
#include "memvisco/kernel.hpp"
#include "memvisco/solver.hpp"
#include "memvisco/trajectory.hpp"

namespace memvisco {

// --- energy ledger ---------------------------------------------------------

/// One row per time level. With q(s) = ||grad u(t) - grad u(t - s)||^2:
///   stored       = kinetic + elastic + memory
///   memory       = 1/2 int_0^t (-G'(s)) q(s) ds
///   dissipation  = 1/2 G'(t) ||grad u||^2 - 1/2 int_0^t G''(s) q(s) ds
/// and the balance d/dt stored = power + dissipation.
struct EnergyRow {
    double time = 0.0;
    double kinetic = 0.0;
    double elastic = 0.0;
    double memory = 0.0;
    double dissipation = 0.0;
    double power = 0.0;
    double residual = 0.0;  // centered difference of stored minus (power + dissipation)
    bool residual_defined = false;
    bool finite = true;

    double stored() const noexcept { return kinetic + elastic + memory; }
};

struct EnergyLedger {
    std::vector<EnergyRow> rows;
    double dt = 0.0;
    double h = 0.0;
    bool forced = false;

    double max_abs_residual() const noexcept {
        double m = 0.0;
        for (const auto& r : rows)
            if (r.residual_defined) m = std::max(m, std::abs(r.residual));
        return m;
    }
    bool all_finite() const noexcept {
        return std::all_of(rows.begin(), rows.end(), [](const EnergyRow& r) { return r.finite; });
    }
};

template <MemoryKernel K>
EnergyLedger energy_ledger(const TrajectorySolution& u, const K& kernel, const Forcing& f) {
    const Grid& g = u.grid();
    const std::size_t N = g.size();
    const std::size_t L = u.levels();
    const double dt = u.dt();

    EnergyLedger ledger;
    ledger.dt = dt;
    ledger.h = g.min_spacing();
    ledger.forced = !f.is_zero();
    ledger.rows.resize(L);

    const std::size_t intervals = u.steps();
    const ConvolutionWeights wd = intervals ? derivative_weights(kernel, dt, intervals) : ConvolutionWeights{};
    const ConvolutionWeights wdd = intervals ? second_derivative_weights(kernel, dt, intervals) : ConvolutionWeights{};

    std::vector<double> ut(N), fj(N), diff(N), q(L);
    for (std::size_t j = 0; j < L; ++j) {
        EnergyRow& row = ledger.rows[j];
        const double t = u.time(j);
        row.time = t;
        auto uj = u.level(j);
        const double grad2 = gradient_energy(g, uj);

        u.velocity(j, ut);
        row.kinetic = 0.5 * inner(g, ut, ut);
        row.elastic = 0.5 * kernel.value(t) * grad2;

        for (std::size_t m = 1; m <= j; ++m) {
            auto um = u.level(j - m);
            for (std::size_t i = 0; i < N; ++i) diff[i] = uj[i] - um[i];
            q[m] = gradient_energy(g, diff);
        }
        q[0] = 0.0;
        double mem = 0.0, curv = 0.0;
        for (std::size_t a = 0; a < j; ++a) {
            mem += wd.near[a] * q[a] + wd.far[a] * q[a + 1];
            curv += wdd.near[a] * q[a] + wdd.far[a] * q[a + 1];
        }
        row.memory = -0.5 * mem;
        row.dissipation = 0.5 * kernel.derivative(t) * grad2 - 0.5 * curv;

        if (ledger.forced) {
            f.evaluate(t, fj);
            row.power = inner(g, fj, ut);
        }
        row.finite = std::isfinite(row.kinetic) && std::isfinite(row.elastic) && std::isfinite(row.memory) &&
                     std::isfinite(row.dissipation) && std::isfinite(row.power);
    }
    for (std::size_t j = 1; j + 1 < L; ++j) {
        EnergyRow& row = ledger.rows[j];
        const double rate = (ledger.rows[j + 1].stored() - ledger.rows[j - 1].stored()) / (2.0 * dt);
        row.residual = rate - (row.power + row.dissipation);
        row.residual_defined = true;
    }
    return ledger;
}

// --- energy decay ----------------------------------------------------------

struct DecayReport {
    bool passed = true;
    std::optional<std::size_t> first_violation;
    double tolerance = 0.0;
    double max_increase = 0.0;  // max_j (E_j - min_{k<j} E_k)
};

/// Stored energy must not exceed its running minimum by more than `tolerance`.
inline DecayReport check_energy_decay(const EnergyLedger& ledger, double tolerance) {
    if (ledger.forced) throw DomainError("energy decay applies to unforced runs only (f must vanish)");
    if (!(tolerance >= 0.0)) throw DomainError("energy decay tolerance must be >= 0");
    DecayReport r;
    r.tolerance = tolerance;
    double running_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < ledger.rows.size(); ++j) {
        const double e = ledger.rows[j].stored();
        if (!std::isfinite(e)) {
            r.passed = false;
            if (!r.first_violation) r.first_violation = j;
            r.max_increase = std::numeric_limits<double>::infinity();
            continue;
        }
        if (j > 0) {
            const double inc = e - running_min;
            r.max_increase = std::max(r.max_increase, inc);
            if (inc > tolerance) {
                r.passed = false;
                if (!r.first_violation) r.first_violation = j;
            }
        }
        running_min = std::min(running_min, e);
    }
    return r;
}

/// Drift tolerance for a decay check: `safety` times the largest excursion
/// |E_j - E_0| of the elastic run with modulus G^eps(0) on the same data and
/// discretization. Leapfrog drift scales like C (dt^2 + h^2) E_0, so this
/// calibrates C for the discretization at hand.
inline double calibrate_decay_tolerance(const ProblemSpec& spec, double safety = 2.0) {
    if (!spec.f.is_zero()) throw DomainError("decay calibration applies to unforced runs only");
    const TranslatedKernel ke = translate(spec.kernel, spec.eps);
    const KernelSpec elastic = KernelSpec::constant(ke.initial_value());
    const TranslatedKernel ce(elastic, 0.0);
    const auto traj = integrate_integrodiff(ce, spec.grid, spec.dt, spec.steps(), spec.u0, spec.u1, spec.f);
    const auto ledger = energy_ledger(traj, ce, spec.f);
    const double e0 = ledger.rows.front().stored();
    double drift = 0.0;
    for (const auto& r : ledger.rows) drift = std::max(drift, std::abs(r.stored() - e0));
    return safety * drift;
}

// --- energy bound ----------------------------------------------------------

struct BoundReport {
    double gamma = 1.0;
    double data_constant = 0.0;  // 1/2 ||f||^2_{L2(Q)} + 1/2 ||u1||^2 + 1/2 G(eps) ||grad u0||^2
    double bound = 0.0;          // gamma e^T data_constant
    double max_ratio = 0.0;      // max_j LHS_j / bound (0 when both vanish)
    std::size_t violations = 0;
    std::optional<std::size_t> first_violation;
    std::vector<double> lhs;  // 1/2 ||grad u||^2 + 1/2 ||u_t||^2 per level

    bool passed() const noexcept { return violations == 0; }
};

/// gamma = max(1 / G(T + 1), 1).
inline double energy_bound_gamma(const KernelSpec& k, double T) { return std::max(1.0 / k.value(T + 1.0), 1.0); }

/// Checks 1/2 ||grad u||^2 + 1/2 ||u_t||^2 <= gamma e^T C at every level.
inline BoundReport check_energy_bound(const TrajectorySolution& u, const KernelSpec& k, double eps, const Forcing& f) {
    if (!(eps > 0.0)) throw DomainError("energy bound: eps must be > 0");
    if (eps > 1.0)
        throw DomainError("energy bound needs eps <= 1 so that G(t + eps) >= G(T + 1) on [0, T] (got eps=" +
                          detail::fmt(eps) + ")");
    const Grid& g = u.grid();
    const double T = u.final_time();
    BoundReport r;
    r.gamma = energy_bound_gamma(k, T);
    const auto u0 = u.level(0);
    const auto v1 = u.initial_velocity().values();
    r.data_constant = 0.5 * f.squared_norm(g, u.dt(), u.steps()) + 0.5 * inner(g, v1, v1) +
                      0.5 * k.value(eps) * gradient_energy(g, u0);
    r.bound = r.gamma * std::exp(T) * r.data_constant;

    std::vector<double> ut(g.size());
    r.lhs.resize(u.levels());
    for (std::size_t j = 0; j < u.levels(); ++j) {
        u.velocity(j, ut);
        const double lhs = 0.5 * gradient_energy(g, u.level(j)) + 0.5 * inner(g, ut, ut);
        r.lhs[j] = lhs;
        double ratio;
        if (r.bound > 0.0)
            ratio = lhs / r.bound;
        else
            ratio = lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        if (!std::isfinite(lhs)) ratio = std::numeric_limits<double>::infinity();
        r.max_ratio = std::max(r.max_ratio, ratio);
        if (!(ratio <= 1.0)) {
            ++r.violations;
            if (!r.first_violation) r.first_violation = j;
        }
    }
    return r;
}

// --- weak formulation ------------------------------------------------------

/// A smooth space-time test function with its analytic spatial Laplacian.
struct TestFunction {
    std::string name;
    std::function<double(const std::array<double, 3>&, double)> value;
    std::function<double(const std::array<double, 3>&, double)> laplacian;
    /// sup over Q of |lap v|.
    double laplacian_sup = 0.0;
};

enum class TimeProfile { Constant, Linear, Quadratic, HalfSine };

inline const char* to_string(TimeProfile p) {
    switch (p) {
        case TimeProfile::Constant: return "1";
        case TimeProfile::Linear: return "t/T";
        case TimeProfile::Quadratic: return "(t/T)^2";
        case TimeProfile::HalfSine: return "sin(pi t/T)";
    }
    return "?";
}

/// scale * prod_a sin(m_a pi x_a / L_a) * theta(t); theta is bounded by 1 on [0, T].
inline TestFunction sine_test_function(const Grid& g, std::array<int, 3> modes, TimeProfile p, double T,
                                       double scale = 1.0) {
    const int dim = g.dim();
    std::array<double, 3> k{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) k[a] = modes[a] * std::numbers::pi / g.extent(a);
    double lam = 0.0;
    for (int a = 0; a < dim; ++a) lam += k[a] * k[a];
    auto theta = [p, T](double t) {
        const double s = t / T;
        switch (p) {
            case TimeProfile::Constant: return 1.0;
            case TimeProfile::Linear: return s;
            case TimeProfile::Quadratic: return s * s;
            case TimeProfile::HalfSine: return std::sin(std::numbers::pi * s);
        }
        return 0.0;
    };
    auto space = [k, dim](const std::array<double, 3>& x) {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) v *= std::sin(k[a] * x[a]);
        return v;
    };
    TestFunction v;
    v.name = "sin(" + std::to_string(modes[0]);
    for (int a = 1; a < dim; ++a) v.name += "," + std::to_string(modes[a]);
    v.name += ")*" + std::string(to_string(p));
    if (scale != 1.0) v.name += "*" + detail::fmt(scale);
    v.value = [=](const std::array<double, 3>& x, double t) { return scale * space(x) * theta(t); };
    v.laplacian = [=](const std::array<double, 3>& x, double t) { return -lam * scale * space(x) * theta(t); };
    v.laplacian_sup = lam * std::abs(scale);
    return v;
}

/// Sine modes {1, 2} per axis (diagonal modes in 3D) times the four time profiles.
inline std::vector<TestFunction> standard_battery(const Grid& g, double T) {
    std::vector<std::array<int, 3>> modes = {{1, 1, 1}, {2, 1, 1}, {3, 1, 1}};
    if (g.dim() == 3) modes.push_back({1, 2, 1});
    std::vector<TestFunction> out;
    for (const auto& m : modes)
        for (auto p : {TimeProfile::Constant, TimeProfile::Linear, TimeProfile::Quadratic, TimeProfile::HalfSine})
            out.push_back(sine_test_function(g, m, p, T));
    return out;
}

/// Raises DomainError unless v vanishes on the boundary of the box for t in [0, T].
inline void check_vanishes_on_boundary(const TestFunction& v, const Grid& g, double T, std::size_t samples = 9) {
    double scale = 0.0;
    std::vector<std::array<double, 3>> interior;
    for (std::size_t p = 0; p < g.size(); p += std::max<std::size_t>(1, g.size() / 64)) interior.push_back(g.coordinates(p));
    for (std::size_t s = 0; s < samples; ++s) {
        const double t = T * static_cast<double>(s) / static_cast<double>(samples - 1);
        for (const auto& x : interior) scale = std::max(scale, std::abs(v.value(x, t)));
    }
    const double tol = 1e-10 * std::max(scale, 1.0);
    for (int a = 0; a < g.dim(); ++a)
        for (double face : {0.0, g.extent(a)})
            for (std::size_t s = 0; s < samples; ++s)
                for (std::size_t r = 0; r < samples; ++r) {
                    std::array<double, 3> x{0.0, 0.0, 0.0};
                    for (int b = 0; b < g.dim(); ++b)
                        x[b] = g.extent(b) * static_cast<double>(r + 1) / static_cast<double>(samples + 1);
                    x[a] = face;
                    const double t = T * static_cast<double>(s) / static_cast<double>(samples - 1);
                    const double val = v.value(x, t);
                    if (std::abs(val) > tol)
                        throw DomainError("test function '" + v.name + "' does not vanish on the boundary (value " +
                                          detail::fmt(val) + " at axis " + std::to_string(a) + " face " +
                                          detail::fmt(face) + ", t=" + detail::fmt(t) + ")");
                }
}

struct WeakResidual {
    std::string name;
    double discrete = 0.0;  // Laplacian applied to u (difference stencil)
    double analytic = 0.0;  // Laplacian moved onto v (closed form)
};

/// Residual of
///   int_Q v u = int_Q v [int_0^t K^eps(t - tau) lap u(tau) dtau + u1 t + u0 + int_0^t int_0^tau f]
/// for each test function, with midpoint quadrature in space and trapezoid in time.
template <MemoryKernel K>
std::vector<WeakResidual> weak_residual(const TrajectorySolution& u, const K& kernel, const Field& u0, const Field& u1,
                                        const Forcing& f, const std::vector<TestFunction>& battery) {
    const Grid& g = u.grid();
    if (!(u0.grid() == g) || !(u1.grid() == g)) throw DomainError("weak residual: data live on a different grid");
    const double T = u.final_time();
    for (const auto& v : battery) check_vanishes_on_boundary(v, g, T);

    const std::size_t N = g.size();
    const std::size_t L = u.levels();
    const ConvolutionWeights w = u.steps() ? integrated_weights(kernel, u.dt(), u.steps()) : ConvolutionWeights{};
    const auto F = f.double_time_integrals(g, u.dt(), u.steps());

    // conv_u[j] = sum_k c_jk u^k, conv_lap[j] = sum_k c_jk lap u^k, rest[j] = u^j - (u1 t + u0 + F)
    std::vector<double> lap(L * N), conv_u(L * N, 0.0), conv_lap(L * N, 0.0), rest(L * N);
    for (std::size_t j = 0; j < L; ++j) laplacian_into(g, u.level(j), std::span<double>(lap).subspan(j * N, N));
    for (std::size_t j = 1; j < L; ++j) {
        detail::accumulate_convolution(w, j, 0, u.data().subspan(0, (j + 1) * N), N,
                                       std::span<double>(conv_u).subspan(j * N, N));
        detail::accumulate_convolution(w, j, 0, std::span<const double>(lap).subspan(0, (j + 1) * N), N,
                                       std::span<double>(conv_lap).subspan(j * N, N));
    }
    for (std::size_t j = 0; j < L; ++j) {
        const double t = u.time(j);
        auto uj = u.level(j);
        auto Fj = F[j].values();
        for (std::size_t i = 0; i < N; ++i) rest[j * N + i] = uj[i] - (u1[i] * t + u0[i] + Fj[i]);
    }

    std::vector<std::array<double, 3>> x(N);
    for (std::size_t i = 0; i < N; ++i) x[i] = g.coordinates(i);
    const double vol = g.cell_volume();

    std::vector<WeakResidual> out;
    out.reserve(battery.size());
    for (const auto& v : battery) {
        WeakResidual r;
        r.name = v.name;
        for (std::size_t j = 0; j < L; ++j) {
            const double t = u.time(j);
            double sd = 0.0, sa = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                const double vv = v.value(x[i], t);
                const double base = vv * rest[j * N + i];
                sd += base - vv * conv_lap[j * N + i];
                sa += base - v.laplacian(x[i], t) * conv_u[j * N + i];
            }
            r.discrete += u.time_weight(j) * sd * vol;
            r.analytic += u.time_weight(j) * sa * vol;
        }
        out.push_back(r);
    }
    return out;
}

}  // namespace memvisco
