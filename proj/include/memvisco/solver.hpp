#pragma once

// Time integration of the regularized problem in two equivalent forms:
//
//   integro-differential  u_tt = G^eps(0) lap u + int_0^t G^eps'(t - tau) lap u(tau) dtau + f
//   integral (Volterra)   u(t) = int_0^t K^eps(t - tau) lap u(tau) dtau + u1 t + u0 + int_0^t int_0^tau f
//
// Both convolutions use product quadrature: the kernel is integrated in closed
// form against the piecewise-linear interpolant of the history.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memvisco/error.hpp"
#include "memvisco/forcing.hpp"
#include "memvisco/grid.hpp"
#include "memvisco/kernel.hpp"
#include "memvisco/trajectory.hpp"

namespace memvisco {

enum class Formulation { IntegroDifferential, IntegralVolterra };

inline const char* to_string(Formulation f) {
    return f == Formulation::IntegroDifferential ? "integro_differential" : "integral_volterra";
}

struct SolverOptions {
    double cfl_limit = 1.0;
    /// Number of most recent history intervals kept in the convolution; 0 keeps all.
    std::size_t memory_window = 0;
    double fixed_point_tolerance = 1e-13;
    std::size_t fixed_point_max_iterations = 200;
};

/// Interval weights of a convolution int_0^{t_j} k(t_j - tau) w(tau) dtau with w
/// piecewise linear: interval a covers s = t_j - tau in [a dt, (a+1) dt], `near[a]`
/// multiplies w at tau = t_{j-a}, `far[a]` multiplies w at tau = t_{j-a-1}.
struct ConvolutionWeights {
    std::vector<double> near;
    std::vector<double> far;

    std::size_t intervals() const noexcept { return near.size(); }

    /// Combined weight of node k at level j (k <= j), honoring a window of `window` intervals.
    double coefficient(std::size_t j, std::size_t k, std::size_t window = 0) const noexcept {
        const std::size_t A = (window == 0) ? j : std::min(j, window);
        double c = 0.0;
        const std::size_t m = j - k;  // interval whose near end is k
        if (m < A) c += near[m];
        if (m >= 1 && m - 1 < A) c += far[m - 1];
        return c;
    }
};

namespace detail {

template <class MomentFn>
ConvolutionWeights build_weights(MomentFn&& moments, double dt, std::size_t intervals) {
    ConvolutionWeights w;
    w.near.resize(intervals);
    w.far.resize(intervals);
    for (std::size_t a = 0; a < intervals; ++a) {
        const LinearMoments m = moments(static_cast<double>(a) * dt, dt);
        w.near[a] = m.near();
        w.far[a] = m.far();
    }
    return w;
}

// out += sum_{k} c_{j,k} hist_k, hist stored level-major.
inline void accumulate_convolution(const ConvolutionWeights& w, std::size_t j, std::size_t window,
                                   std::span<const double> hist, std::size_t N, std::span<double> out,
                                   bool include_self = true) {
    const std::size_t A = (window == 0) ? j : std::min(j, window);
    const std::size_t k_lo = j - A;
    for (std::size_t k = k_lo; k <= j; ++k) {
        if (k == j && !include_self) continue;
        const double c = w.coefficient(j, k, window);
        if (c == 0.0) continue;
        const double* h = hist.data() + k * N;
        for (std::size_t i = 0; i < N; ++i) out[i] += c * h[i];
    }
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace detail

/// Product-quadrature weights of G' (memory term of the integro-differential form).
template <MemoryKernel K>
ConvolutionWeights derivative_weights(const K& k, double dt, std::size_t intervals) {
    return detail::build_weights([&](double s0, double d) { return k.derivative_moments(s0, d); }, dt, intervals);
}

template <MemoryKernel K>
ConvolutionWeights second_derivative_weights(const K& k, double dt, std::size_t intervals) {
    return detail::build_weights([&](double s0, double d) { return k.second_derivative_moments(s0, d); }, dt, intervals);
}

/// Product-quadrature weights of K (Volterra form).
template <MemoryKernel K>
ConvolutionWeights integrated_weights(const K& k, double dt, std::size_t intervals) {
    return detail::build_weights([&](double s0, double d) { return k.integrated_moments(s0, d); }, dt, intervals);
}

/// Largest stable-by-rule step: cfl * h_min / sqrt(dim * G^eps(0)).
inline double max_stable_dt(const Grid& g, double instantaneous_modulus, double cfl) {
    return cfl * g.min_spacing() / std::sqrt(static_cast<double>(g.dim()) * instantaneous_modulus);
}

/// Courant number of a step for a given instantaneous modulus.
inline double courant_number(const Grid& g, double instantaneous_modulus, double dt) {
    return dt * std::sqrt(static_cast<double>(g.dim()) * instantaneous_modulus) / g.min_spacing();
}

/// dt = T / ceil(T / dt_max), so that T / dt is integral.
inline double dt_for_cfl(const Grid& g, double instantaneous_modulus, double cfl, double T) {
    const double dmax = max_stable_dt(g, instantaneous_modulus, cfl);
    const double n = std::ceil(T / dmax - 1e-12);
    return T / std::max(1.0, n);
}

struct ProblemSpec {
    KernelSpec kernel;
    double eps = 0.0;
    Grid grid;
    double T = 1.0;
    double dt = 0.0;
    Field u0;
    Field u1;
    Forcing f;
    Formulation formulation = Formulation::IntegroDifferential;
    SolverOptions options{};

    ProblemSpec(KernelSpec k, double eps_, Grid g, double T_, double dt_, Field u0_, Field u1_, Forcing f_ = {},
                Formulation form = Formulation::IntegroDifferential)
        : kernel(std::move(k)),
          eps(eps_),
          grid(std::move(g)),
          T(T_),
          dt(dt_),
          u0(std::move(u0_)),
          u1(std::move(u1_)),
          f(std::move(f_)),
          formulation(form) {}

    std::size_t steps() const {
        if (!(dt > 0.0) || !(T > 0.0)) throw InvalidSpec("problem: T and dt must be > 0");
        const double r = T / dt;
        const double n = std::round(r);
        if (std::abs(r - n) > 1e-9 * std::max(1.0, r))
            throw InvalidSpec("problem: T/dt must be an integer (T=" + detail::fmt(T) + ", dt=" + detail::fmt(dt) + ")");
        return static_cast<std::size_t>(n);
    }

    std::string describe() const {
        return kernel.describe() + "|eps=" + detail::fmt(eps) + "|" + grid.describe() + "|T=" + detail::fmt(T) +
               "|dt=" + detail::fmt(dt) + "|f=" + f.describe() + "|" + to_string(formulation) +
               "|window=" + std::to_string(options.memory_window);
    }

    std::string hash() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(detail::fnv1a(describe())));
        return buf;
    }
};

/// One leapfrog step:
///   u^{j+1} = 2u^j - u^{j-1} + dt^2 [G^eps(0) lap u^j + Q^j + f^j],
/// Q^j = sum_k c_{j,k} lap u^k from the G' product weights.
/// `lap_history` holds lap u^0..lap u^j level-major.
inline void step_integrodiff(const Grid& g, double g_instant, const ConvolutionWeights& weights, double dt,
                             std::size_t j, std::span<const double> lap_history, std::span<const double> u_prev,
                             std::span<const double> u_curr, std::span<const double> f_j, std::span<double> u_next,
                             std::size_t window = 0) {
    const std::size_t N = g.size();
    if (lap_history.size() != (j + 1) * N)
        throw SolverError("internal: memory history holds " + std::to_string(lap_history.size() / std::max<std::size_t>(N, 1)) +
                              " levels, expected " + std::to_string(j + 1),
                          j);
    if (j > weights.intervals()) throw SolverError("internal: convolution weights too short", j);
    std::vector<double> rhs(N, 0.0);
    if (j > 0) detail::accumulate_convolution(weights, j, window, lap_history, N, rhs);
    const double* lap_j = lap_history.data() + j * N;
    const double dt2 = dt * dt;
    for (std::size_t i = 0; i < N; ++i)
        u_next[i] = 2.0 * u_curr[i] - u_prev[i] + dt2 * (g_instant * lap_j[i] + rhs[i] + f_j[i]);
}

/// Integro-differential march for any kernel model (no CFL policy applied).
template <MemoryKernel K>
TrajectorySolution integrate_integrodiff(const K& kernel, const Grid& g, double dt, std::size_t steps, const Field& u0,
                                         const Field& u1, const Forcing& f, std::size_t window = 0,
                                         std::string hash = {}) {
    if (!(u0.grid() == g) || !(u1.grid() == g)) throw DomainError("initial data live on a different grid");
    const std::size_t N = g.size();
    TrajectorySolution traj(g, dt, steps, u1, std::move(hash));
    const double g0 = kernel.value(0.0);
    const ConvolutionWeights w = derivative_weights(kernel, dt, steps);

    std::vector<double> lap((steps + 1) * N, 0.0);
    std::vector<double> fj(N);
    auto lap_level = [&](std::size_t j) { return std::span<double>(lap).subspan(j * N, N); };

    std::copy(u0.values().begin(), u0.values().end(), traj.level(0).begin());
    laplacian_into(g, traj.level(0), lap_level(0));
    if (steps == 0) return traj;

    // Taylor start: u^1 = u0 + dt u1 + dt^2/2 (G(eps) lap u0 + f(0)).
    f.evaluate(0.0, fj);
    {
        auto out = traj.level(1);
        auto l0 = lap_level(0);
        for (std::size_t i = 0; i < N; ++i)
            out[i] = u0[i] + dt * u1[i] + 0.5 * dt * dt * (g0 * l0[i] + fj[i]);
    }
    for (std::size_t j = 1; j < steps; ++j) {
        laplacian_into(g, traj.level(j), lap_level(j));
        f.evaluate(traj.time(j), fj);
        auto hist = std::span<const double>(lap).subspan(0, (j + 1) * N);
        step_integrodiff(g, g0, w, dt, j, hist, traj.level(j - 1), traj.level(j), fj, traj.level(j + 1), window);
        for (double v : traj.level(j + 1))
            if (!std::isfinite(v))
                throw SolverError("integro-differential march produced a non-finite value at step " + std::to_string(j + 1),
                                  j + 1);
    }
    return traj;
}

/// Volterra march for any kernel model. The self weight c_{j,j} makes each
/// level implicit in lap u^j; it is resolved by fixed-point iteration started
/// from the previous level.
template <MemoryKernel K>
TrajectorySolution integrate_volterra(const K& kernel, const Grid& g, double dt, std::size_t steps, const Field& u0,
                                      const Field& u1, const Forcing& f, const SolverOptions& opt = {},
                                      std::string hash = {}) {
    if (!(u0.grid() == g) || !(u1.grid() == g)) throw DomainError("initial data live on a different grid");
    const std::size_t N = g.size();
    TrajectorySolution traj(g, dt, steps, u1, std::move(hash));
    const ConvolutionWeights w = integrated_weights(kernel, dt, steps);
    const auto F = f.double_time_integrals(g, dt, steps);

    std::vector<double> lap((steps + 1) * N, 0.0);
    auto lap_level = [&](std::size_t j) { return std::span<double>(lap).subspan(j * N, N); };
    std::copy(u0.values().begin(), u0.values().end(), traj.level(0).begin());
    laplacian_into(g, traj.level(0), lap_level(0));

    std::vector<double> rhs(N), x(N), lx(N), next(N);
    for (std::size_t j = 1; j <= steps; ++j) {
        const double tj = traj.time(j);
        auto Fj = F[j].values();
        for (std::size_t i = 0; i < N; ++i) rhs[i] = u0[i] + tj * u1[i] + Fj[i];
        detail::accumulate_convolution(w, j, opt.memory_window, std::span<const double>(lap).subspan(0, (j + 1) * N), N,
                                       rhs, /*include_self=*/false);
        const double self = w.coefficient(j, j, opt.memory_window);

        auto prev = traj.level(j - 1);
        std::copy(prev.begin(), prev.end(), x.begin());
        double last_change = std::numeric_limits<double>::infinity();
        bool converged = false;
        for (std::size_t it = 0; it < opt.fixed_point_max_iterations; ++it) {
            laplacian_into(g, x, lx);
            double change = 0.0, scale = 1.0;
            for (std::size_t i = 0; i < N; ++i) {
                next[i] = rhs[i] + self * lx[i];
                change = std::max(change, std::abs(next[i] - x[i]));
                scale = std::max(scale, std::abs(next[i]));
            }
            std::swap(x, next);
            if (!std::isfinite(change))
                throw SolverError("Volterra fixed point produced a non-finite value at step " + std::to_string(j), j);
            if (change <= opt.fixed_point_tolerance * scale) {
                converged = true;
                break;
            }
            if (it >= 2 && change > 2.0 * last_change)
                throw SolverError("Volterra fixed-point correction diverges at step " + std::to_string(j) +
                                      " (increment grew from " + detail::fmt(last_change) + " to " + detail::fmt(change) +
                                      "; self weight " + detail::fmt(self) + "); reduce dt",
                                  j);
            last_change = change;
        }
        if (!converged)
            throw SolverError("Volterra fixed point did not converge at step " + std::to_string(j), j);
        std::copy(x.begin(), x.end(), traj.level(j).begin());
        laplacian_into(g, traj.level(j), lap_level(j));
    }
    return traj;
}

/// Refuses steps that violate dt <= cfl_limit * h / sqrt(dim G^eps(0)).
inline void check_cfl(const Grid& g, double instantaneous_modulus, double dt, double cfl_limit) {
    const double dmax = max_stable_dt(g, instantaneous_modulus, cfl_limit);
    if (dt > dmax * (1.0 + 1e-12))
        throw SolverError("CFL violation: dt=" + detail::fmt(dt) + " exceeds the stable limit " + detail::fmt(dmax) +
                          " (Courant number " + detail::fmt(courant_number(g, instantaneous_modulus, dt)) +
                          " > " + detail::fmt(cfl_limit) + " for G^eps(0)=" + detail::fmt(instantaneous_modulus) +
                          "); required dt <= " + detail::fmt(dmax));
}

inline TrajectorySolution run_integrodiff(const ProblemSpec& spec) {
    if (spec.formulation != Formulation::IntegroDifferential)
        throw InvalidSpec("run_integrodiff: problem is not in integro-differential form");
    if (!(spec.options.cfl_limit > 0.0 && spec.options.cfl_limit <= 1.0))
        throw InvalidSpec("run_integrodiff: CFL limit must lie in (0, 1]");
    const TranslatedKernel k = translate(spec.kernel, spec.eps);
    const std::size_t steps = spec.steps();
    check_cfl(spec.grid, k.initial_value(), spec.dt, spec.options.cfl_limit);
    return integrate_integrodiff(k, spec.grid, spec.dt, steps, spec.u0, spec.u1, spec.f, spec.options.memory_window,
                                 spec.hash());
}

inline TrajectorySolution run_integral_volterra(const ProblemSpec& spec) {
    if (spec.formulation != Formulation::IntegralVolterra)
        throw InvalidSpec("run_integral_volterra: problem is not in integral form");
    const TranslatedKernel k(spec.kernel, spec.eps);  // eps = 0 allowed: K(0) = 0 regardless of G(0)
    return integrate_volterra(k, spec.grid, spec.dt, spec.steps(), spec.u0, spec.u1, spec.f, spec.options, spec.hash());
}

inline TrajectorySolution run(const ProblemSpec& spec) {
    return spec.formulation == Formulation::IntegroDifferential ? run_integrodiff(spec) : run_integral_volterra(spec);
}

/// Forcing that makes u*(x, t) = S(x)(1 + t^2) an exact solution, S the unit
/// sine product. Uses G^eps(0) p(t) + int_0^t G^eps'(t - tau) p(tau) dtau
/// = G^eps(t) + 2 int_0^t K^eps for p = 1 + t^2.
inline Forcing manufactured_forcing(const KernelSpec& k, double eps, const Grid& g) {
    const TranslatedKernel ke = translate(k, eps);
    const double lambda = sine_eigenvalue(g);
    const double k_eps = k.integrated(eps);
    const double k2_eps = k.integrated_twice(eps);
    auto phi = [ke, k, eps, lambda, k_eps, k2_eps](double t) {
        const double int_k = k.integrated_twice(eps + t) - k2_eps - t * k_eps;
        return 2.0 + lambda * (ke.value(t) + 2.0 * int_k);
    };
    return Forcing::separable(sin_pi_product(g), phi, "manufactured(sin*(1+t^2))");
}

inline Field manufactured_solution(const Grid& g, double t) { return sin_pi_product(g, 1.0 + t * t); }

}  // namespace memvisco
