#pragma once

// The eps -> 0 study: a geometric sequence of regularized problems on one
// shared space-time grid and the L2(Q) Cauchy property of their solutions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <future>
#include <limits>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include "memvisco/diagnostics.hpp"
#include "memvisco/error.hpp"
#include "memvisco/kernel.hpp"
#include "memvisco/solver.hpp"
#include "memvisco/trajectory.hpp"

namespace memvisco {

struct EpsSchedule {
    double eps0 = 0.1;
    double ratio = 0.5;
    std::size_t count = 6;  // number of halvings; count + 1 problems

    std::vector<double> values() const {
        if (!(eps0 > 0.0)) throw InvalidSpec("eps sequence: eps0 must be > 0");
        if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidSpec("eps sequence: ratio must lie in (0,1)");
        std::vector<double> e(count + 1);
        for (std::size_t h = 0; h <= count; ++h) e[h] = eps0 * std::pow(ratio, static_cast<double>(h));
        return e;
    }
};

/// Time step that satisfies the CFL rule for every member of the sequence
/// (the smallest eps binds) and divides T.
inline double sequence_dt(const KernelSpec& k, const Grid& g, double T, const EpsSchedule& s, double cfl) {
    const auto e = s.values();
    return dt_for_cfl(g, translate(k, e.back()).initial_value(), cfl, T);
}

inline std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Solves the problem for every eps in the schedule on the base grid and dt.
/// Runs execute concurrently on at most `threads` workers; results are in schedule order.
inline std::vector<TrajectorySolution> run_eps_sequence(const ProblemSpec& base, const EpsSchedule& schedule,
                                                        std::size_t threads = 0) {
    const auto eps = schedule.values();
    if (base.formulation == Formulation::IntegroDifferential) {
        const double g_max = translate(base.kernel, eps.back()).initial_value();
        const double dmax = max_stable_dt(base.grid, g_max, base.options.cfl_limit);
        if (base.dt > dmax * (1.0 + 1e-12))
            throw SolverError("eps sequence: dt=" + detail::fmt(base.dt) + " violates the CFL rule at the smallest eps=" +
                              detail::fmt(eps.back()) + " (G^eps(0)=" + detail::fmt(g_max) + "); required dt <= " +
                              detail::fmt(dmax) + ", e.g. dt=" +
                              detail::fmt(dt_for_cfl(base.grid, g_max, base.options.cfl_limit, base.T)));
    }
    (void)base.steps();

    const std::size_t workers = std::min(resolve_threads(threads), eps.size());
    std::counting_semaphore<> slots(static_cast<std::ptrdiff_t>(workers));
    std::vector<std::future<TrajectorySolution>> jobs;
    jobs.reserve(eps.size());
    for (double e : eps) {
        jobs.push_back(std::async(std::launch::async, [&slots, &base, e] {
            slots.acquire();
            struct Release {
                std::counting_semaphore<>& s;
                ~Release() { s.release(); }
            } release{slots};
            ProblemSpec spec = base;
            spec.eps = e;
            return run(spec);
        }));
    }
    std::vector<TrajectorySolution> out;
    out.reserve(eps.size());
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

struct ConvergenceReport {
    std::vector<double> eps;
    std::vector<double> distances;       // d_h = ||u^{eps_h} - u^{eps_{h+1}}||, h = 0..H-1
    std::vector<double> tail_distances;  // ||u^{eps_h} - u^{eps_H}||, h = 0..H
    std::vector<double> kernel_sup;      // sup_s |K(s + eps_h) - K(s)| on the sample grid
    std::optional<double> rate;          // least-squares slope of log d_h against log eps_h
    double tolerance = 0.0;
    bool all_zero = false;
    bool monotone = false;
    std::optional<std::size_t> first_nonmonotone;  // first h with d_{h+1} >= d_h
    bool passed = false;
};

/// Least-squares slope of log y against log x over pairs with y > 0.
inline std::optional<double> fit_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        if (!(y[i] > 0.0) || !(x[i] > 0.0)) continue;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return std::nullopt;
    const double den = static_cast<double>(n) * sxx - sx * sx;
    if (den == 0.0) return std::nullopt;
    return (static_cast<double>(n) * sxy - sx * sy) / den;
}

/// Passes when every d_h vanishes, or when d_h is strictly decreasing with the
/// last distance below `tolerance`.
inline ConvergenceReport cauchy_report(const std::vector<TrajectorySolution>& trajs, const std::vector<double>& eps,
                                       double tolerance, const KernelSpec* kernel = nullptr,
                                       std::size_t sup_samples = 257) {
    if (trajs.size() < 3) throw DomainError("cauchy report needs at least 3 trajectories (got " + std::to_string(trajs.size()) + ")");
    if (eps.size() != trajs.size()) throw DomainError("cauchy report: eps list and trajectories differ in length");
    for (std::size_t h = 1; h < eps.size(); ++h)
        if (!(eps[h] < eps[h - 1])) throw DomainError("cauchy report: eps must be strictly decreasing");

    ConvergenceReport r;
    r.eps = eps;
    r.tolerance = tolerance;
    const std::size_t H = trajs.size() - 1;
    for (std::size_t h = 0; h < H; ++h) r.distances.push_back(l2_distance(trajs[h], trajs[h + 1]));
    for (std::size_t h = 0; h <= H; ++h) r.tail_distances.push_back(l2_distance(trajs[h], trajs[H]));

    if (kernel) {
        const double T = trajs.front().final_time();
        std::vector<double> s(sup_samples);
        for (std::size_t i = 0; i < sup_samples; ++i)
            s[i] = T * static_cast<double>(i) / static_cast<double>(sup_samples - 1);
        for (double e : eps) {
            const auto b = kernel_diff_bound(*kernel, e, s);
            r.kernel_sup.push_back(*std::max_element(b.begin(), b.end()));
        }
    }

    r.rate = fit_log_slope(std::vector<double>(eps.begin(), eps.begin() + static_cast<std::ptrdiff_t>(H)), r.distances);
    r.all_zero = std::all_of(r.distances.begin(), r.distances.end(), [](double d) { return d == 0.0; });
    r.monotone = true;
    for (std::size_t h = 0; h + 1 < H; ++h)
        if (!(r.distances[h + 1] < r.distances[h])) {
            r.monotone = false;
            r.first_nonmonotone = h + 1;
            break;
        }
    r.passed = r.all_zero || (r.monotone && r.distances.back() < tolerance);
    return r;
}

struct LemmaResidual {
    double eps = 0.0;
    std::string test_function;
    double residual = 0.0;
    double majorant = 0.0;

    bool within() const noexcept { return std::abs(residual) <= majorant; }
};

/// For each eps_h and test function v:
///   R = int_Q lap v * int_0^t [K^eps(s) - K(s)] u(t - s) ds
/// against the majorant M C |Omega| T sup_s (K(s + eps) - K(s)), where
/// M = sup |lap v|, C = sup_Q |u| T / 2 and the sup equals K(eps).
inline std::vector<LemmaResidual> convergence_lemma_check(const KernelSpec& k, const std::vector<double>& eps,
                                                          const std::vector<TestFunction>& battery,
                                                          const std::vector<TrajectorySolution>& trajs) {
    if (eps.size() != trajs.size()) throw DomainError("lemma check: eps list and trajectories differ in length");
    std::vector<LemmaResidual> out;
    const TranslatedKernel k0(k, 0.0);
    for (std::size_t h = 0; h < eps.size(); ++h) {
        const auto& u = trajs[h];
        const Grid& g = u.grid();
        const std::size_t N = g.size(), L = u.levels();
        const double T = u.final_time();
        for (const auto& v : battery) check_vanishes_on_boundary(v, g, T);

        const TranslatedKernel ke = translate(k, eps[h]);
        ConvolutionWeights w;
        if (u.steps()) {
            w = detail::build_weights(
                [&](double s0, double d) { return ke.integrated_moments(s0, d) - k0.integrated_moments(s0, d); },
                u.dt(), u.steps());
        }
        std::vector<double> conv(L * N, 0.0);
        for (std::size_t j = 1; j < L; ++j)
            detail::accumulate_convolution(w, j, 0, u.data().subspan(0, (j + 1) * N), N,
                                           std::span<double>(conv).subspan(j * N, N));

        const double U = sup_norm(u);
        const double S = k.integrated(eps[h]);
        for (const auto& v : battery) {
            double R = 0.0;
            for (std::size_t j = 0; j < L; ++j) {
                const double t = u.time(j);
                double s = 0.0;
                for (std::size_t i = 0; i < N; ++i) s += v.laplacian(g.coordinates(i), t) * conv[j * N + i];
                R += u.time_weight(j) * s * g.cell_volume();
            }
            LemmaResidual lr;
            lr.eps = eps[h];
            lr.test_function = v.name;
            lr.residual = R;
            lr.majorant = v.laplacian_sup * (U * T / 2.0) * g.measure() * T * S;
            out.push_back(lr);
        }
    }
    return out;
}

}  // namespace memvisco
