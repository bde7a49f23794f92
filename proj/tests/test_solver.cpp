#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <numbers>

#include "memvisco/solver.hpp"

using namespace memvisco;

namespace {

const KernelSpec kProny = KernelSpec::prony(0.5, {{0.5, 0.3}, {1.0, 2.0}});
const KernelSpec kPow = KernelSpec::power_law(1.0, 0.5);
constexpr double pi = std::numbers::pi;

ProblemSpec standing(const KernelSpec& k, double eps, std::size_t n, double cfl, double T = 1.0) {
    const auto g = Grid::line(n);
    const double dt = dt_for_cfl(g, translate(k, eps).initial_value(), cfl, T);
    return ProblemSpec(k, eps, g, T, dt, sin_pi_product(g), Field(g));
}

TrajectorySolution exact_manufactured(const TrajectorySolution& like) {
    TrajectorySolution ex(like.grid(), like.dt(), like.steps(), like.initial_velocity());
    for (std::size_t j = 0; j < ex.levels(); ++j) {
        const Field f = manufactured_solution(like.grid(), ex.time(j));
        std::copy(f.values().begin(), f.values().end(), ex.level(j).begin());
    }
    return ex;
}

}  // namespace

TEST(Weights, TelescopeToKernelIncrement) {
    for (const auto& k : {kProny, kPow}) {
        const auto ke = translate(k, 0.05);
        const double dt = 0.01;
        const auto w = derivative_weights(ke, dt, 50);
        for (std::size_t j : {1u, 7u, 50u}) {
            double s = 0.0;
            for (std::size_t m = 0; m <= j; ++m) s += w.coefficient(j, m);
            const double expect = k.value(0.05 + dt * j) - k.value(0.05);
            EXPECT_NEAR(s, expect, 1e-13 * std::abs(expect)) << k.describe();
            EXPECT_LT(s, 0.0);
        }
    }
}

TEST(Weights, ConstantKernelMemoryWeightsVanishExactly) {
    const auto w = derivative_weights(translate(KernelSpec::constant(2.0), 0.1), 0.01, 20);
    for (std::size_t a = 0; a < 20; ++a) {
        EXPECT_EQ(w.near[a], 0.0);
        EXPECT_EQ(w.far[a], 0.0);
    }
}

TEST(Weights, ProductRuleIsExactForLinearHistories) {
    // int_0^t G'(eps + t - tau) (a + b tau) dtau by tanh-sinh against the weights.
    const auto ke = translate(kPow, 0.02);
    const double dt = 0.02;
    const std::size_t j = 25;
    const double t = dt * j;
    const auto w = derivative_weights(ke, dt, j);
    double approx = 0.0;
    for (std::size_t k = 0; k <= j; ++k) approx += w.coefficient(j, k) * (1.0 + 3.0 * dt * k);
    boost::math::quadrature::tanh_sinh<double> ts;
    const double ref = ts.integrate([&](double tau) { return ke.derivative(t - tau) * (1.0 + 3.0 * tau); }, 0.0, t);
    EXPECT_NEAR(approx, ref, 1e-11 * std::abs(ref));
}

TEST(IntegroDifferential, ZeroDataGivesZero) {
    for (const auto& k : {kProny, kPow}) {
        const auto g = Grid::line(21);
        ProblemSpec s(k, 0.05, g, 0.5, 0.005, Field(g), Field(g));
        const auto u = run(s);
        EXPECT_EQ(max_abs(u.data()), 0.0);
        s.formulation = Formulation::IntegralVolterra;
        EXPECT_EQ(max_abs(run(s).data()), 0.0);
    }
}

TEST(IntegroDifferential, ElasticReductionIsPlainLeapfrog) {
    const auto g = Grid::line(51);
    const double dt = 0.01;
    const Field u0 = sin_pi_product(g, 1.0, {2, 1, 1});
    Field u1(g);
    for (std::size_t i = 0; i < g.size(); ++i) u1[i] = 0.3 * u0[i];
    ProblemSpec s(KernelSpec::constant(1.7), 0.05, g, 1.0, dt, u0, u1);
    const auto u = run(s);

    // Independent leapfrog for u_tt = 1.7 lap u.
    std::vector<double> prev(u0.values().begin(), u0.values().end()), cur(g.size()), next(g.size()), lap(g.size());
    laplacian_into(g, prev, lap);
    for (std::size_t i = 0; i < g.size(); ++i) cur[i] = u0[i] + dt * u1[i] + 0.5 * dt * dt * (1.7 * lap[i] + 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) ASSERT_EQ(u.level(1)[i], cur[i]);
    for (std::size_t j = 1; j < u.steps(); ++j) {
        laplacian_into(g, cur, lap);
        for (std::size_t i = 0; i < g.size(); ++i) next[i] = 2.0 * cur[i] - prev[i] + dt * dt * (1.7 * lap[i] + 0.0 + 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) ASSERT_EQ(u.level(j + 1)[i], next[i]) << "level " << j + 1;
        std::swap(prev, cur);
        std::swap(cur, next);
    }
}

TEST(IntegroDifferential, StandingWaveSecondOrder) {
    double prev = 0.0;
    for (std::size_t n : {49u, 99u, 199u}) {
        const auto s = standing(KernelSpec::constant(1.0), 0.05, n, 0.5);
        const auto u = run(s);
        double err = 0.0;
        for (std::size_t j = 0; j < u.levels(); ++j)
            for (std::size_t i = 0; i < n; ++i)
                err = std::max(err, std::abs(u.level(j)[i] - std::sin(pi * s.grid.coordinates(i)[0]) * std::cos(pi * u.time(j))));
        if (prev > 0.0) { EXPECT_GT(prev / err, 3.5); }
        prev = err;
    }
    EXPECT_LT(prev, 5e-3);
}

TEST(IntegroDifferential, StartupMatchesTaylorRule) {
    const auto s = standing(kProny, 0.05, 31, 0.5);
    const auto u = run(s);
    const Field l = laplacian(s.grid, s.u0);
    const double g0 = kProny.value(0.05);
    for (std::size_t i = 0; i < 31; ++i)
        EXPECT_NEAR(u.level(1)[i], s.u0[i] + 0.5 * s.dt * s.dt * g0 * l[i], 1e-15);
    for (std::size_t i = 0; i < 31; ++i) EXPECT_EQ(u.level(0)[i], s.u0[i]);
}

TEST(Manufactured, ForcingMatchesQuadratureOracle) {
    // phi(t) = 2 + lambda [G(eps) (1+t^2) + int_0^t G'(eps + t - tau)(1 + tau^2) dtau]
    boost::math::quadrature::tanh_sinh<double> ts;
    const auto g = Grid::line(9);
    const double lam = pi * pi;
    for (const auto& k : {kProny, kPow}) {
        const double eps = 0.05;
        const Forcing f = manufactured_forcing(k, eps, g);
        const Field S = sin_pi_product(g);
        for (double t : {0.0, 0.1, 0.55, 1.0}) {
            double mem = 0.0;
            if (t > 0.0)
                mem = ts.integrate([&](double tau) { return k.derivative(eps + t - tau) * (1.0 + tau * tau); }, 0.0, t, 1e-14);
            const double phi = 2.0 + lam * (k.value(eps) * (1.0 + t * t) + mem);
            const Field ft = f.at(g, t);
            EXPECT_NEAR(ft[4], phi * S[4], 1e-10 * std::abs(phi)) << k.describe() << " t=" << t;
        }
    }
}

TEST(Manufactured, SecondOrderConvergenceBothForms) {
    for (auto form : {Formulation::IntegroDifferential, Formulation::IntegralVolterra}) {
        std::vector<double> errs;
        for (std::size_t n : {19u, 39u, 79u}) {
            const auto g = Grid::line(n);
            const double dt = dt_for_cfl(g, kProny.value(0.05), 0.5, 1.0);
            ProblemSpec s(kProny, 0.05, g, 1.0, dt, sin_pi_product(g), Field(g), manufactured_forcing(kProny, 0.05, g), form);
            const auto u = run(s);
            errs.push_back(l2_distance(u, exact_manufactured(u)));
        }
        for (std::size_t i = 1; i < errs.size(); ++i) EXPECT_GE(std::log2(errs[i - 1] / errs[i]), 1.8) << to_string(form);
    }
}

TEST(CrossFormulation, DistanceIsSecondOrderInDt) {
    for (const auto& k : {kProny, kPow}) {
        const auto g = Grid::line(39);
        double prev = 0.0;
        for (double dt : {0.01, 0.005, 0.0025}) {
            ProblemSpec a(k, 0.05, g, 0.5, dt, sin_pi_product(g), Field(g));
            ProblemSpec b = a;
            b.formulation = Formulation::IntegralVolterra;
            const double d = l2_distance(run(a), run(b));
            if (prev > 0.0) { EXPECT_GE(prev / d, 3.2) << k.describe(); }
            prev = d;
        }
    }
}

TEST(Linearity, ResponseIsLinearInForcing) {
    const auto g = Grid::line(25);
    const Forcing f1 = Forcing::separable(sin_pi_product(g), [](double t) { return std::cos(3 * t); }, "a");
    const Forcing f2 = Forcing::separable(bump(g, 1.0, 0.2), [](double t) { return 1.0 + t; }, "b");
    for (auto form : {Formulation::IntegroDifferential, Formulation::IntegralVolterra}) {
        auto solve = [&](const Forcing& f) {
            ProblemSpec s(kProny, 0.05, g, 0.5, 0.005, Field(g), Field(g), f, form);
            return run(s);
        };
        const auto u1 = solve(f1), u2 = solve(f2), u12 = solve(f1.scaled(2.0) + f2.scaled(-0.5));
        double err = 0.0, scale = 0.0;
        for (std::size_t p = 0; p < u12.data().size(); ++p) {
            err = std::max(err, std::abs(u12.data()[p] - (2.0 * u1.data()[p] - 0.5 * u2.data()[p])));
            scale = std::max(scale, std::abs(u12.data()[p]));
        }
        EXPECT_LT(err, 1e-11 * scale) << to_string(form);
    }
}

TEST(Volterra, DoubleIntegralOfUnitForcing) {
    const auto g = Grid::line(9);
    Field one(g);
    for (std::size_t i = 0; i < g.size(); ++i) one[i] = 1.0;
    ProblemSpec s(KernelSpec::constant(1e-14), 0.0, g, 1.0, 0.01, Field(g), Field(g),
                  Forcing::separable(one, [](double) { return 1.0; }, "one"), Formulation::IntegralVolterra);
    const auto u = run(s);
    for (std::size_t j = 0; j < u.levels(); ++j) EXPECT_NEAR(u.level(j)[4], 0.5 * u.time(j) * u.time(j), 1e-12);
}

TEST(Volterra, AcceptsUnregularizedSingularKernel) {
    const auto g = Grid::line(19);
    ProblemSpec s(kPow, 0.0, g, 0.3, 0.005, sin_pi_product(g), Field(g), {}, Formulation::IntegralVolterra);
    const auto u = run(s);
    EXPECT_TRUE(std::isfinite(sup_norm(u)));
    EXPECT_LE(sup_norm(u), 1.0 + 1e-12);
}

TEST(Volterra, FixedPointDivergenceAborts) {
    const auto g = Grid::line(49);
    const auto k = translate(kProny, 0.05);
    try {
        integrate_volterra(k, g, 0.5, 4, sin_pi_product(g), Field(g), Forcing{});
        FAIL() << "expected divergence";
    } catch (const SolverError& e) {
        ASSERT_TRUE(e.step().has_value());
        EXPECT_EQ(*e.step(), 1u);
    }
}

TEST(Guards, CflViolationIsRefusedWithRequiredDt) {
    const auto g = Grid::line(99);
    ProblemSpec s(kProny, 0.05, g, 0.5, 0.05, sin_pi_product(g), Field(g));
    try {
        run(s);
        FAIL() << "expected refusal";
    } catch (const SolverError& e) {
        EXPECT_NE(std::string(e.what()).find("required dt"), std::string::npos);
    }
    s.options.cfl_limit = 1.5;
    EXPECT_THROW(run(s), InvalidSpec);
}

TEST(Guards, BlowUpReportsStepIndex) {
    const auto g = Grid::line(49);
    const auto k = translate(kProny, 0.05);
    try {
        integrate_integrodiff(k, g, 0.2, 2000, sin_pi_product(g), Field(g), Forcing{});
        FAIL() << "expected blow-up";
    } catch (const SolverError& e) {
        ASSERT_TRUE(e.step().has_value());
        EXPECT_GT(*e.step(), 1u);
        EXPECT_NE(std::string(e.what()).find(std::to_string(*e.step())), std::string::npos);
    }
}

TEST(Guards, NonIntegralStepCountAndEpsRules) {
    const auto g = Grid::line(9);
    ProblemSpec s(kProny, 0.05, g, 1.0, 0.3, Field(g), Field(g));
    EXPECT_THROW(s.steps(), InvalidSpec);
    ProblemSpec z(kPow, 0.0, g, 1.0, 0.01, Field(g), Field(g));
    EXPECT_THROW(run(z), DomainError);
}

TEST(Guards, HistoryLengthMismatchIsInternalError) {
    const auto g = Grid::line(5);
    const auto w = derivative_weights(translate(kProny, 0.1), 0.01, 10);
    std::vector<double> hist(3 * 5), a(5), b(5), f(5), out(5);
    EXPECT_THROW(step_integrodiff(g, 1.0, w, 0.01, 3, hist, a, b, f, out), SolverError);
}

TEST(MemoryWindow, FullWindowReproducesFullHistory) {
    auto s = standing(kProny, 0.05, 29, 0.5, 0.5);
    const auto full = run(s);
    s.options.memory_window = full.steps() + 5;
    EXPECT_EQ(l2_distance(full, run(s)), 0.0);
    s.options.memory_window = 3;
    const auto cut = run(s);
    EXPECT_GT(l2_distance(full, cut), 0.0);
    EXPECT_TRUE(std::isfinite(sup_norm(cut)));
}

TEST(ProblemSpecHash, StableAndSensitive) {
    const auto a = standing(kProny, 0.05, 29, 0.5);
    auto b = a;
    EXPECT_EQ(a.hash(), b.hash());
    b.eps = 0.06;
    EXPECT_NE(a.hash(), b.hash());
    EXPECT_EQ(run(a).spec_hash(), a.hash());
}

TEST(Cfl, StableDtDividesHorizon) {
    const auto g = Grid::line(99);
    const double dt = dt_for_cfl(g, 4.0, 0.5, 1.0);
    EXPECT_LE(dt, max_stable_dt(g, 4.0, 0.5));
    const double r = 1.0 / dt;
    EXPECT_NEAR(r, std::round(r), 1e-9);
    EXPECT_LE(courant_number(g, 4.0, dt), 0.5 + 1e-12);
}
