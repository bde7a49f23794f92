#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <random>

#include "memvisco/kernel.hpp"

using namespace memvisco;

namespace {

const KernelSpec kExp = KernelSpec::prony(0.0, {{1.0, 1.0}});
const KernelSpec kPow = KernelSpec::power_law(1.0, 0.5);

double quad(auto f, double a, double b) {
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate(f, a, b, 1e-14);
}

std::vector<KernelSpec> random_kernels(unsigned seed, int count) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> w(0.05, 2.0), tau(0.05, 5.0), a(0.1, 0.9), u(0.0, 1.0);
    std::vector<KernelSpec> out;
    for (int i = 0; i < count; ++i) {
        std::vector<PronyTerm> terms;
        const int m = 1 + i % 3;
        for (int k = 0; k < m; ++k) terms.push_back({w(rng), tau(rng)});
        const double g_inf = u(rng) < 0.3 ? 0.0 : w(rng);
        KernelSpec p = KernelSpec::prony(g_inf, terms);
        if (i % 3 == 2)
            out.push_back(KernelSpec::sum({p, KernelSpec::power_law(w(rng), a(rng))}));
        else if (i % 3 == 1)
            out.push_back(KernelSpec::power_law(w(rng), a(rng)));
        else
            out.push_back(p);
    }
    return out;
}

}  // namespace

TEST(KernelValue, ClosedFormExamples) {
    EXPECT_DOUBLE_EQ(kExp.value(0.0), 1.0);
    EXPECT_DOUBLE_EQ(kPow.value(4.0), 0.5);
    const auto k = KernelSpec::prony(0.5, {{0.5, 2.0}});
    EXPECT_NEAR(k.value(1e3), 0.5, 1e-15);
    EXPECT_DOUBLE_EQ(k.equilibrium_modulus(), 0.5);
}

TEST(KernelValue, Derivatives) {
    EXPECT_DOUBLE_EQ(kExp.derivative(0.0), -1.0);
    EXPECT_DOUBLE_EQ(kPow.derivative(1.0), -0.5);
    EXPECT_DOUBLE_EQ(kPow.second_derivative(1.0), 0.75);
    const auto c = KernelSpec::constant(2.0);
    EXPECT_EQ(c.derivative(3.0), 0.0);
    EXPECT_EQ(c.second_derivative(3.0), 0.0);
    EXPECT_EQ(c.value(7.0), 2.0);
}

TEST(KernelValue, DomainErrors) {
    EXPECT_THROW(kPow.value(0.0), DomainError);
    EXPECT_THROW(kPow.derivative(0.0), DomainError);
    EXPECT_THROW(kExp.value(-1.0), DomainError);
    EXPECT_THROW(kExp.integrated(-0.1), DomainError);
    try {
        kPow.value(0.0);
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("powerlaw"), std::string::npos);
    }
}

TEST(KernelConstruction, RejectsInvalidFamilies) {
    EXPECT_THROW(KernelSpec::constant(0.0), InvalidSpec);
    EXPECT_THROW(KernelSpec::prony(-0.1, {{1.0, 1.0}}), InvalidSpec);
    EXPECT_THROW(KernelSpec::prony(0.0, {{-1.0, 1.0}}), InvalidSpec);
    EXPECT_THROW(KernelSpec::prony(0.0, {{1.0, 0.0}}), InvalidSpec);
    EXPECT_THROW(KernelSpec::power_law(1.0, 1.5), InvalidSpec);
    EXPECT_THROW(KernelSpec::power_law(0.0, 0.5), InvalidSpec);
    EXPECT_THROW(KernelSpec::sum({kPow, KernelSpec::power_law(2.0, 0.3)}), InvalidSpec);
    EXPECT_THROW(KernelSpec::sum({kExp, KernelSpec::prony(0.0, {{-1.0, 1.0}})}), InvalidSpec);
}

TEST(KernelIntegrated, ClosedFormExamples) {
    EXPECT_NEAR(kExp.integrated(1.0), 1.0 - std::exp(-1.0), 1e-15);
    EXPECT_NEAR(kPow.integrated(4.0), 4.0, 1e-14);
    for (const auto& k : {kExp, kPow, KernelSpec::constant(3.0)}) EXPECT_EQ(k.integrated(0.0), 0.0);
}

TEST(KernelIntegrated, MatchesQuadratureOracle) {
    for (const auto& k : random_kernels(7, 12)) {
        for (double xi : {1e-3, 0.3, 1.0, 4.5}) {
            const double ref = quad([&](double t) { return k.value(t); }, 0.0, xi);
            EXPECT_NEAR(k.integrated(xi), ref, 1e-10 * std::max(1.0, std::abs(ref))) << k.describe() << " xi=" << xi;
            const double ref2 = quad([&](double t) { return k.integrated(t); }, 0.0, xi);
            EXPECT_NEAR(k.integrated_twice(xi), ref2, 1e-10 * std::max(1.0, std::abs(ref2))) << k.describe();
        }
    }
}

TEST(KernelIntegrated, MidpointConsistencyIsThirdOrder) {
    for (const auto& k : random_kernels(11, 9)) {
        const double xi = 0.7;
        double prev = 0.0;
        for (double h : {1e-1, 5e-2, 2.5e-2}) {
            const double err = std::abs(k.integrated(xi + h) - k.integrated(xi) - h * k.value(xi + h / 2));
            if (prev > 0.0) { EXPECT_GT(prev / err, 7.0) << k.describe(); }
            prev = err;
        }
    }
}

TEST(KernelProperties, SignConditionsOnLogGrid) {
    for (const auto& k : random_kernels(3, 30)) {
        const auto grid = log_grid(5.0, 200);
        double prev = std::numeric_limits<double>::infinity();
        for (double t : grid) {
            const double g = k.value(t);
            EXPECT_GT(g, 0.0);
            EXPECT_LE(g, prev);
            EXPECT_LE(k.derivative(t), 0.0);
            EXPECT_GE(k.second_derivative(t), 0.0);
            prev = g;
        }
    }
}

TEST(KernelIncrements, AgreeWithDifferencesAndAreCancellationFree) {
    for (const auto& k : random_kernels(5, 12)) {
        for (double x0 : {0.01, 0.5, 3.0})
            for (double d : {1e-9, 1e-4, 0.2}) {
                const double gi = k.value_increment(x0, d);
                EXPECT_NEAR(gi, quad([&](double r) { return k.derivative(x0 + r); }, 0.0, d),
                            1e-9 * std::abs(gi) + 1e-300);
                const double ki = k.integrated_increment(x0, d);
                EXPECT_NEAR(ki, quad([&](double r) { return k.value(x0 + r); }, 0.0, d), 1e-10 * ki);
                EXPECT_GT(ki, 0.0);
            }
    }
}

TEST(KernelMoments, MatchQuadratureOracle) {
    for (const auto& k : random_kernels(9, 12)) {
        for (double x0 : {0.0, 0.02, 0.4})
            for (double d : {1e-3, 0.05, 0.3}) {
                if (x0 == 0.0 && k.singular_at_origin()) {
                    EXPECT_THROW(k.derivative_moments(x0, d), DomainError);
                    // By parts: int_0^d G'(r) r dr = d G(d) - int_0^d G, avoiding r G'(r) overflow near 0.
                    const double ref = (d * k.value(d) - quad([&](double r) { return k.value(r); }, 0.0, d)) / d;
                    EXPECT_NEAR(k.derivative_first_moment(x0, d), ref, 1e-8 * std::abs(ref));
                } else {
                    const auto m = k.derivative_moments(x0, d);
                    const double z = quad([&](double r) { return k.derivative(x0 + r); }, 0.0, d);
                    const double f = quad([&](double r) { return k.derivative(x0 + r) * r / d; }, 0.0, d);
                    EXPECT_NEAR(m.zeroth, z, 1e-9 * std::abs(z)) << k.describe();
                    EXPECT_NEAR(m.first, f, 1e-9 * std::abs(f)) << k.describe();
                    const auto m2 = k.second_derivative_moments(x0, d);
                    const double z2 = quad([&](double r) { return k.second_derivative(x0 + r); }, 0.0, d);
                    const double f2 = quad([&](double r) { return k.second_derivative(x0 + r) * r / d; }, 0.0, d);
                    EXPECT_NEAR(m2.zeroth, z2, 1e-9 * std::abs(z2)) << k.describe();
                    EXPECT_NEAR(m2.first, f2, 1e-9 * std::abs(f2)) << k.describe();
                }
                for (double shift : {0.0, 0.05}) {
                    const auto mi = k.shifted_integrated_moments(shift, x0, d);
                    auto Kshift = [&](double s) { return k.integrated(shift + s) - k.integrated(shift); };
                    const double z = quad([&](double r) { return Kshift(x0 + r); }, 0.0, d);
                    const double f = quad([&](double r) { return Kshift(x0 + r) * r / d; }, 0.0, d);
                    EXPECT_NEAR(mi.zeroth, z, 1e-9 * std::abs(z) + 1e-300) << k.describe();
                    EXPECT_NEAR(mi.first, f, 1e-9 * std::abs(f) + 1e-300) << k.describe();
                }
            }
    }
}

TEST(Translate, ExamplesAndIdentity) {
    EXPECT_NEAR(translate(kExp, 0.1).initial_value(), std::exp(-0.1), 1e-15);
    EXPECT_NEAR(translate(kPow, 0.01).initial_value(), 10.0, 1e-12);
    EXPECT_NEAR(translate(kExp, 0.1).integrated(1.0), std::exp(-0.1) - std::exp(-1.1), 1e-15);
    EXPECT_THROW(translate(kExp, 0.0), DomainError);
    EXPECT_THROW(translate(kExp, -1.0), DomainError);

    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(1e-4, 2.0);
    for (const auto& k : random_kernels(13, 12))
        for (int i = 0; i < 20; ++i) {
            const double eps = u(rng), xi = u(rng);
            const auto ke = translate(k, eps);
            const double ref = k.integrated(eps + xi) - k.integrated(eps);
            EXPECT_NEAR(ke.integrated(xi), ref, 1e-13 * std::max(1.0, std::abs(ref)));
            EXPECT_DOUBLE_EQ(ke.value(xi), k.value(eps + xi));
        }
}

TEST(KernelDiffBound, ClosedFormsAndMonotonicity) {
    const auto b = kernel_diff_bound(kExp, 0.1, {0.0});
    EXPECT_NEAR(b[0], 1.0 - std::exp(-0.1), 1e-15);
    EXPECT_NEAR(b[0], 0.09516, 1e-5);
    for (double eps : {0.1, 0.01, 1e-4}) EXPECT_NEAR(kernel_diff_bound(kPow, eps, {0.0})[0], 2.0 * std::sqrt(eps), 1e-12);

    std::vector<double> s;
    for (int i = 0; i <= 100; ++i) s.push_back(0.05 * i);
    for (const auto& k : random_kernels(17, 12)) {
        const auto v = kernel_diff_bound(k, 0.03, s);
        for (std::size_t i = 0; i < s.size(); ++i) {
            EXPECT_GE(v[i], 0.0);
            EXPECT_NEAR(v[i], k.integrated(s[i] + 0.03) - k.integrated(s[i]), 1e-13 * std::max(1.0, k.integrated(s[i] + 0.03)));
            if (i > 0) { EXPECT_LE(v[i], v[i - 1] * (1.0 + 1e-14)); }
        }
        EXPECT_LT(kernel_diff_bound(k, 1e-10, {0.5})[0], 1e-8);
    }
    EXPECT_THROW(kernel_diff_bound(kExp, 0.0, {0.0}), DomainError);
}

TEST(Admissibility, ReportsRegimes) {
    const auto p = check_admissibility(KernelSpec::prony(0.5, {{0.5, 2.0}}), 1.0, 100);
    EXPECT_TRUE(p.admissible());
    EXPECT_STREQ(p.regime(), "classical");
    EXPECT_TRUE(p.derivative_integrable_near_origin);
    EXPECT_FALSE(p.integrable_on_half_line);

    const auto s = check_admissibility(kPow, 1.0, 100);
    EXPECT_TRUE(s.admissible());
    EXPECT_STREQ(s.regime(), "singular");
    EXPECT_FALSE(s.derivative_integrable_near_origin);
    EXPECT_TRUE(s.integrable_on_interval);
    EXPECT_FALSE(s.integrable_on_half_line);

    EXPECT_TRUE(check_admissibility(kExp, 1.0, 10).integrable_on_half_line);
    EXPECT_THROW(check_admissibility(kExp, 1.0, 1), DomainError);
}

TEST(Admissibility, FailingKernelYieldsFailingReport) {
    // G(t) = 1 + t violates G' <= 0; built through the generic sampler.
    struct Growing {
        double value(double t) const { return 1.0 + t; }
        double derivative(double) const { return 1.0; }
        double second_derivative(double) const { return 0.0; }
    };
    const auto r = sample_sign_conditions(Growing{}, 1.0, 50);
    EXPECT_TRUE(r.positive);
    EXPECT_FALSE(r.nonincreasing);
    EXPECT_TRUE(r.first_violation_time.has_value());
}

TEST(FadingMemory, ClosedFormShifts) {
    auto r = check_fading_memory(kExp, 1.0, std::exp(-3.0));
    ASSERT_TRUE(r.attainable());
    EXPECT_NEAR(*r.shift, 3.0, 1e-9);
    r = check_fading_memory(kPow, 1.0, 0.1);
    ASSERT_TRUE(r.attainable());
    EXPECT_NEAR(*r.shift, 100.0, 1e-7);
    r = check_fading_memory(KernelSpec::constant(2.0), 1.0, 1e-6);
    ASSERT_TRUE(r.attainable());
    EXPECT_EQ(*r.shift, 0.0);
    EXPECT_FALSE(check_fading_memory(kPow, 1.0, 1e-320).attainable());
    EXPECT_THROW(check_fading_memory(kExp, 1.0, 0.0), DomainError);
}

TEST(FadingMemory, ShiftBoundsRandomBoundedHistories) {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0), rate(0.1, 3.0);
    for (const auto& k : {KernelSpec::prony(0.3, {{1.0, 0.5}, {0.5, 2.0}}), kExp}) {
        const double tol = 1e-3;
        const auto r = check_fading_memory(k, 1.0, tol);
        ASSERT_TRUE(r.attainable());
        const double a = *r.shift * 1.01;
        for (int trial = 0; trial < 100; ++trial) {
            // |E(s)| <= 1: a bounded Prony-type history.
            const double c1 = u(rng), c2 = u(rng), l1 = rate(rng), l2 = rate(rng);
            auto E = [&](double s) { return 0.5 * c1 * std::exp(-l1 * s) + 0.5 * c2 * std::cos(l2 * s); };
            const double tail = quad([&](double s) { return k.derivative(s + a) * E(s); }, 0.0,
                                     std::numeric_limits<double>::infinity());
            EXPECT_LT(std::abs(tail), tol);
        }
    }
}

TEST(KernelDescribe, StableText) {
    EXPECT_EQ(KernelSpec::constant(2.0).describe(), "constant(g0=2)");
    EXPECT_EQ(KernelSpec::sum({kExp, kPow}).family(), Family::Sum);
    EXPECT_NE(KernelSpec::sum({kExp, kPow}).describe().find("powerlaw"), std::string::npos);
}
