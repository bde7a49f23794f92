#include <gtest/gtest.h>

#include <random>

#include "memvisco/tensor.hpp"

using namespace memvisco;

namespace {

// lambda = kappa - 2 mu / 3, so lambda = mu = 1 needs kappa = 5/3.
IsotropicRelaxationTensor unit_lame() { return {KernelSpec::constant(5.0 / 3.0), KernelSpec::constant(1.0)}; }

Sym3 random_sym(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Sym3 e{};
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) e[i][j] = e[j][i] = u(rng);
    return e;
}

// Independent oracle: explicit fourth-order contraction G_klmn e_mn.
Sym3 contract4(const IsotropicRelaxationTensor& G, double t, const Sym3& e) {
    Sym3 out{};
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
            for (int m = 0; m < 3; ++m)
                for (int n = 0; n < 3; ++n) out[k][l] += G.component(t, k, l, m, n) * e[m][n];
    return out;
}

}  // namespace

TEST(TensorApply, TraceCase) {
    const auto r = tensor_apply(unit_lame(), 0.0, identity3());
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(r.value[i][j], i == j ? 5.0 : 0.0, 1e-14);
}

TEST(TensorApply, ZeroStrain) {
    const auto r = tensor_apply(unit_lame(), 0.0, Sym3{});
    for (const auto& row : r.value)
        for (double v : row) EXPECT_EQ(v, 0.0);
}

TEST(TensorApply, DeviatoricShearCase) {
    // lambda = 0, mu = 1 needs kappa = 2/3.
    const IsotropicRelaxationTensor G(KernelSpec::constant(2.0 / 3.0), KernelSpec::constant(1.0));
    const Sym3 e{{{1, 0, 0}, {0, -1, 0}, {0, 0, 0}}};
    const auto r = tensor_apply(G, 0.0, e);
    const Sym3 oracle = contract4(G, 0.0, e);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            EXPECT_NEAR(r.value[i][j], 2.0 * e[i][j], 1e-14);
            EXPECT_NEAR(r.value[i][j], oracle[i][j], 1e-14);
        }
    EXPECT_NEAR(contract(r.value, e), 2.0 * contract(e, e), 1e-14);
    EXPECT_NEAR(r.beta, 2.0, 1e-14);
    EXPECT_TRUE(r.coercive);
}

TEST(TensorApply, RejectsNonSymmetricStrain) {
    const Sym3 e{{{0, 1, 0}, {0, 0, 0}, {0, 0, 0}}};
    EXPECT_THROW(tensor_apply(unit_lame(), 0.0, e), DomainError);
}

TEST(TensorApply, MajorSymmetryAndCoercivityOnRandomStrains) {
    std::mt19937 rng(5);
    const IsotropicRelaxationTensor G(KernelSpec::prony(1.0, {{0.5, 1.0}}), KernelSpec::power_law(0.7, 0.4));
    for (int trial = 0; trial < 200; ++trial) {
        const Sym3 e = random_sym(rng), d = random_sym(rng);
        const double t = 0.01 + 0.01 * trial;
        const auto Ge = tensor_apply(G, t, e), Gd = tensor_apply(G, t, d);
        EXPECT_NEAR(contract(Ge.value, d), contract(Gd.value, e), 1e-12);
        EXPECT_TRUE(is_symmetric(Ge.value));
        EXPECT_GE(contract(Ge.value, e), Ge.beta * contract(e, e) * (1 - 1e-12));
        const Sym3 oracle = contract4(G, t, e);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) EXPECT_NEAR(Ge.value[i][j], oracle[i][j], 1e-12);
    }
}

TEST(TensorComponents, MinorAndMajorSymmetries) {
    const auto G = unit_lame();
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
            for (int m = 0; m < 3; ++m)
                for (int n = 0; n < 3; ++n) {
                    EXPECT_EQ(G.component(0.0, k, l, m, n), G.component(0.0, m, n, k, l));
                    EXPECT_EQ(G.component(0.0, k, l, m, n), G.component(0.0, l, k, m, n));
                }
}

TEST(TensorCoercivity, DetectsLossOfCoercivity) {
    // kappa small against mu: 3 lambda + 2 mu = 3 kappa < 0 is impossible for kappa > 0,
    // but beta equals min(2 mu, 3 kappa), so a tiny bulk modulus gives a tiny beta.
    const IsotropicRelaxationTensor G(KernelSpec::constant(1e-3), KernelSpec::constant(1.0));
    EXPECT_NEAR(G.coercivity(0.0), 3e-3, 1e-15);
}
