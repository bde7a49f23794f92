#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "memvisco/error.hpp"
#include "memvisco/kernel.hpp"

namespace memvisco {

using Sym3 = std::array<std::array<double, 3>, 3>;

inline double trace(const Sym3& e) { return e[0][0] + e[1][1] + e[2][2]; }

/// Double contraction a : b.
inline double contract(const Sym3& a, const Sym3& b) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s += a[i][j] * b[i][j];
    return s;
}

inline Sym3 identity3() { return Sym3{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

inline bool is_symmetric(const Sym3& e, double rel_tol = 1e-12) {
    double scale = 0.0;
    for (const auto& row : e)
        for (double v : row) scale = std::max(scale, std::abs(v));
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (std::abs(e[i][j] - e[j][i]) > rel_tol * std::max(scale, 1.0)) return false;
    return true;
}

struct TensorApplication {
    Sym3 value{};
    double beta = 0.0;       // coercivity constant at this time
    bool coercive = false;   // G[e]:e >= beta e:e (up to rounding)
};

/// Isotropic fourth-order relaxation tensor built from bulk and shear moduli:
/// G_klmn = lambda d_kl d_mn + mu (d_km d_ln + d_kn d_lm), lambda = kappa - 2 mu / 3.
/// Major and minor symmetries hold by construction.
class IsotropicRelaxationTensor {
public:
    IsotropicRelaxationTensor(KernelSpec bulk, KernelSpec shear) : bulk_(std::move(bulk)), shear_(std::move(shear)) {}

    const KernelSpec& bulk() const noexcept { return bulk_; }
    const KernelSpec& shear() const noexcept { return shear_; }

    double lambda(double t) const { return bulk_.value(t) - 2.0 / 3.0 * shear_.value(t); }
    double mu(double t) const { return shear_.value(t); }

    /// beta = min(2 mu, 3 lambda + 2 mu), the smallest eigenvalue on Sym.
    double coercivity(double t) const {
        const double m = mu(t);
        return std::min(2.0 * m, 3.0 * lambda(t) + 2.0 * m);
    }

    double component(double t, int k, int l, int m, int n) const {
        auto d = [](int a, int b) { return a == b ? 1.0 : 0.0; };
        return lambda(t) * d(k, l) * d(m, n) + mu(t) * (d(k, m) * d(l, n) + d(k, n) * d(l, m));
    }

private:
    KernelSpec bulk_;
    KernelSpec shear_;
};

/// G(t)[e] = lambda tr(e) I + 2 mu e, with the coercivity constant at t.
inline TensorApplication tensor_apply(const IsotropicRelaxationTensor& G, double t, const Sym3& e) {
    if (!is_symmetric(e)) throw DomainError("tensor_apply: strain tensor must be symmetric");
    const double lam = G.lambda(t);
    const double mu = G.mu(t);
    const double tr = trace(e);
    TensorApplication r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r.value[i][j] = 2.0 * mu * e[i][j] + (i == j ? lam * tr : 0.0);
    r.beta = G.coercivity(t);
    const double ee = contract(e, e);
    r.coercive = r.beta > 0.0 && contract(r.value, e) >= r.beta * ee * (1.0 - 1e-12);
    return r;
}

}  // namespace memvisco
