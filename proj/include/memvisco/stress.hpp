#pragma once

#include <cstddef>
#include <vector>

#include "memvisco/error.hpp"
#include "memvisco/kernel.hpp"
#include "memvisco/tensor.hpp"

namespace memvisco {

/// Uniformly sampled strain E(t_j), t_j = j dt, with a constant value before 0.
struct StrainHistory {
    std::vector<double> samples;
    double dt = 0.0;
    double past_value = 0.0;

    double final_time() const noexcept { return samples.empty() ? 0.0 : dt * static_cast<double>(samples.size() - 1); }
};

enum class StressForm {
    /// G0 E(t) + int_0^inf G'(s) E^t(s) ds; needs a finite G0.
    Instantaneous,
    /// G(t) E(t) + int_0^t G'(s) [E(t - s) - E(t)] ds + (G(inf) - G(t)) E_past; any admissible kernel.
    Integrated,
};

namespace detail {

inline void check_history(const StrainHistory& h) {
    if (h.samples.empty()) throw DomainError("strain history is empty");
    if (h.samples.size() > 1 && !(h.dt > 0.0)) throw DomainError("strain history: dt must be > 0");
}

}  // namespace detail

/// Stress at the last sample time, the strain taken piecewise linear between
/// samples. Both forms are exact for piecewise-linear histories.
inline double compute_stress(const KernelSpec& k, const StrainHistory& h, StressForm form) {
    detail::check_history(h);
    const std::size_t n = h.samples.size() - 1;
    const double t = h.final_time();
    const auto& E = h.samples;
    const double past_tail = (k.equilibrium_modulus() - (n == 0 && k.singular_at_origin() ? 0.0 : k.value(t))) * h.past_value;

    if (form == StressForm::Instantaneous) {
        if (k.singular_at_origin())
            throw DomainError("instantaneous stress form needs a finite G0, but " + k.describe() +
                              " is singular at t = 0; use the integrated form");
        double s = k.value(0.0) * E[n];
        for (std::size_t a = 0; a < n; ++a) {
            const LinearMoments m = k.derivative_moments(static_cast<double>(a) * h.dt, h.dt);
            s += m.near() * E[n - a] + m.far() * E[n - a - 1];
        }
        return s + past_tail;
    }

    if (n == 0) {
        if (k.singular_at_origin())
            throw DomainError("stress at t = 0 is undefined for a kernel singular at the origin");
        return k.value(0.0) * E[0] + past_tail;
    }
    double s = k.value(t) * E[n];
    // Interval 0: E(t - s) - E(t) = (E_{n-1} - E_n) s / dt vanishes at s = 0.
    s += k.derivative_first_moment(0.0, h.dt) * (E[n - 1] - E[n]);
    for (std::size_t a = 1; a < n; ++a) {
        const LinearMoments m = k.derivative_moments(static_cast<double>(a) * h.dt, h.dt);
        s += m.near() * (E[n - a] - E[n]) + m.far() * (E[n - a - 1] - E[n]);
    }
    return s + past_tail;
}

/// Uniformly sampled symmetric strain tensor history.
struct TensorStrainHistory {
    std::vector<Sym3> samples;
    double dt = 0.0;
    Sym3 past_value{};
};

/// Isotropic stress: bulk kernel on the volumetric part, shear kernel on the deviator.
inline Sym3 compute_stress(const IsotropicRelaxationTensor& G, const TensorStrainHistory& h, StressForm form) {
    if (h.samples.empty()) throw DomainError("strain history is empty");
    for (const auto& e : h.samples)
        if (!is_symmetric(e)) throw DomainError("strain history contains a non-symmetric tensor");
    if (!is_symmetric(h.past_value)) throw DomainError("past strain must be symmetric");

    auto project = [&](auto&& component) {
        StrainHistory s;
        s.dt = h.dt;
        s.samples.reserve(h.samples.size());
        for (const auto& e : h.samples) s.samples.push_back(component(e));
        s.past_value = component(h.past_value);
        return s;
    };
    // sigma = kappa tr(E) I + 2 mu dev(E)
    const double vol = compute_stress(G.bulk(), project([](const Sym3& e) { return trace(e); }), form);
    Sym3 out{};
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            auto dev = [i, j](const Sym3& e) { return e[i][j] - (i == j ? trace(e) / 3.0 : 0.0); };
            const double v = 2.0 * compute_stress(G.shear(), project(dev), form);
            out[i][j] = out[j][i] = v + (i == j ? vol : 0.0);
        }
    return out;
}

}  // namespace memvisco
