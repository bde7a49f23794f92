#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "memvisco/grid.hpp"

namespace memvisco {

/// f(x, t) = sum_i profile_i(x) * phi_i(t). Separable terms keep the double
/// time integral of the Volterra form exact up to Gauss-Legendre precision.
class Forcing {
public:
    struct Term {
        Field profile;
        std::function<double(double)> time;
        std::string name;
    };

    Forcing() = default;

    static Forcing zero() { return Forcing{}; }

    static Forcing separable(Field profile, std::function<double(double)> time, std::string name) {
        Forcing f;
        f.add(std::move(profile), std::move(time), std::move(name));
        return f;
    }

    Forcing& add(Field profile, std::function<double(double)> time, std::string name) {
        if (!terms_.empty() && !(terms_.front().profile.grid() == profile.grid()))
            throw DomainError("forcing: all terms must share one grid");
        terms_.push_back({std::move(profile), std::move(time), std::move(name)});
        return *this;
    }

    bool is_zero() const noexcept { return terms_.empty(); }
    const std::vector<Term>& terms() const noexcept { return terms_; }

    /// out = f(., t)
    void evaluate(double t, std::span<double> out) const {
        for (double& v : out) v = 0.0;
        for (const auto& term : terms_) {
            const double s = term.time(t);
            const auto p = term.profile.values();
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * p[i];
        }
    }

    Field at(const Grid& g, double t) const {
        Field f(g);
        evaluate(t, f.values());
        return f;
    }

    /// alpha * this
    Forcing scaled(double alpha) const {
        Forcing f = *this;
        for (auto& term : f.terms_) term.profile *= alpha;
        return f;
    }

    friend Forcing operator+(Forcing a, const Forcing& b) {
        for (const auto& t : b.terms_) a.add(t.profile, t.time, t.name);
        return a;
    }

    std::string describe() const {
        if (terms_.empty()) return "zero";
        std::string s;
        for (const auto& t : terms_) s += (s.empty() ? "" : " + ") + t.name;
        return s;
    }

    /// int_0^{t_j} (t_j - xi) f(xi) d xi at t_j = j dt, j = 0..steps.
    std::vector<Field> double_time_integrals(const Grid& g, double dt, std::size_t steps) const {
        std::vector<Field> out(steps + 1, Field(g));
        for (const auto& term : terms_) {
            const auto coeff = scalar_double_integrals(term.time, dt, steps);
            const auto p = term.profile.values();
            for (std::size_t j = 0; j <= steps; ++j) {
                auto o = out[j].values();
                for (std::size_t i = 0; i < o.size(); ++i) o[i] += coeff[j] * p[i];
            }
        }
        return out;
    }

    /// ||f||^2 in L2(Omega x (0, steps*dt)), Gauss-Legendre per time step.
    double squared_norm(const Grid& g, double dt, std::size_t steps) const {
        using Rule = boost::math::quadrature::gauss<double, 20>;
        const std::size_t m = terms_.size();
        if (m == 0) return 0.0;
        double total = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t b = a; b < m; ++b) {
                const double gram = inner(g, terms_[a].profile.values(), terms_[b].profile.values());
                if (gram == 0.0) continue;
                double tint = 0.0;
                for (std::size_t j = 0; j < steps; ++j) {
                    const double t0 = static_cast<double>(j) * dt;
                    tint += Rule::integrate([&](double t) { return terms_[a].time(t) * terms_[b].time(t); }, t0, t0 + dt);
                }
                total += (a == b ? 1.0 : 2.0) * gram * tint;
            }
        }
        return total;
    }

private:
    static std::vector<double> scalar_double_integrals(const std::function<double(double)>& phi, double dt,
                                                        std::size_t steps) {
        using Rule = boost::math::quadrature::gauss<double, 20>;
        // F(t + dt) = F(t) + dt * A(t) + int_t^{t+dt} (t + dt - xi) phi(xi) d xi, A(t) = int_0^t phi
        std::vector<double> F(steps + 1, 0.0);
        double A = 0.0;
        for (std::size_t j = 0; j < steps; ++j) {
            const double t0 = static_cast<double>(j) * dt;
            const double t1 = static_cast<double>(j + 1) * dt;
            const double local = Rule::integrate([&](double x) { return (t1 - x) * phi(x); }, t0, t1);
            F[j + 1] = F[j] + dt * A + local;
            A += Rule::integrate(phi, t0, t1);
        }
        return F;
    }

    std::vector<Term> terms_;
};

}  // namespace memvisco
