#pragma once

// Relaxation moduli G(t): Prony series, power laws and their sums, with
// closed-form derivatives, antiderivatives and the interval moments used by
// product quadrature everywhere else in the library.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>

#include "memvisco/error.hpp"

namespace memvisco {

/// Integrals of f(x0 + r) against 1 and r/d over r in [0, d].
///
/// A piecewise-linear interpolant on [x0, x0 + d] with end values a (at x0)
/// and b (at x0 + d) integrates to `near() * a + far() * b`.
struct LinearMoments {
    double zeroth = 0.0;
    double first = 0.0;

    double near() const noexcept { return zeroth - first; }
    double far() const noexcept { return first; }

    LinearMoments& operator+=(const LinearMoments& o) noexcept {
        zeroth += o.zeroth;
        first += o.first;
        return *this;
    }
    LinearMoments& operator-=(const LinearMoments& o) noexcept {
        zeroth -= o.zeroth;
        first -= o.first;
        return *this;
    }
    friend LinearMoments operator-(LinearMoments a, const LinearMoments& b) noexcept { return a -= b; }
    friend LinearMoments operator*(double s, LinearMoments m) noexcept {
        m.zeroth *= s;
        m.first *= s;
        return m;
    }
};

/// 20-point Gauss-Legendre moments of a smooth callable on [s0, s0 + d].
template <class F>
LinearMoments gauss_moments(F&& f, double s0, double d) {
    using Rule = boost::math::quadrature::gauss<double, 20>;
    LinearMoments m;
    m.zeroth = Rule::integrate([&](double r) { return f(s0 + r); }, 0.0, d);
    m.first = Rule::integrate([&](double r) { return f(s0 + r) * (r / d); }, 0.0, d);
    return m;
}

namespace detail {

// 1 - e^{-z}
inline double phi1(double z) { return -std::expm1(-z); }

// z - (1 - e^{-z})
inline double chi1(double z) {
    if (z < 0.5) {
        double term = z;
        double sum = 0.0;
        for (int n = 2; n < 30; ++n) {
            term *= -z / n;
            sum += term;
        }
        return -sum;  // sum_{n>=2} (-1)^n z^n / n!
    }
    return z + std::expm1(-z);
}

// 1 - e^{-z}(1 + z)
inline double psi(double z) {
    if (z < 0.5) {
        double fact = 1.0;
        double pw = 1.0;
        double sum = 0.0;
        for (int n = 1; n < 30; ++n) {
            fact *= n;
            pw *= z;
            if (n >= 2) sum += ((n % 2 == 0) ? 1.0 : -1.0) * (n - 1) * pw / fact;
        }
        return sum;
    }
    return 1.0 - std::exp(-z) * (1.0 + z);
}

// z^2/2 - psi(z)
inline double chi2(double z) {
    if (z < 0.5) {
        double fact = 1.0;
        double pw = 1.0;
        double sum = 0.0;
        for (int n = 1; n < 30; ++n) {
            fact *= n;
            pw *= z;
            if (n >= 3) sum += ((n % 2 == 0) ? -1.0 : 1.0) * (n - 1) * pw / fact;
        }
        return sum;
    }
    return 0.5 * z * z - psi(z);
}

// A * x^p integrated against {1, r/d} on x in [x0, x0 + d], closed form.
inline LinearMoments power_moments_closed(double A, double p, double x0, double d) {
    const double x1 = x0 + d;
    LinearMoments m;
    auto pw = [](double x, double e) { return x == 0.0 ? (e > 0 ? 0.0 : std::numeric_limits<double>::infinity()) : std::pow(x, e); };
    m.zeroth = A * (pw(x1, p + 1) - pw(x0, p + 1)) / (p + 1);
    const double a2 = (pw(x1, p + 2) - pw(x0, p + 2)) / (p + 2);
    const double a1 = x0 == 0.0 ? 0.0 : x0 * (pw(x1, p + 1) - pw(x0, p + 1)) / (p + 1);
    m.first = A * (a2 - a1) / d;
    return m;
}

inline LinearMoments power_moments(double A, double p, double x0, double d) {
    if (x0 >= d) return gauss_moments([&](double x) { return A * std::pow(x, p); }, x0, d);
    return power_moments_closed(A, p, x0, d);
}

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace detail

struct PronyTerm {
    double weight = 0.0;           // g_i
    double relaxation_time = 0.0;  // tau_i
};

struct ConstantKernel {
    double g0 = 0.0;
};

struct PronyKernel {
    double g_inf = 0.0;
    std::vector<PronyTerm> terms;
};

struct PowerLawKernel {
    double c = 0.0;
    double alpha = 0.0;
};

enum class Family { Constant, Prony, PowerLaw, Sum };

inline const char* to_string(Family f) {
    switch (f) {
        case Family::Constant: return "constant";
        case Family::Prony: return "prony";
        case Family::PowerLaw: return "powerlaw";
        case Family::Sum: return "sum";
    }
    return "?";
}

/// A scalar relaxation modulus. Immutable after construction; every factory
/// validates the family invariants so that G > 0, G' <= 0 and G'' >= 0 hold.
class KernelSpec {
public:
    static KernelSpec constant(double g0) {
        if (!(g0 > 0.0) || !std::isfinite(g0))
            throw InvalidSpec("constant kernel: g0 must be finite and > 0 (got " + detail::fmt(g0) + ")");
        KernelSpec k;
        k.leaf_ = ConstantKernel{g0};
        k.equilibrium_ = g0;
        return k;
    }

    static KernelSpec prony(double g_inf, std::vector<PronyTerm> terms) {
        if (!(g_inf >= 0.0) || !std::isfinite(g_inf))
            throw InvalidSpec("prony kernel: g_inf must be finite and >= 0 (got " + detail::fmt(g_inf) + ")");
        for (std::size_t i = 0; i < terms.size(); ++i) {
            const auto& t = terms[i];
            if (!(t.weight > 0.0) || !std::isfinite(t.weight))
                throw InvalidSpec("prony kernel: term " + std::to_string(i) + " weight must be > 0 (got " +
                                  detail::fmt(t.weight) + ")");
            if (!(t.relaxation_time > 0.0) || !std::isfinite(t.relaxation_time))
                throw InvalidSpec("prony kernel: term " + std::to_string(i) + " relaxation time must be > 0 (got " +
                                  detail::fmt(t.relaxation_time) + ")");
        }
        if (g_inf == 0.0 && terms.empty()) throw InvalidSpec("prony kernel: needs g_inf > 0 or at least one term");
        KernelSpec k;
        k.equilibrium_ = g_inf;
        k.terms_ = terms;
        k.leaf_ = PronyKernel{g_inf, std::move(terms)};
        return k;
    }

    static KernelSpec power_law(double c, double alpha) {
        if (!(c > 0.0) || !std::isfinite(c))
            throw InvalidSpec("powerlaw kernel: c must be finite and > 0 (got " + detail::fmt(c) + ")");
        if (!(alpha > 0.0 && alpha < 1.0))
            throw InvalidSpec("powerlaw kernel: alpha must lie in (0,1) (got " + detail::fmt(alpha) + ")");
        KernelSpec k;
        k.leaf_ = PowerLawKernel{c, alpha};
        k.power_ = PowerLawKernel{c, alpha};
        return k;
    }

    static KernelSpec sum(std::vector<KernelSpec> parts) {
        if (parts.empty()) throw InvalidSpec("sum kernel: needs at least one part");
        KernelSpec k;
        k.leaf_ = std::monostate{};
        for (const auto& p : parts) {
            k.equilibrium_ += p.equilibrium_;
            k.terms_.insert(k.terms_.end(), p.terms_.begin(), p.terms_.end());
            if (p.power_) {
                if (k.power_) throw InvalidSpec("sum kernel: at most one powerlaw part is supported");
                k.power_ = p.power_;
            }
        }
        k.parts_ = std::move(parts);
        return k;
    }

    Family family() const noexcept {
        switch (leaf_.index()) {
            case 1: return Family::Constant;
            case 2: return Family::Prony;
            case 3: return Family::PowerLaw;
            default: return Family::Sum;
        }
    }

    const std::vector<KernelSpec>& parts() const noexcept { return parts_; }

    /// G(infinity).
    double equilibrium_modulus() const noexcept { return equilibrium_; }
    const std::vector<PronyTerm>& relaxation_terms() const noexcept { return terms_; }
    const std::optional<PowerLawKernel>& singular_part() const noexcept { return power_; }
    bool singular_at_origin() const noexcept { return power_.has_value(); }

    /// G(0) when finite.
    std::optional<double> instantaneous_modulus() const {
        if (power_) return std::nullopt;
        return value(0.0);
    }

    double value(double t) const {
        check_time(t, "G");
        double g = equilibrium_;
        for (const auto& term : terms_) g += term.weight * std::exp(-t / term.relaxation_time);
        if (power_) g += power_->c * std::pow(t, -power_->alpha);
        return g;
    }

    double derivative(double t) const {
        check_time(t, "G'");
        double g = 0.0;
        for (const auto& term : terms_) g -= term.weight / term.relaxation_time * std::exp(-t / term.relaxation_time);
        if (power_) g -= power_->alpha * power_->c * std::pow(t, -power_->alpha - 1.0);
        return g;
    }

    double second_derivative(double t) const {
        check_time(t, "G''");
        double g = 0.0;
        for (const auto& term : terms_) {
            const double tau = term.relaxation_time;
            g += term.weight / (tau * tau) * std::exp(-t / tau);
        }
        if (power_) {
            const double a = power_->alpha;
            g += a * (a + 1.0) * power_->c * std::pow(t, -a - 2.0);
        }
        return g;
    }

    /// G(t) - G(infinity), the part of the modulus that relaxes.
    double transient(double t) const {
        check_time(t, "G - G(inf)");
        double g = 0.0;
        for (const auto& term : terms_) g += term.weight * std::exp(-t / term.relaxation_time);
        if (power_) g += power_->c * std::pow(t, -power_->alpha);
        return g;
    }

    /// K(xi) = int_0^xi G.
    double integrated(double xi) const {
        if (!(xi >= 0.0)) throw DomainError("K(xi) requires xi >= 0 (got " + detail::fmt(xi) + ")");
        double k = equilibrium_ * xi;
        for (const auto& term : terms_) {
            const double tau = term.relaxation_time;
            k += term.weight * tau * detail::phi1(xi / tau);
        }
        if (power_) {
            const double b = 1.0 - power_->alpha;
            k += power_->c / b * std::pow(xi, b);
        }
        return k;
    }

    /// int_0^xi K.
    double integrated_twice(double xi) const {
        if (!(xi >= 0.0)) throw DomainError("int K requires xi >= 0 (got " + detail::fmt(xi) + ")");
        double k = 0.5 * equilibrium_ * xi * xi;
        for (const auto& term : terms_) {
            const double tau = term.relaxation_time;
            k += term.weight * tau * tau * detail::chi1(xi / tau);
        }
        if (power_) {
            const double b = 1.0 - power_->alpha;
            k += power_->c / (b * (b + 1.0)) * std::pow(xi, b + 1.0);
        }
        return k;
    }

    /// G(x0 + d) - G(x0) without cancellation.
    double value_increment(double x0, double d) const {
        check_interval(x0, d);
        if (power_ && x0 == 0.0) throw DomainError("G(0) is undefined: the powerlaw part is singular at t = 0");
        double s = 0.0;
        for (const auto& term : terms_) {
            const double tau = term.relaxation_time;
            s -= term.weight * std::exp(-x0 / tau) * detail::phi1(d / tau);
        }
        if (power_) {
            const double a = power_->alpha;
            s += power_->c * std::pow(x0, -a) * std::expm1(-a * std::log1p(d / x0));
        }
        return s;
    }

    /// G'(x0 + d) - G'(x0) without cancellation.
    double derivative_increment(double x0, double d) const {
        check_interval(x0, d);
        if (power_ && x0 == 0.0) throw DomainError("G'(0) is undefined: the powerlaw part is singular at t = 0");
        double s = 0.0;
        for (const auto& term : terms_) {
            const double tau = term.relaxation_time;
            s += term.weight / tau * std::exp(-x0 / tau) * detail::phi1(d / tau);
        }
        if (power_) {
            const double a = power_->alpha;
            s -= a * power_->c * std::pow(x0, -a - 1.0) * std::expm1(-(a + 1.0) * std::log1p(d / x0));
        }
        return s;
    }

    /// K(x0 + d) - K(x0) = int_{x0}^{x0+d} G without cancellation.
    double integrated_increment(double x0, double d) const {
        check_interval(x0, d);
        double s = equilibrium_ * d;
        for (const auto& term : terms_) {
            const double tau = term.relaxation_time;
            s += term.weight * tau * std::exp(-x0 / tau) * detail::phi1(d / tau);
        }
        if (power_) {
            const double b = 1.0 - power_->alpha;
            if (x0 == 0.0)
                s += power_->c / b * std::pow(d, b);
            else
                s += power_->c / b * std::pow(x0, b) * std::expm1(b * std::log1p(d / x0));
        }
        return s;
    }

    /// Moments of G' on [x0, x0 + d]. The zeroth moment is exactly the G increment.
    LinearMoments derivative_moments(double x0, double d) const {
        check_interval(x0, d);
        if (power_ && x0 == 0.0)
            throw DomainError("int_0^d G' diverges: the powerlaw part is singular at t = 0");
        LinearMoments m;
        m.zeroth = value_increment(x0, d);
        m.first = derivative_first_moment(x0, d);
        return m;
    }

    /// int_0^d G'(x0 + r) r/d dr; finite at x0 = 0 even for singular kernels.
    double derivative_first_moment(double x0, double d) const {
        check_interval(x0, d);
        double s = 0.0;
        for (const auto& term : terms_) {
            const double tau = term.relaxation_time;
            const double z = d / tau;
            s -= term.weight * std::exp(-x0 / tau) * detail::psi(z) / z;
        }
        if (power_) {
            const double a = power_->alpha;
            s += detail::power_moments(-a * power_->c, -a - 1.0, x0, d).first;
        }
        return s;
    }

    /// Moments of G'' on [x0, x0 + d], x0 > 0 for singular kernels.
    LinearMoments second_derivative_moments(double x0, double d) const {
        check_interval(x0, d);
        if (power_ && x0 == 0.0)
            throw DomainError("int_0^d G'' diverges: the powerlaw part is singular at t = 0");
        LinearMoments m;
        m.zeroth = derivative_increment(x0, d);
        for (const auto& term : terms_) {
            const double tau = term.relaxation_time;
            const double z = d / tau;
            m.first += term.weight / tau * std::exp(-x0 / tau) * detail::psi(z) / z;
        }
        if (power_) {
            const double a = power_->alpha;
            m.first += detail::power_moments(a * (a + 1.0) * power_->c, -a - 2.0, x0, d).first;
        }
        return m;
    }

    /// Moments of s -> K(shift + s) - K(shift) on [s0, s0 + d].
    LinearMoments shifted_integrated_moments(double shift, double s0, double d) const {
        check_interval(s0, d);
        if (!(shift >= 0.0)) throw DomainError("shift must be >= 0");
        LinearMoments m;
        m.zeroth = equilibrium_ * (s0 * d + 0.5 * d * d);
        m.first = equilibrium_ * (0.5 * s0 * d + d * d / 3.0);
        for (const auto& term : terms_) {
            const double tau = term.relaxation_time;
            const double z = d / tau;
            const double e0 = std::exp(-s0 / tau);
            const double scale = term.weight * tau * std::exp(-shift / tau);
            m.zeroth += scale * (d * detail::phi1(s0 / tau) + e0 * tau * detail::chi1(z));
            m.first += scale * (0.5 * d * detail::phi1(s0 / tau) + e0 * tau * detail::chi2(z) / z);
        }
        if (power_) {
            const double b = 1.0 - power_->alpha;
            const double A = power_->c / b;
            const double x0 = shift + s0;
            if (x0 >= d) {
                auto inc = [&](double s) {
                    return shift == 0.0 ? A * std::pow(s, b) : A * std::pow(shift, b) * std::expm1(b * std::log1p(s / shift));
                };
                m += gauss_moments(inc, s0, d);
            } else {
                LinearMoments p = detail::power_moments_closed(A, b, x0, d);
                const double base = shift == 0.0 ? 0.0 : A * std::pow(shift, b);
                p.zeroth -= base * d;
                p.first -= base * 0.5 * d;
                m += p;
            }
        }
        return m;
    }

    /// Moments of K(x0 + r) itself.
    LinearMoments integrated_moments(double x0, double d) const { return shifted_integrated_moments(0.0, x0, d); }

    /// Stable textual form, used for manifests and hashing.
    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        switch (family()) {
            case Family::Constant: os << "constant(g0=" << std::get<ConstantKernel>(leaf_).g0 << ")"; break;
            case Family::Prony: {
                const auto& p = std::get<PronyKernel>(leaf_);
                os << "prony(g_inf=" << p.g_inf;
                for (const auto& t : p.terms) os << "; " << t.weight << "@" << t.relaxation_time;
                os << ")";
                break;
            }
            case Family::PowerLaw: {
                const auto& p = std::get<PowerLawKernel>(leaf_);
                os << "powerlaw(c=" << p.c << ", alpha=" << p.alpha << ")";
                break;
            }
            case Family::Sum: {
                os << "sum(";
                for (std::size_t i = 0; i < parts_.size(); ++i) os << (i ? " + " : "") << parts_[i].describe();
                os << ")";
                break;
            }
        }
        return os.str();
    }

private:
    KernelSpec() = default;

    void check_time(double t, const char* what) const {
        if (std::isnan(t) || t < 0.0)
            throw DomainError(std::string(what) + "(t) requires t >= 0 (got " + detail::fmt(t) + ")");
        if (t == 0.0 && power_)
            throw DomainError(std::string(what) + "(0) is undefined: the powerlaw part c*t^-alpha (c=" +
                              detail::fmt(power_->c) + ", alpha=" + detail::fmt(power_->alpha) +
                              ") is singular at t = 0");
    }

    static void check_interval(double x0, double d) {
        if (!(x0 >= 0.0) || !(d > 0.0))
            throw DomainError("interval [x0, x0+d] requires x0 >= 0 and d > 0 (got x0=" + detail::fmt(x0) +
                              ", d=" + detail::fmt(d) + ")");
    }

    std::variant<std::monostate, ConstantKernel, PronyKernel, PowerLawKernel> leaf_;
    std::vector<KernelSpec> parts_;

    // Flattened form used for evaluation.
    double equilibrium_ = 0.0;
    std::vector<PronyTerm> terms_;
    std::optional<PowerLawKernel> power_;
};

/// The shifted modulus G^eps(t) = G(eps + t) and its integral
/// K^eps(xi) = K(eps + xi) - K(eps). A zero shift is the unregularized kernel.
class TranslatedKernel {
public:
    TranslatedKernel(KernelSpec base, double shift) : base_(std::move(base)), shift_(shift) {
        if (!(shift >= 0.0) || !std::isfinite(shift))
            throw DomainError("kernel shift must be finite and >= 0 (got " + detail::fmt(shift) + ")");
    }

    const KernelSpec& base() const noexcept { return base_; }
    double shift() const noexcept { return shift_; }

    double value(double t) const { return base_.value(shift_ + t); }
    double derivative(double t) const { return base_.derivative(shift_ + t); }
    double second_derivative(double t) const { return base_.second_derivative(shift_ + t); }

    /// G^eps(0); throws for an unshifted singular kernel.
    double initial_value() const { return base_.value(shift_); }

    double integrated(double xi) const {
        if (!(xi >= 0.0)) throw DomainError("K^eps(xi) requires xi >= 0 (got " + detail::fmt(xi) + ")");
        if (xi == 0.0) return 0.0;
        return base_.integrated_increment(shift_, xi);
    }

    LinearMoments derivative_moments(double s0, double d) const { return base_.derivative_moments(shift_ + s0, d); }
    LinearMoments second_derivative_moments(double s0, double d) const {
        return base_.second_derivative_moments(shift_ + s0, d);
    }
    LinearMoments integrated_moments(double s0, double d) const {
        return base_.shifted_integrated_moments(shift_, s0, d);
    }

private:
    KernelSpec base_;
    double shift_;
};

/// G^eps for eps > 0.
inline TranslatedKernel translate(const KernelSpec& k, double eps) {
    if (!(eps > 0.0)) throw DomainError("translate: eps must be > 0 (got " + detail::fmt(eps) + ")");
    return TranslatedKernel(k, eps);
}

/// What the solvers and diagnostics need from a kernel.
template <class K>
concept MemoryKernel = requires(const K& k, double t) {
    { k.value(t) } -> std::convertible_to<double>;
    { k.derivative(t) } -> std::convertible_to<double>;
    { k.second_derivative(t) } -> std::convertible_to<double>;
    { k.integrated(t) } -> std::convertible_to<double>;
    { k.derivative_moments(t, t) } -> std::same_as<LinearMoments>;
    { k.second_derivative_moments(t, t) } -> std::same_as<LinearMoments>;
    { k.integrated_moments(t, t) } -> std::same_as<LinearMoments>;
};

static_assert(MemoryKernel<TranslatedKernel>);

/// K(s + eps) - K(s) per grid point.
inline std::vector<double> kernel_diff_bound(const KernelSpec& k, double eps, const std::vector<double>& s_grid) {
    if (!(eps > 0.0)) throw DomainError("kernel_diff_bound: eps must be > 0 (got " + detail::fmt(eps) + ")");
    std::vector<double> out;
    out.reserve(s_grid.size());
    for (double s : s_grid) {
        if (!(s >= 0.0)) throw DomainError("kernel_diff_bound: s must be >= 0 (got " + detail::fmt(s) + ")");
        out.push_back(k.integrated_increment(s, eps));
    }
    return out;
}

// --- admissibility ---------------------------------------------------------

struct SignSampling {
    std::size_t samples = 0;
    bool positive = true;
    bool nonincreasing = true;
    bool convex = true;
    double min_value = std::numeric_limits<double>::infinity();
    double max_derivative = -std::numeric_limits<double>::infinity();
    double min_second_derivative = std::numeric_limits<double>::infinity();
    std::optional<double> first_violation_time;
};

/// Log-spaced grid T*10^-decades ... T.
inline std::vector<double> log_grid(double T, std::size_t n, double decades = 8.0) {
    if (!(T > 0.0) || n < 2) throw DomainError("log_grid: needs T > 0 and n >= 2");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(n - 1);
        g[i] = T * std::pow(10.0, -decades * (1.0 - frac));
    }
    g.back() = T;
    return g;
}

/// Samples the sign conditions G > 0, G' <= 0, G'' >= 0 on a log grid in (0, T].
template <class K>
SignSampling sample_sign_conditions(const K& k, double T, std::size_t n_samples) {
    SignSampling r;
    for (double t : log_grid(T, n_samples)) {
        const double g = k.value(t);
        const double gd = k.derivative(t);
        const double gdd = k.second_derivative(t);
        ++r.samples;
        r.min_value = std::min(r.min_value, g);
        r.max_derivative = std::max(r.max_derivative, gd);
        r.min_second_derivative = std::min(r.min_second_derivative, gdd);
        const bool ok_g = g > 0.0, ok_d = gd <= 0.0, ok_dd = gdd >= 0.0;
        r.positive = r.positive && ok_g;
        r.nonincreasing = r.nonincreasing && ok_d;
        r.convex = r.convex && ok_dd;
        if (!(ok_g && ok_d && ok_dd) && !r.first_violation_time) r.first_violation_time = t;
    }
    return r;
}

struct AdmissibilityReport {
    SignSampling signs;
    bool finite_at_origin = true;                  // classical regime when true
    bool derivative_integrable_near_origin = true;  // G' in L1 near 0
    bool integrable_on_interval = true;             // G in L1(0,T)
    bool integrable_on_half_line = true;            // G in L1(R+)

    bool admissible() const noexcept {
        return signs.positive && signs.nonincreasing && signs.convex && integrable_on_interval;
    }
    const char* regime() const noexcept { return finite_at_origin ? "classical" : "singular"; }
};

inline AdmissibilityReport check_admissibility(const KernelSpec& k, double T, std::size_t n_samples) {
    if (!(T > 0.0)) throw DomainError("check_admissibility: T must be > 0");
    if (n_samples < 2) throw DomainError("check_admissibility: n_samples must be >= 2");
    AdmissibilityReport r;
    r.signs = sample_sign_conditions(k, T, n_samples);
    r.finite_at_origin = !k.singular_at_origin();
    // t^-alpha-1 is not integrable at 0 for alpha > 0; exponentials are.
    r.derivative_integrable_near_origin = !k.singular_at_origin();
    // alpha < 1 is enforced, so t^-alpha is integrable on (0,T).
    r.integrable_on_interval = true;
    r.integrable_on_half_line = k.equilibrium_modulus() == 0.0 && !k.singular_at_origin();
    return r;
}

// --- fading memory ---------------------------------------------------------

struct FadingMemoryResult {
    std::optional<double> shift;  // the threshold a~; empty when unattainable
    double tail_at_shift = 0.0;   // history_bound * (G(a~) - G(inf))
    std::string bound;

    bool attainable() const noexcept { return shift.has_value(); }
};

/// Smallest a~ such that every history with |E| <= history_bound gives
/// |int_0^inf G'(s + a) E(s) ds| < tolerance for all a > a~.
///
/// Uses int_a^inf |G'| = G(a) - G(inf), which is uniform over bounded histories.
inline FadingMemoryResult check_fading_memory(const KernelSpec& k, double history_bound, double tolerance) {
    if (!(tolerance > 0.0)) throw DomainError("check_fading_memory: tolerance must be > 0");
    if (!(history_bound >= 0.0)) throw DomainError("check_fading_memory: history bound must be >= 0");
    FadingMemoryResult r;
    r.bound = "|int_0^inf G'(s+a) E(s) ds| <= B * (G(a) - G(inf)), B = sup|E|";

    auto tail = [&](double a) { return history_bound * k.transient(a); };

    if (history_bound == 0.0 || k.transient(1.0) == 0.0) {
        r.shift = 0.0;
        return r;
    }
    if (!k.singular_at_origin() && tail(0.0) < tolerance) {
        r.shift = 0.0;
        r.tail_at_shift = tail(0.0);
        return r;
    }

    constexpr double log_lo = -700.0;
    constexpr double log_hi = 690.0;
    // Floored so the bracketing solver never sees log(0).
    auto f = [&](double la) {
        return std::log(std::max(tail(std::exp(la)), std::numeric_limits<double>::denorm_min())) - std::log(tolerance);
    };
    if (f(log_hi) >= 0.0) return r;  // tolerance below any achievable tail
    if (f(log_lo) < 0.0) {
        r.shift = 0.0;
        return r;
    }
    std::uintmax_t iters = 200;
    auto [a, b] = boost::math::tools::toms748_solve(f, log_lo, log_hi, boost::math::tools::eps_tolerance<double>(52), iters);
    (void)a;
    r.shift = std::exp(b);
    r.tail_at_shift = tail(*r.shift);
    return r;
}

}  // namespace memvisco
