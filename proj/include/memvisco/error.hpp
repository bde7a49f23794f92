#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace memvisco {

/// Argument outside the mathematical domain of an operation (t < 0, eps <= 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A model description that violates its own invariants.
class InvalidSpec : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a time integration cannot proceed (CFL refusal, blow-up, fixed-point divergence).
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what, std::optional<std::size_t> step = std::nullopt)
        : std::runtime_error(what), step_(step) {}

    std::optional<std::size_t> step() const noexcept { return step_; }

private:
    std::optional<std::size_t> step_;
};

/// Aggregated configuration failure; carries every violation found, not only the first.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> violations)
        : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out;
        for (const auto& s : v) {
            if (!out.empty()) out += "\n";
            out += s;
        }
        return out;
    }

    std::vector<std::string> violations_;
};

}  // namespace memvisco
