// memvisco: experiment runner for viscoelastic wave problems with memory.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "memvisco/memvisco.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw memvisco::ConfigError({"cannot read config file '" + path + "'"});
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::size_t threads_from_env() {
    if (const char* s = std::getenv("MEMVISCO_THREADS")) {
        try {
            const long v = std::stol(s);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring MEMVISCO_THREADS='" << s << "' (expected a positive integer)\n";
    }
    return 0;
}

void print_config_error(const memvisco::ConfigError& e) {
    std::cerr << "configuration invalid (" << e.violations().size() << " problem"
              << (e.violations().size() == 1 ? "" : "s") << "):\n";
    for (const auto& v : e.violations()) std::cerr << "  - " << v << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"memvisco: viscoelastic wave propagation with memory kernels"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "memvisco_out";
    std::size_t threads = 0;
    std::vector<std::string> overrides;

    auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
    run->add_option("config", config_path, "Experiment config (INI)")->required();
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();
    run->add_option("--threads", threads, "Worker threads (fallback: MEMVISCO_THREADS)");
    run->add_option("--tol-override", overrides, "Override a tolerance, KEY=VAL (repeatable)");

    std::string kernel_config;
    auto* check = app.add_subcommand("check-kernel", "Report kernel admissibility for a config file");
    check->add_option("config", kernel_config, "Experiment config (INI)")->required();

    app.add_subcommand("version", "Print the version");

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand("version")) {
        std::cout << "memvisco " << memvisco::kVersion << "\n";
        return memvisco::kExitPass;
    }

    if (app.got_subcommand("check-kernel")) {
        try {
            const auto cfg = memvisco::parse_config(read_file(kernel_config));
            const auto a = memvisco::check_admissibility(cfg.kernel, cfg.time.T, cfg.admissibility.samples);
            const auto fm = memvisco::check_fading_memory(cfg.kernel, cfg.admissibility.history_bound,
                                                          cfg.admissibility.fading_tolerance);
            std::cout << "kernel:                 " << cfg.kernel.describe() << "\n"
                      << "regime:                 " << a.regime() << "\n"
                      << "G > 0:                  " << (a.signs.positive ? "pass" : "FAIL") << "\n"
                      << "G' <= 0:                " << (a.signs.nonincreasing ? "pass" : "FAIL") << "\n"
                      << "G'' >= 0:               " << (a.signs.convex ? "pass" : "FAIL") << "\n"
                      << "G' in L1 near 0:        " << (a.derivative_integrable_near_origin ? "yes" : "no") << "\n"
                      << "G in L1(0,T):           " << (a.integrable_on_interval ? "yes" : "no") << "\n"
                      << "G in L1(0,inf):         " << (a.integrable_on_half_line ? "yes" : "no") << "\n"
                      << "fading-memory shift:    "
                      << (fm.shift ? memvisco::detail::num(*fm.shift) : std::string("unattainable")) << "\n"
                      << "verdict:                " << (a.admissible() ? "admissible" : "NOT admissible") << "\n";
            return a.admissible() ? memvisco::kExitPass : memvisco::kExitFail;
        } catch (const memvisco::ConfigError& e) {
            print_config_error(e);
            return memvisco::kExitConfig;
        }
    }

    if (threads == 0) threads = threads_from_env();
    memvisco::ExperimentConfig cfg;
    try {
        cfg = memvisco::parse_config(read_file(config_path));
        for (const auto& o : overrides) memvisco::apply_tolerance_override(cfg, o);
    } catch (const memvisco::ConfigError& e) {
        print_config_error(e);
        return memvisco::kExitConfig;
    }

    const auto result = memvisco::run_experiment(cfg, out_dir, threads);
    for (const auto& v : result.verdicts)
        std::cout << (v.passed ? "PASS " : "FAIL ") << v.check << " = " << memvisco::detail::num(v.value)
                  << " (threshold " << memvisco::detail::num(v.threshold) << ") " << v.note << "\n";
    if (!result.abort_message.empty()) std::cerr << "aborted: " << result.abort_message << "\n";
    std::cout << "verdict: " << (result.passed() ? "pass" : "fail") << " (exit " << result.exit_code << "), artifacts in "
              << out_dir << "\n";
    return result.exit_code;
}
