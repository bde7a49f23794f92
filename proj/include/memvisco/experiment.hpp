#pragma once

// Mode pipelines behind the command-line runner. Every artifact is written to
// a temporary file and renamed into place; data files carry no timestamps.

#include <boost/version.hpp>

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "memvisco/config.hpp"
#include "memvisco/convergence.hpp"
#include "memvisco/diagnostics.hpp"
#include "memvisco/error.hpp"
#include "memvisco/kernel.hpp"
#include "memvisco/solver.hpp"
#include "memvisco/stress.hpp"
#include "memvisco/trajectory.hpp"

namespace memvisco {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitConfig = 2, kExitAbort = 3, kExitIo = 4 };

struct Verdict {
    std::string check;
    double value = 0.0;
    double threshold = 0.0;
    bool passed = true;
    std::string note;
};

struct ExperimentResult {
    int exit_code = kExitPass;
    std::vector<Verdict> verdicts;
    std::vector<std::string> artifacts;
    std::string abort_message;

    bool passed() const noexcept { return exit_code == kExitPass; }
};

namespace detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp + " for writing");
        os << content;
        if (!os) throw std::runtime_error("write to " + tmp + " failed");
    }
    std::filesystem::rename(tmp, path);
}

inline std::string verdicts_csv(const std::vector<Verdict>& vs) {
    std::string s = "check,value,threshold,passed,note\n";
    for (const auto& v : vs)
        s += v.check + "," + num(v.value) + "," + num(v.threshold) + "," + (v.passed ? "1" : "0") + "," + v.note + "\n";
    return s;
}

inline std::string energy_csv(const EnergyLedger& l) {
    std::string s = "level,t,kinetic,elastic,memory,stored,dissipation,power,residual\n";
    for (std::size_t j = 0; j < l.rows.size(); ++j) {
        const auto& r = l.rows[j];
        s += std::to_string(j) + "," + num(r.time) + "," + num(r.kinetic) + "," + num(r.elastic) + "," + num(r.memory) +
             "," + num(r.stored()) + "," + num(r.dissipation) + "," + num(r.power) + "," +
             (r.residual_defined ? num(r.residual) : std::string()) + "\n";
    }
    return s;
}

inline std::string plot_script(bool energy, bool convergence) {
    std::string s =
        "#!/usr/bin/env python3\n"
        "\"\"\"Line charts of the CSV reports in this directory.\"\"\"\n"
        "import csv\n"
        "import os\n"
        "import matplotlib\n"
        "matplotlib.use('Agg')\n"
        "import matplotlib.pyplot as plt\n\n"
        "here = os.path.dirname(os.path.abspath(__file__))\n\n"
        "def load(name):\n"
        "    with open(os.path.join(here, name)) as fh:\n"
        "        return list(csv.DictReader(fh))\n\n";
    if (energy)
        s +=
            "rows = load('energy.csv')\n"
            "t = [float(r['t']) for r in rows]\n"
            "fig, ax = plt.subplots()\n"
            "for key in ('kinetic', 'elastic', 'memory', 'stored'):\n"
            "    ax.plot(t, [float(r[key]) for r in rows], label=key)\n"
            "ax.set_xlabel('t')\n"
            "ax.set_ylabel('energy')\n"
            "ax.legend()\n"
            "fig.savefig(os.path.join(here, 'energy.png'), dpi=120)\n\n";
    if (convergence)
        s +=
            "rows = load('convergence.csv')\n"
            "rows = [r for r in rows if r['distance']]\n"
            "eps = [float(r['eps']) for r in rows]\n"
            "d = [float(r['distance']) for r in rows]\n"
            "fig, ax = plt.subplots()\n"
            "ax.loglog(eps, d, 'o-', label='d_h')\n"
            "ax.set_xlabel('eps_h')\n"
            "ax.set_ylabel('L2(Q) distance')\n"
            "ax.legend()\n"
            "fig.savefig(os.path.join(here, 'convergence.png'), dpi=120)\n";
    return s;
}

inline nlohmann::json resolved_config(const ExperimentConfig& c) {
    nlohmann::json j;
    j["mode"] = to_string(c.mode);
    j["kernel"] = c.kernel.describe();
    j["grid"] = {{"dim", c.dim}, {"n", c.n}, {"extent", c.extent}};
    j["time"] = {{"T", c.time.T}, {"cfl", c.time.cfl}};
    if (c.time.dt) j["time"]["dt"] = *c.time.dt;
    j["data"] = {{"u0", c.u0.describe()},
                 {"u1", c.u1.describe()},
                 {"f", c.f.manufactured ? std::string("manufactured") : c.f.profile.describe() + "*" + c.f.time_profile}};
    j["solver"] = {{"formulation", to_string(c.formulation)},
                   {"eps", c.eps},
                   {"memory_window", c.solver.memory_window},
                   {"cfl_limit", c.solver.cfl_limit},
                   {"fixed_point_tolerance", c.solver.fixed_point_tolerance},
                   {"fixed_point_max_iterations", c.solver.fixed_point_max_iterations}};
    j["eps_sequence"] = {{"eps0", c.eps_sequence.eps0}, {"ratio", c.eps_sequence.ratio}, {"count", c.eps_sequence.count}};
    j["diagnostics"] = {{"energy", c.diagnostics.energy},          {"energy_bound", c.diagnostics.energy_bound},
                        {"energy_decay", c.diagnostics.energy_decay}, {"weak_residual", c.diagnostics.weak_residual},
                        {"lemma", c.diagnostics.lemma},            {"reference", c.diagnostics.reference}};
    j["admissibility"] = {{"samples", c.admissibility.samples},
                          {"history_bound", c.admissibility.history_bound},
                          {"fading_tolerance", c.admissibility.fading_tolerance}};
    j["stress_test"] = {{"history", c.stress.history}, {"strain", c.stress.strain}, {"dt", c.stress.dt},
                        {"T", c.stress.T},             {"form", c.stress.form}};
    j["output"] = {{"snapshot_stride", c.output.snapshot_stride},
                   {"export_format", c.output.export_format},
                   {"plot_script", c.output.plot_script}};
    auto tol = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf"); };
    j["tolerances"] = {{"reference_error", tol(c.tolerances.reference_error)},
                       {"cauchy", tol(c.tolerances.cauchy)},
                       {"energy_decay_safety", tol(c.tolerances.energy_decay_safety)},
                       {"energy_residual", tol(c.tolerances.energy_residual)},
                       {"weak_residual", tol(c.tolerances.weak_residual)},
                       {"stress", tol(c.tolerances.stress)},
                       {"fixed_point", tol(c.tolerances.fixed_point)}};
    return j;
}

class ArtifactWriter {
public:
    ArtifactWriter(std::filesystem::path dir, ExperimentResult& result) : dir_(std::move(dir)), result_(result) {
        std::filesystem::create_directories(dir_);
    }
    void write(const std::string& name, const std::string& content) {
        atomic_write(dir_ / name, content);
        result_.artifacts.push_back(name);
    }
    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
    ExperimentResult& result_;
};

inline void export_trajectory(ArtifactWriter& w, const std::string& stem, const TrajectorySolution& u,
                              const OutputConfig& out) {
    if (out.export_format == "csv") {
        std::ostringstream os;
        export_csv(u, os, out.snapshot_stride);
        w.write(stem + ".csv", os.str());
    } else if (out.export_format == "binary") {
        std::ostringstream os(std::ios::binary);
        export_binary(u, os);
        w.write(stem + ".bin", os.str());
    }
}

inline double standing_wave_error(const TrajectorySolution& u, const ExperimentConfig& c) {
    const Grid& g = u.grid();
    const double g0 = c.kernel.value(0.0);
    const double omega = std::sqrt(g0 * sine_eigenvalue(g, c.u0.modes));
    const Field S = sin_pi_product(g, c.u0.amplitude, c.u0.modes);
    double err = 0.0;
    for (std::size_t j = 0; j < u.levels(); ++j) {
        const double ct = std::cos(omega * u.time(j));
        auto v = u.level(j);
        for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(v[i] - S[i] * ct));
    }
    return err;
}

inline double manufactured_error(const TrajectorySolution& u) {
    TrajectorySolution exact(u.grid(), u.dt(), u.steps(), u.initial_velocity());
    for (std::size_t j = 0; j < exact.levels(); ++j) {
        const Field f = manufactured_solution(u.grid(), exact.time(j));
        std::copy(f.values().begin(), f.values().end(), exact.level(j).begin());
    }
    return l2_distance(u, exact);
}

inline void single_run(const ExperimentConfig& c, ArtifactWriter& w, ExperimentResult& r, nlohmann::json& info) {
    const ProblemSpec spec = c.problem(c.eps);
    info["dt"] = spec.dt;
    info["steps"] = spec.steps();
    info["spec_hash"] = spec.hash();
    const TrajectorySolution u = run(spec);
    export_trajectory(w, "trajectory", u, c.output);

    const bool kernel_finite = c.eps > 0.0 || !c.kernel.singular_at_origin();
    const TranslatedKernel ke(c.kernel, c.eps);

    if (c.diagnostics.energy && kernel_finite) {
        const EnergyLedger ledger = energy_ledger(u, ke, spec.f);
        w.write("energy.csv", energy_csv(ledger));
        const double res = ledger.max_abs_residual();
        r.verdicts.push_back({"energy_identity_residual", res, c.tolerances.energy_residual,
                              ledger.all_finite() && res <= c.tolerances.energy_residual, "max |d/dt stored - balance|"});
        if (c.diagnostics.energy_decay && spec.f.is_zero()) {
            const double tol = calibrate_decay_tolerance(spec, c.tolerances.energy_decay_safety);
            const DecayReport d = check_energy_decay(ledger, tol);
            r.verdicts.push_back({"energy_decay", d.max_increase, tol, d.passed,
                                  d.first_violation ? "first violation at level " + std::to_string(*d.first_violation)
                                                    : "nonincreasing within drift tolerance"});
        }
    }
    if (c.diagnostics.energy_bound && c.eps > 0.0 && c.eps <= 1.0) {
        const BoundReport b = check_energy_bound(u, c.kernel, c.eps, spec.f);
        r.verdicts.push_back({"energy_bound_ratio", b.max_ratio, 1.0, b.passed(),
                              "gamma=" + num(b.gamma) + " C=" + num(b.data_constant)});
    }
    if (c.diagnostics.weak_residual) {
        const auto battery = standard_battery(u.grid(), u.final_time());
        const auto res = weak_residual(u, ke, spec.u0, spec.u1, spec.f, battery);
        std::string s = "test_function,discrete,analytic\n";
        double worst = 0.0;
        for (const auto& x : res) {
            s += x.name + "," + num(x.discrete) + "," + num(x.analytic) + "\n";
            worst = std::max(worst, std::abs(x.discrete));
        }
        w.write("weak_residual.csv", s);
        r.verdicts.push_back({"weak_residual_max", worst, c.tolerances.weak_residual, worst <= c.tolerances.weak_residual,
                              "Laplacian on u"});
    }
    if (c.diagnostics.reference == "standing_wave") {
        const double e = standing_wave_error(u, c);
        r.verdicts.push_back({"standing_wave_max_error", e, c.tolerances.reference_error, e <= c.tolerances.reference_error,
                              "max over nodes and levels"});
    } else if (c.diagnostics.reference == "manufactured") {
        const double e = manufactured_error(u);
        r.verdicts.push_back({"manufactured_l2q_error", e, c.tolerances.reference_error, e <= c.tolerances.reference_error,
                              "L2(Q) distance to sin*(1+t^2)"});
    }
    if (c.output.plot_script) w.write("plot.py", plot_script(c.diagnostics.energy && kernel_finite, false));
}

inline void eps_sequence_run(const ExperimentConfig& c, ArtifactWriter& w, ExperimentResult& r, nlohmann::json& info,
                             std::size_t threads) {
    const ProblemSpec base = c.problem(c.eps_sequence.eps0);
    info["dt"] = base.dt;
    info["steps"] = base.steps();
    info["threads"] = resolve_threads(threads);
    const auto eps = c.eps_sequence.values();
    const auto trajs = run_eps_sequence(base, c.eps_sequence, threads);
    if (c.output.export_format != "none")
        for (std::size_t h = 0; h < trajs.size(); ++h) export_trajectory(w, "trajectory_h" + std::to_string(h), trajs[h], c.output);

    const ConvergenceReport rep = cauchy_report(trajs, eps, c.tolerances.cauchy, &c.kernel);
    std::vector<LemmaResidual> lemma;
    if (c.diagnostics.lemma) lemma = convergence_lemma_check(c.kernel, eps, standard_battery(base.grid, base.T), trajs);

    std::string s = "h,eps,distance,tail_distance,kernel_sup,max_abs_lemma_residual,min_lemma_majorant\n";
    for (std::size_t h = 0; h < eps.size(); ++h) {
        double worst = 0.0, maj = std::numeric_limits<double>::infinity();
        for (const auto& l : lemma)
            if (l.eps == eps[h]) {
                worst = std::max(worst, std::abs(l.residual));
                maj = std::min(maj, l.majorant);
            }
        s += std::to_string(h) + "," + num(eps[h]) + "," + (h < rep.distances.size() ? num(rep.distances[h]) : "") + "," +
             num(rep.tail_distances[h]) + "," + num(rep.kernel_sup[h]) + "," + (lemma.empty() ? "" : num(worst)) + "," +
             (lemma.empty() ? "" : num(maj)) + "\n";
    }
    w.write("convergence.csv", s);
    if (!lemma.empty()) {
        std::string ls = "eps,test_function,residual,majorant,within\n";
        for (const auto& l : lemma)
            ls += num(l.eps) + "," + l.test_function + "," + num(l.residual) + "," + num(l.majorant) + "," +
                  (l.within() ? "1" : "0") + "\n";
        w.write("lemma.csv", ls);
        std::size_t bad = 0;
        for (const auto& l : lemma) bad += l.within() ? 0 : 1;
        r.verdicts.push_back({"lemma_majorant_violations", static_cast<double>(bad), 0.0, bad == 0,
                              "residual <= M C |Omega| T sup|K^eps - K|"});
    }
    r.verdicts.push_back({"cauchy_monotone", rep.monotone ? 1.0 : 0.0, 1.0, rep.monotone || rep.all_zero,
                          rep.first_nonmonotone ? "first non-decrease at h=" + std::to_string(*rep.first_nonmonotone)
                                                : "d_h strictly decreasing"});
    r.verdicts.push_back({"cauchy_last_distance", rep.distances.back(), c.tolerances.cauchy,
                          rep.all_zero || rep.distances.back() < c.tolerances.cauchy, "L2(Q)"});
    r.verdicts.push_back({"fitted_rate", rep.rate.value_or(0.0), 0.0, true,
                          rep.rate ? "least squares log d_h vs log eps_h (measurement)" : "undefined"});
    if (c.output.plot_script) w.write("plot.py", plot_script(false, true));
}

inline void admissibility_run(const ExperimentConfig& c, ArtifactWriter& w, ExperimentResult& r) {
    const AdmissibilityReport a = check_admissibility(c.kernel, c.time.T, c.admissibility.samples);
    const FadingMemoryResult fm = check_fading_memory(c.kernel, c.admissibility.history_bound, c.admissibility.fading_tolerance);
    std::string s = "property,value\n";
    s += "kernel," + c.kernel.describe() + "\n";
    s += "regime," + std::string(a.regime()) + "\n";
    s += "positive," + std::to_string(a.signs.positive) + "\n";
    s += "nonincreasing," + std::to_string(a.signs.nonincreasing) + "\n";
    s += "convex," + std::to_string(a.signs.convex) + "\n";
    s += "min_value," + num(a.signs.min_value) + "\n";
    s += "max_derivative," + num(a.signs.max_derivative) + "\n";
    s += "min_second_derivative," + num(a.signs.min_second_derivative) + "\n";
    s += "finite_at_origin," + std::to_string(a.finite_at_origin) + "\n";
    s += "derivative_integrable_near_origin," + std::to_string(a.derivative_integrable_near_origin) + "\n";
    s += "integrable_on_interval," + std::to_string(a.integrable_on_interval) + "\n";
    s += "integrable_on_half_line," + std::to_string(a.integrable_on_half_line) + "\n";
    s += "fading_memory_attainable," + std::to_string(fm.attainable()) + "\n";
    s += "fading_memory_shift," + (fm.shift ? num(*fm.shift) : std::string()) + "\n";
    s += "fading_memory_bound,\"" + fm.bound + "\"\n";
    w.write("admissibility.csv", s);
    r.verdicts.push_back({"admissible", a.admissible() ? 1.0 : 0.0, 1.0, a.admissible(), a.regime()});
    r.verdicts.push_back({"fading_memory_shift", fm.shift.value_or(std::numeric_limits<double>::infinity()), 0.0, true,
                          fm.attainable() ? "tail below tolerance beyond this shift" : "unattainable"});
}

inline void stress_run(const ExperimentConfig& c, ArtifactWriter& w, ExperimentResult& r) {
    const auto& st = c.stress;
    const double ratio = st.T / st.dt;
    const std::size_t n = static_cast<std::size_t>(std::llround(ratio));
    if (n == 0 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio)
        throw InvalidSpec("stress_test: T/dt must be a positive integer");
    const StressForm form = st.form == "integrated" ? StressForm::Integrated : StressForm::Instantaneous;
    StrainHistory h;
    h.dt = st.dt;
    h.past_value = st.history == "constant" ? st.strain : 0.0;
    std::string s = "t,stress,expected,abs_error\n";
    double worst = 0.0;
    for (std::size_t j = 0; j <= n; ++j) {
        const double t = static_cast<double>(j) * st.dt;
        h.samples.push_back(st.history == "ramp" ? st.strain * t : st.strain);
        if (j == 0 && c.kernel.singular_at_origin()) continue;
        const double sigma = compute_stress(c.kernel, h, form);
        double expected = 0.0;
        if (st.history == "step") expected = c.kernel.value(t) * st.strain;
        if (st.history == "constant") expected = c.kernel.equilibrium_modulus() * st.strain;
        if (st.history == "ramp") expected = c.kernel.integrated(t) * st.strain;
        const double e = std::abs(sigma - expected);
        worst = std::max(worst, e);
        s += num(t) + "," + num(sigma) + "," + num(expected) + "," + num(e) + "\n";
    }
    w.write("stress.csv", s);
    r.verdicts.push_back({"stress_max_error", worst, c.tolerances.stress, worst <= c.tolerances.stress,
                          st.history + " history, " + st.form + " form"});
}

}  // namespace detail

/// Runs the configured pipeline, writing artifacts into `out_dir`.
inline ExperimentResult run_experiment(const ExperimentConfig& c, const std::filesystem::path& out_dir,
                                       std::size_t threads = 0) {
    ExperimentResult r;
    const auto t0 = std::chrono::steady_clock::now();
    nlohmann::json info = nlohmann::json::object();
    std::optional<detail::ArtifactWriter> w;
    try {
        w.emplace(out_dir, r);
        switch (c.mode) {
            case Mode::SingleRun: detail::single_run(c, *w, r, info); break;
            case Mode::EpsSequence: detail::eps_sequence_run(c, *w, r, info, threads); break;
            case Mode::Admissibility: detail::admissibility_run(c, *w, r); break;
            case Mode::StressTest: detail::stress_run(c, *w, r); break;
        }
        bool ok = true;
        for (const auto& v : r.verdicts) ok = ok && v.passed;
        r.exit_code = ok ? kExitPass : kExitFail;
    } catch (const SolverError& e) {
        r.exit_code = kExitAbort;
        r.abort_message = e.what();
        if (e.step()) info["abort_step"] = *e.step();
    } catch (const std::logic_error& e) {  // DomainError, InvalidSpec
        r.exit_code = kExitAbort;
        r.abort_message = e.what();
    } catch (const std::filesystem::filesystem_error& e) {
        r.exit_code = kExitIo;
        r.abort_message = e.what();
    } catch (const std::runtime_error& e) {
        r.exit_code = kExitIo;
        r.abort_message = e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!w) return r;
    try {
        w->write("summary.csv", detail::verdicts_csv(r.verdicts));
        nlohmann::json m;
        m["tool"] = {{"name", "memvisco"}, {"version", kVersion}};
        m["versions"] = {{"compiler", __VERSION__},
                         {"cxx_standard", static_cast<long>(__cplusplus)},
                         {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) +
                                       "." + std::to_string(BOOST_VERSION % 100)},
                         {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                               std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                               std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
        m["config_text"] = c.source_text;
        m["config_resolved"] = detail::resolved_config(c);
        m["run"] = info;
        m["timing_seconds"] = seconds;
        m["exit_code"] = r.exit_code;
        if (!r.abort_message.empty()) m["abort"] = r.abort_message;
        nlohmann::json vs = nlohmann::json::array();
        for (const auto& v : r.verdicts)
            vs.push_back({{"check", v.check},
                          {"value", std::isfinite(v.value) ? nlohmann::json(v.value) : nlohmann::json(detail::num(v.value))},
                          {"threshold", std::isfinite(v.threshold) ? nlohmann::json(v.threshold) : nlohmann::json("inf")},
                          {"passed", v.passed},
                          {"note", v.note}});
        m["verdicts"] = vs;
        std::vector<std::string> arts = r.artifacts;
        arts.push_back("manifest.json");
        m["artifacts"] = arts;
        w->write("manifest.json", m.dump(2) + "\n");
    } catch (const std::exception& e) {
        if (r.exit_code == kExitPass) r.exit_code = kExitIo;
        if (r.abort_message.empty()) r.abort_message = e.what();
    }
    return r;
}

}  // namespace memvisco
