#pragma once

// Experiment configuration: INI text with a top-level `mode` key and the
// sections kernel, grid, time, data, solver, eps_sequence, diagnostics,
// admissibility, stress_test, output and tolerances. Validation collects every
// violation before failing.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include "json.hpp"

#include "memvisco/convergence.hpp"
#include "memvisco/error.hpp"
#include "memvisco/forcing.hpp"
#include "memvisco/grid.hpp"
#include "memvisco/kernel.hpp"
#include "memvisco/solver.hpp"

namespace memvisco {

enum class Mode { SingleRun, EpsSequence, Admissibility, StressTest };

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::SingleRun: return "single_run";
        case Mode::EpsSequence: return "eps_sequence";
        case Mode::Admissibility: return "admissibility";
        case Mode::StressTest: return "stress_test";
    }
    return "?";
}

/// A closed-form field initializer: zero, sin_pi_product or bump.
struct FieldInit {
    std::string kind = "zero";
    double amplitude = 1.0;
    std::array<int, 3> modes{1, 1, 1};
    double radius = 0.25;
    std::array<double, 3> center{0.5, 0.5, 0.5};

    Field build(const Grid& g) const {
        if (kind == "zero") return Field(g);
        if (kind == "sin_pi_product") return sin_pi_product(g, amplitude, modes);
        if (kind == "bump") return bump(g, amplitude, radius, center);
        throw InvalidSpec("unknown field initializer '" + kind + "'");
    }

    std::string describe() const {
        if (kind == "zero") return "zero";
        std::ostringstream os;
        os.precision(17);
        os << kind << "(amplitude=" << amplitude;
        if (kind == "sin_pi_product") os << ", modes=" << modes[0] << "," << modes[1] << "," << modes[2];
        if (kind == "bump") os << ", radius=" << radius << ", center=" << center[0] << "," << center[1] << "," << center[2];
        os << ")";
        return os.str();
    }
};

struct ForcingInit {
    FieldInit profile;              // kind "zero" means no forcing
    std::string time_profile = "one";  // one | linear | sin_pi | cos_pi
    bool manufactured = false;

    static double time_value(const std::string& p, double t) {
        if (p == "linear") return t;
        if (p == "sin_pi") return std::sin(std::numbers::pi * t);
        if (p == "cos_pi") return std::cos(std::numbers::pi * t);
        return 1.0;
    }

    Forcing build(const KernelSpec& k, double eps, const Grid& g) const {
        if (manufactured) return manufactured_forcing(k, eps, g);
        if (profile.kind == "zero") return Forcing::zero();
        const std::string tp = time_profile;
        return Forcing::separable(profile.build(g), [tp](double t) { return time_value(tp, t); },
                                  profile.describe() + "*" + tp);
    }
};

struct TimeConfig {
    double T = 1.0;
    std::optional<double> dt;
    double cfl = 0.5;
};

struct DiagnosticsConfig {
    bool energy = true;
    bool energy_bound = true;
    bool energy_decay = true;
    bool weak_residual = true;
    bool lemma = true;
    std::string reference = "none";  // none | standing_wave | manufactured
};

struct OutputConfig {
    std::size_t snapshot_stride = 10;
    std::string export_format = "csv";  // csv | binary | none
    bool plot_script = true;
};

struct AdmissibilityConfig {
    std::size_t samples = 200;
    double history_bound = 1.0;
    double fading_tolerance = 1e-3;
};

struct StressTestConfig {
    std::string history = "step";  // step | constant | ramp
    double strain = 1.0;
    double dt = 0.01;
    double T = 2.0;
    std::string form = "instantaneous";  // instantaneous | integrated
};

struct Tolerances {
    double reference_error = 5e-3;
    double cauchy = 5e-2;
    double energy_decay_safety = 2.0;
    double energy_residual = std::numeric_limits<double>::infinity();
    double weak_residual = 1e-2;
    double stress = 1e-6;
    double fixed_point = 1e-13;
};

struct ExperimentConfig {
    Mode mode = Mode::SingleRun;
    KernelSpec kernel = KernelSpec::constant(1.0);
    int dim = 1;
    std::array<std::size_t, 3> n{99, 99, 99};
    std::array<double, 3> extent{1.0, 1.0, 1.0};
    TimeConfig time;
    FieldInit u0;
    FieldInit u1;
    ForcingInit f;
    Formulation formulation = Formulation::IntegroDifferential;
    double eps = 0.05;
    SolverOptions solver;
    EpsSchedule eps_sequence;
    bool has_eps_sequence = false;
    DiagnosticsConfig diagnostics;
    OutputConfig output;
    AdmissibilityConfig admissibility;
    StressTestConfig stress;
    Tolerances tolerances;
    std::string source_text;

    Grid grid() const {
        if (dim == 1) return Grid::line(n[0], extent[0]);
        return Grid::box(n, extent);
    }

    /// dt from the explicit key or from the CFL number at the binding eps.
    double resolve_dt() const {
        if (time.dt) return *time.dt;
        double binding_eps = eps;
        if (mode == Mode::EpsSequence) binding_eps = eps_sequence.values().back();
        const TranslatedKernel k(kernel, binding_eps);
        if (formulation == Formulation::IntegralVolterra && binding_eps == 0.0 && kernel.singular_at_origin())
            return time.T / std::ceil(time.T / (time.cfl * grid().min_spacing()));
        return dt_for_cfl(grid(), k.initial_value(), time.cfl, time.T);
    }

    ProblemSpec problem(double eps_value) const {
        const Grid g = grid();
        const double dt = resolve_dt();
        ProblemSpec p(kernel, eps_value, g, time.T, dt, u0.build(g), u1.build(g), f.build(kernel, eps_value, g),
                      formulation);
        p.options = solver;
        return p;
    }
};

namespace detail {

inline std::size_t levenshtein(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline std::string nearest(const std::string& key, const std::vector<std::string>& candidates) {
    std::string best;
    std::size_t best_d = std::numeric_limits<std::size_t>::max();
    for (const auto& c : candidates) {
        const std::size_t d = levenshtein(key, c);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

inline std::string trim(std::string s) {
    const auto ws = " \t\r\n";
    s.erase(0, s.find_first_not_of(ws));
    const auto e = s.find_last_not_of(ws);
    s.erase(e == std::string::npos ? 0 : e + 1);
    return s;
}

inline const std::map<std::string, std::vector<std::string>>& known_keys() {
    static const std::map<std::string, std::vector<std::string>> keys = {
        {"", {"mode"}},
        {"kernel", {"family", "g0", "g_inf", "terms", "c", "alpha", "parts"}},
        {"grid", {"dim", "n", "extent"}},
        {"time", {"T", "dt", "cfl"}},
        {"data",
         {"preset", "u0", "u0_amplitude", "u0_modes", "u0_radius", "u0_center", "u1", "u1_amplitude", "u1_modes",
          "u1_radius", "u1_center", "f", "f_amplitude", "f_modes", "f_radius", "f_center", "f_time"}},
        {"solver", {"formulation", "eps", "memory_window", "cfl_limit", "fixed_point_max_iterations"}},
        {"eps_sequence", {"eps0", "ratio", "count"}},
        {"diagnostics", {"energy", "energy_bound", "energy_decay", "weak_residual", "lemma", "reference"}},
        {"admissibility", {"samples", "history_bound", "fading_tolerance"}},
        {"stress_test", {"history", "strain", "dt", "T", "form"}},
        {"output", {"snapshot_stride", "export_format", "plot_script"}},
        {"tolerances",
         {"reference_error", "cauchy", "energy_decay_safety", "energy_residual", "weak_residual", "stress",
          "fixed_point"}},
    };
    return keys;
}

inline const std::vector<std::string>& part_keys() {
    static const std::vector<std::string> k = {"family", "g0", "g_inf", "terms", "c", "alpha"};
    return k;
}

inline std::vector<std::string> all_qualified_keys() {
    std::vector<std::string> out;
    for (const auto& [sec, keys] : known_keys())
        for (const auto& k : keys) out.push_back(sec.empty() ? k : sec + "." + k);
    return out;
}

/// Typed access into one INI section with violation collection.
class SectionReader {
public:
    SectionReader(const boost::property_tree::ptree* node, std::string name, std::vector<std::string>& violations)
        : node_(node), name_(std::move(name)), violations_(violations) {}

    bool present() const noexcept { return node_ != nullptr; }
    bool has(const std::string& key) const { return node_ && node_->find(key) != node_->not_found(); }

    std::optional<std::string> raw(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        return trim(node_->find(key)->second.data());
    }

    std::string qualified(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

    void fail(const std::string& key, const std::string& msg) { violations_.push_back(qualified(key) + ": " + msg); }

    std::optional<double> number(const std::string& key) {
        auto r = raw(key);
        if (!r) return std::nullopt;
        try {
            std::size_t pos = 0;
            const double v = std::stod(*r, &pos);
            if (pos != r->size() || !std::isfinite(v)) throw std::invalid_argument("x");
            return v;
        } catch (const std::exception&) {
            fail(key, "expected a finite number (got '" + *r + "')");
            return std::nullopt;
        }
    }

    template <class Pred>
    void number_into(const std::string& key, double& out, Pred ok, const std::string& range) {
        if (auto v = number(key)) {
            if (ok(*v))
                out = *v;
            else
                fail(key, range + " required (got " + fmt(*v) + ")");
        }
    }

    std::optional<long long> integer(const std::string& key) {
        auto r = raw(key);
        if (!r) return std::nullopt;
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(*r, &pos);
            if (pos != r->size()) throw std::invalid_argument("x");
            return v;
        } catch (const std::exception&) {
            fail(key, "expected an integer (got '" + *r + "')");
            return std::nullopt;
        }
    }

    std::optional<bool> boolean(const std::string& key) {
        auto r = raw(key);
        if (!r) return std::nullopt;
        if (*r == "true" || *r == "1" || *r == "yes" || *r == "on") return true;
        if (*r == "false" || *r == "0" || *r == "no" || *r == "off") return false;
        fail(key, "expected true or false (got '" + *r + "')");
        return std::nullopt;
    }

    void boolean_into(const std::string& key, bool& out) {
        if (auto b = boolean(key)) out = *b;
    }

    std::optional<std::string> choice(const std::string& key, const std::vector<std::string>& allowed) {
        auto r = raw(key);
        if (!r) return std::nullopt;
        if (std::find(allowed.begin(), allowed.end(), *r) != allowed.end()) return r;
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        fail(key, "unknown value '" + *r + "' (expected one of: " + list + "; did you mean '" + nearest(*r, allowed) + "'?)");
        return std::nullopt;
    }

    std::optional<nlohmann::json> json(const std::string& key) {
        auto r = raw(key);
        if (!r) return std::nullopt;
        try {
            return nlohmann::json::parse(*r);
        } catch (const std::exception& e) {
            fail(key, "malformed list '" + *r + "'");
            return std::nullopt;
        }
    }

    /// Comma-separated numbers, or a JSON list.
    std::optional<std::vector<double>> number_list(const std::string& key) {
        auto r = raw(key);
        if (!r) return std::nullopt;
        std::string s = *r;
        if (!s.empty() && s.front() == '[') {
            auto j = json(key);
            if (!j) return std::nullopt;
            std::vector<double> out;
            if (!j->is_array()) {
                fail(key, "expected a list of numbers");
                return std::nullopt;
            }
            for (const auto& v : *j) {
                if (!v.is_number()) {
                    fail(key, "expected a list of numbers");
                    return std::nullopt;
                }
                out.push_back(v.get<double>());
            }
            return out;
        }
        std::vector<double> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            try {
                std::size_t pos = 0;
                const double v = std::stod(item, &pos);
                if (pos != item.size() || !std::isfinite(v)) throw std::invalid_argument("x");
                out.push_back(v);
            } catch (const std::exception&) {
                fail(key, "expected comma-separated numbers (got '" + s + "')");
                return std::nullopt;
            }
        }
        return out;
    }

private:
    const boost::property_tree::ptree* node_;
    std::string name_;
    std::vector<std::string>& violations_;
};

inline std::optional<KernelSpec> parse_kernel_section(SectionReader& r, std::vector<std::string>& violations,
                                                      const std::map<std::string, const boost::property_tree::ptree*>& sections,
                                                      bool allow_sum) {
    std::vector<std::string> families = {"constant", "prony", "powerlaw"};
    if (allow_sum) families.push_back("sum");
    if (!r.has("family")) {
        r.fail("family", "missing (expected one of: constant, prony, powerlaw" + std::string(allow_sum ? ", sum" : "") + ")");
        return std::nullopt;
    }
    auto fam = r.choice("family", families);
    if (!fam) return std::nullopt;
    const std::size_t before = violations.size();

    if (*fam == "constant") {
        double g0 = 1.0;
        if (!r.has("g0")) r.fail("g0", "missing (constant kernel needs g0 > 0)");
        r.number_into("g0", g0, [](double v) { return v > 0.0; }, "g0 > 0");
        if (violations.size() != before) return std::nullopt;
        return KernelSpec::constant(g0);
    }
    if (*fam == "prony") {
        double g_inf = 0.0;
        r.number_into("g_inf", g_inf, [](double v) { return v >= 0.0; }, "g_inf >= 0");
        std::vector<PronyTerm> terms;
        if (auto j = r.json("terms")) {
            bool ok = j->is_array();
            if (ok)
                for (const auto& t : *j) {
                    if (!t.is_array() || t.size() != 2 || !t[0].is_number() || !t[1].is_number()) {
                        ok = false;
                        break;
                    }
                    terms.push_back({t[0].get<double>(), t[1].get<double>()});
                }
            if (!ok) r.fail("terms", "expected a list of [weight, relaxation_time] pairs, e.g. [[0.5, 2.0]]");
            for (std::size_t i = 0; ok && i < terms.size(); ++i) {
                if (!(terms[i].weight > 0.0))
                    r.fail("terms", "term " + std::to_string(i) + ": weight g_i > 0 required (got " + fmt(terms[i].weight) + ")");
                if (!(terms[i].relaxation_time > 0.0))
                    r.fail("terms", "term " + std::to_string(i) + ": relaxation time tau_i > 0 required (got " +
                                        fmt(terms[i].relaxation_time) + ")");
            }
        }
        if (violations.size() != before) return std::nullopt;
        if (g_inf == 0.0 && terms.empty()) {
            r.fail("terms", "prony kernel needs g_inf > 0 or at least one term");
            return std::nullopt;
        }
        return KernelSpec::prony(g_inf, terms);
    }
    if (*fam == "powerlaw") {
        double c = 1.0, alpha = 0.5;
        if (!r.has("c")) r.fail("c", "missing (powerlaw kernel needs c > 0)");
        if (!r.has("alpha")) r.fail("alpha", "missing (powerlaw kernel needs alpha in (0,1))");
        r.number_into("c", c, [](double v) { return v > 0.0; }, "c > 0");
        r.number_into("alpha", alpha, [](double v) { return v > 0.0 && v < 1.0; }, "α in (0,1)");
        if (violations.size() != before) return std::nullopt;
        return KernelSpec::power_law(c, alpha);
    }
    // sum
    auto names = r.raw("parts");
    if (!names || names->empty()) {
        r.fail("parts", "missing (sum kernel needs parts = name1, name2 with sections [kernel.name])");
        return std::nullopt;
    }
    std::vector<KernelSpec> parts;
    std::stringstream ss(*names);
    std::string item;
    bool ok = true;
    int powerlaws = 0;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        const std::string sec = "kernel." + item;
        auto it = sections.find(sec);
        if (it == sections.end()) {
            r.fail("parts", "section [" + sec + "] is missing");
            ok = false;
            continue;
        }
        SectionReader pr(it->second, sec, violations);
        auto k = parse_kernel_section(pr, violations, sections, false);
        if (!k) {
            ok = false;
            continue;
        }
        if (k->singular_at_origin()) ++powerlaws;
        parts.push_back(*k);
    }
    if (powerlaws > 1) {
        r.fail("parts", "at most one powerlaw part is supported");
        ok = false;
    }
    if (!ok) return std::nullopt;
    return KernelSpec::sum(std::move(parts));
}

inline void parse_field_init(SectionReader& r, const std::string& prefix, FieldInit& out) {
    if (auto k = r.choice(prefix, {"zero", "sin_pi_product", "bump"})) out.kind = *k;
    r.number_into(prefix + "_amplitude", out.amplitude, [](double) { return true; }, "finite amplitude");
    if (auto m = r.number_list(prefix + "_modes")) {
        if (m->empty() || m->size() > 3) {
            r.fail(prefix + "_modes", "expected 1 to 3 positive integers");
        } else {
            for (std::size_t a = 0; a < m->size(); ++a) {
                const double v = (*m)[a];
                if (v < 1.0 || v != std::floor(v))
                    r.fail(prefix + "_modes", "modes must be positive integers (got " + fmt(v) + ")");
                else
                    out.modes[a] = static_cast<int>(v);
            }
        }
    }
    r.number_into(prefix + "_radius", out.radius, [](double v) { return v > 0.0; }, "radius > 0");
    if (auto c = r.number_list(prefix + "_center")) {
        if (c->empty() || c->size() > 3)
            r.fail(prefix + "_center", "expected 1 to 3 fractions in [0,1]");
        else
            for (std::size_t a = 0; a < c->size(); ++a) {
                if ((*c)[a] < 0.0 || (*c)[a] > 1.0)
                    r.fail(prefix + "_center", "center fractions must lie in [0,1]");
                else
                    out.center[a] = (*c)[a];
            }
    }
}

}  // namespace detail

/// Parses and validates configuration text. Throws ConfigError listing every violation.
inline ExperimentConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    std::vector<std::string> v;
    ExperimentConfig cfg;
    cfg.source_text = text;

    pt::ptree root;
    try {
        std::istringstream is(text);
        pt::read_ini(is, root);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError({"syntax error at line " + std::to_string(e.line()) + ": " + e.message()});
    }

    // Sections and unknown keys.
    std::map<std::string, const pt::ptree*> sections;
    const pt::ptree* top = &root;
    const auto& known = detail::known_keys();
    const auto qualified = detail::all_qualified_keys();
    std::vector<std::string> section_names;
    for (const auto& [sec, _] : known)
        if (!sec.empty()) section_names.push_back(sec);

    for (const auto& [name, node] : root) {
        const bool is_section = !node.empty() || (node.data().empty() && (known.count(name) || name.rfind("kernel.", 0) == 0));
        if (!is_section) {
            // top-level key
            if (name != "mode")
                v.push_back("unknown key '" + name + "' (nearest valid key: '" + detail::nearest(name, qualified) + "')");
            continue;
        }
        sections[name] = &node;
        const bool is_part = name.rfind("kernel.", 0) == 0 && name.size() > 7;
        if (!is_part && !known.count(name)) {
            v.push_back("unknown section [" + name + "] (nearest valid section: [" + detail::nearest(name, section_names) + "])");
            continue;
        }
        const auto& allowed = is_part ? detail::part_keys() : known.at(name);
        for (const auto& [key, leaf] : node) {
            (void)leaf;
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                std::vector<std::string> cands;
                for (const auto& a : allowed) cands.push_back(name + "." + a);
                v.push_back("unknown key '" + name + "." + key + "' (nearest valid key: '" +
                            detail::nearest(name + "." + key, cands) + "')");
            }
        }
    }
    auto section = [&](const std::string& n) {
        auto it = sections.find(n);
        return detail::SectionReader(it == sections.end() ? nullptr : it->second, n, v);
    };

    detail::SectionReader rt(top, "", v);
    if (!rt.has("mode"))
        v.push_back("mode: missing (expected one of: single_run, eps_sequence, admissibility, stress_test)");
    else if (auto m = rt.choice("mode", {"single_run", "eps_sequence", "admissibility", "stress_test"})) {
        if (*m == "single_run") cfg.mode = Mode::SingleRun;
        if (*m == "eps_sequence") cfg.mode = Mode::EpsSequence;
        if (*m == "admissibility") cfg.mode = Mode::Admissibility;
        if (*m == "stress_test") cfg.mode = Mode::StressTest;
    }
    const bool needs_solver = cfg.mode == Mode::SingleRun || cfg.mode == Mode::EpsSequence;

    // kernel
    auto rk = section("kernel");
    if (!rk.present())
        v.push_back("[kernel]: missing block (every mode needs a kernel)");
    else if (auto k = detail::parse_kernel_section(rk, v, sections, true))
        cfg.kernel = *k;

    // grid
    auto rg = section("grid");
    if (needs_solver && !rg.present()) v.push_back("[grid]: missing block (required by mode " + std::string(to_string(cfg.mode)) + ")");
    if (auto d = rg.integer("dim")) {
        if (*d == 1 || *d == 3)
            cfg.dim = static_cast<int>(*d);
        else
            rg.fail("dim", "dim must be 1 or 3 (got " + std::to_string(*d) + ")");
    }
    if (auto n = rg.number_list("n")) {
        if (n->size() == 1) *n = std::vector<double>(3, (*n)[0]);
        if (n->size() != 3) {
            rg.fail("n", "expected one count or one per axis");
        } else {
            for (std::size_t a = 0; a < 3; ++a) {
                const double val = (*n)[a];
                if (val < 3.0 || val != std::floor(val) || val > 1e7)
                    rg.fail("n", "interior points per axis must be an integer >= 3 (got " + detail::fmt(val) + ")");
                else
                    cfg.n[a] = static_cast<std::size_t>(val);
            }
        }
    }
    if (auto e = rg.number_list("extent")) {
        if (e->size() == 1) *e = std::vector<double>(3, (*e)[0]);
        if (e->size() != 3)
            rg.fail("extent", "expected one length or one per axis");
        else
            for (std::size_t a = 0; a < 3; ++a) {
                if (!((*e)[a] > 0.0))
                    rg.fail("extent", "extent > 0 required (got " + detail::fmt((*e)[a]) + ")");
                else
                    cfg.extent[a] = (*e)[a];
            }
    }

    // time
    auto rtm = section("time");
    if (needs_solver && !rtm.present()) v.push_back("[time]: missing block (required by mode " + std::string(to_string(cfg.mode)) + ")");
    rtm.number_into("T", cfg.time.T, [](double x) { return x > 0.0; }, "T > 0");
    if (auto dt = rtm.number("dt")) {
        if (*dt > 0.0)
            cfg.time.dt = *dt;
        else
            rtm.fail("dt", "dt > 0 required (got " + detail::fmt(*dt) + ")");
    }
    rtm.number_into("cfl", cfg.time.cfl, [](double x) { return x > 0.0 && x <= 1.0; }, "cfl in (0,1]");
    if (cfg.time.dt) {
        const double r = cfg.time.T / *cfg.time.dt;
        if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r))
            rtm.fail("dt", "T/dt must be an integer (T=" + detail::fmt(cfg.time.T) + ", dt=" + detail::fmt(*cfg.time.dt) + ")");
    }

    // data
    auto rd = section("data");
    if (auto p = rd.choice("preset", {"none", "manufactured"}); p && *p == "manufactured") {
        cfg.u0 = FieldInit{"sin_pi_product"};
        cfg.u1 = FieldInit{"zero"};
        cfg.f.manufactured = true;
        cfg.diagnostics.reference = "manufactured";
        for (const char* k : {"u0", "u1", "f"})
            if (rd.has(k)) rd.fail(k, "conflicts with preset = manufactured");
    }
    detail::parse_field_init(rd, "u0", cfg.u0);
    detail::parse_field_init(rd, "u1", cfg.u1);
    detail::parse_field_init(rd, "f", cfg.f.profile);
    if (auto tp = rd.choice("f_time", {"one", "linear", "sin_pi", "cos_pi"})) cfg.f.time_profile = *tp;

    // solver
    auto rs = section("solver");
    if (auto f = rs.choice("formulation", {"integro_differential", "integral_volterra"}))
        cfg.formulation = *f == "integral_volterra" ? Formulation::IntegralVolterra : Formulation::IntegroDifferential;
    rs.number_into("eps", cfg.eps, [](double x) { return x >= 0.0; }, "eps >= 0");
    if (auto w = rs.integer("memory_window")) {
        if (*w >= 0)
            cfg.solver.memory_window = static_cast<std::size_t>(*w);
        else
            rs.fail("memory_window", "memory_window >= 0 required");
    }
    rs.number_into("cfl_limit", cfg.solver.cfl_limit, [](double x) { return x > 0.0 && x <= 1.0; }, "cfl_limit in (0,1]");
    if (auto it = rs.integer("fixed_point_max_iterations")) {
        if (*it >= 1)
            cfg.solver.fixed_point_max_iterations = static_cast<std::size_t>(*it);
        else
            rs.fail("fixed_point_max_iterations", "at least 1 iteration required");
    }
    if (cfg.formulation == Formulation::IntegroDifferential && needs_solver && cfg.mode == Mode::SingleRun &&
        !(cfg.eps > 0.0))
        rs.fail("eps", "eps > 0 required for the integro-differential form");
    if (cfg.f.manufactured && !(cfg.eps > 0.0)) rs.fail("eps", "eps > 0 required by preset = manufactured");

    // eps sequence
    auto re = section("eps_sequence");
    cfg.has_eps_sequence = re.present();
    if (cfg.mode == Mode::EpsSequence && !re.present())
        v.push_back("[eps_sequence]: missing block (required by mode eps_sequence; keys eps0, ratio, count)");
    re.number_into("eps0", cfg.eps_sequence.eps0, [](double x) { return x > 0.0; }, "eps0 > 0");
    re.number_into("ratio", cfg.eps_sequence.ratio, [](double x) { return x > 0.0 && x < 1.0; }, "ratio in (0,1)");
    if (auto c = re.integer("count")) {
        if (*c >= 2 && *c <= 64)
            cfg.eps_sequence.count = static_cast<std::size_t>(*c);
        else
            re.fail("count", "count in [2, 64] required (at least 3 problems)");
    }

    // diagnostics
    auto rdg = section("diagnostics");
    rdg.boolean_into("energy", cfg.diagnostics.energy);
    rdg.boolean_into("energy_bound", cfg.diagnostics.energy_bound);
    rdg.boolean_into("energy_decay", cfg.diagnostics.energy_decay);
    rdg.boolean_into("weak_residual", cfg.diagnostics.weak_residual);
    rdg.boolean_into("lemma", cfg.diagnostics.lemma);
    if (auto r = rdg.choice("reference", {"none", "standing_wave", "manufactured"})) cfg.diagnostics.reference = *r;
    if (cfg.diagnostics.reference == "standing_wave") {
        if (cfg.kernel.family() != Family::Constant)
            rdg.fail("reference", "standing_wave reference needs a constant kernel");
        if (cfg.u0.kind != "sin_pi_product" || cfg.u1.kind != "zero" || cfg.f.profile.kind != "zero" || cfg.f.manufactured)
            rdg.fail("reference", "standing_wave reference needs u0 = sin_pi_product, u1 = zero, f = zero");
    }
    if (cfg.diagnostics.reference == "manufactured" && !cfg.f.manufactured)
        rdg.fail("reference", "manufactured reference needs [data] preset = manufactured");

    // admissibility
    auto ra = section("admissibility");
    if (auto s = ra.integer("samples")) {
        if (*s >= 2)
            cfg.admissibility.samples = static_cast<std::size_t>(*s);
        else
            ra.fail("samples", "samples >= 2 required");
    }
    ra.number_into("history_bound", cfg.admissibility.history_bound, [](double x) { return x >= 0.0; }, "history_bound >= 0");
    ra.number_into("fading_tolerance", cfg.admissibility.fading_tolerance, [](double x) { return x > 0.0; }, "fading_tolerance > 0");

    // stress test
    auto rst = section("stress_test");
    if (cfg.mode == Mode::StressTest && !rst.present())
        v.push_back("[stress_test]: missing block (required by mode stress_test)");
    if (auto h = rst.choice("history", {"step", "constant", "ramp"})) cfg.stress.history = *h;
    rst.number_into("strain", cfg.stress.strain, [](double) { return true; }, "finite strain");
    rst.number_into("dt", cfg.stress.dt, [](double x) { return x > 0.0; }, "dt > 0");
    rst.number_into("T", cfg.stress.T, [](double x) { return x > 0.0; }, "T > 0");
    if (auto f = rst.choice("form", {"instantaneous", "integrated"})) cfg.stress.form = *f;
    if (cfg.mode == Mode::StressTest && cfg.stress.form == "instantaneous" && cfg.kernel.singular_at_origin())
        rst.fail("form", "instantaneous form needs a kernel finite at t = 0; use form = integrated");

    // output
    auto ro = section("output");
    if (auto s = ro.integer("snapshot_stride")) {
        if (*s >= 1)
            cfg.output.snapshot_stride = static_cast<std::size_t>(*s);
        else
            ro.fail("snapshot_stride", "snapshot_stride >= 1 required");
    }
    if (auto f = ro.choice("export_format", {"csv", "binary", "none"})) cfg.output.export_format = *f;
    ro.boolean_into("plot_script", cfg.output.plot_script);

    // tolerances
    auto rtol = section("tolerances");
    auto positive = [](double x) { return x > 0.0; };
    rtol.number_into("reference_error", cfg.tolerances.reference_error, positive, "reference_error > 0");
    rtol.number_into("cauchy", cfg.tolerances.cauchy, positive, "cauchy > 0");
    rtol.number_into("energy_decay_safety", cfg.tolerances.energy_decay_safety, positive, "energy_decay_safety > 0");
    rtol.number_into("energy_residual", cfg.tolerances.energy_residual, positive, "energy_residual > 0");
    rtol.number_into("weak_residual", cfg.tolerances.weak_residual, positive, "weak_residual > 0");
    rtol.number_into("stress", cfg.tolerances.stress, positive, "stress > 0");
    rtol.number_into("fixed_point", cfg.tolerances.fixed_point, positive, "fixed_point > 0");
    cfg.solver.fixed_point_tolerance = cfg.tolerances.fixed_point;

    if (!v.empty()) throw ConfigError(std::move(v));
    return cfg;
}

/// Applies KEY=VAL to the [tolerances] block of an already valid config.
inline void apply_tolerance_override(ExperimentConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError({"--tol-override: expected KEY=VAL (got '" + assignment + "')"});
    std::string key = detail::trim(assignment.substr(0, eq));
    if (key.rfind("tolerances.", 0) == 0) key = key.substr(11);
    const std::string val = detail::trim(assignment.substr(eq + 1));
    std::map<std::string, double*> slots = {
        {"reference_error", &cfg.tolerances.reference_error}, {"cauchy", &cfg.tolerances.cauchy},
        {"energy_decay_safety", &cfg.tolerances.energy_decay_safety}, {"energy_residual", &cfg.tolerances.energy_residual},
        {"weak_residual", &cfg.tolerances.weak_residual}, {"stress", &cfg.tolerances.stress},
        {"fixed_point", &cfg.tolerances.fixed_point},
    };
    auto it = slots.find(key);
    if (it == slots.end()) {
        std::vector<std::string> names;
        for (const auto& [k, _] : slots) names.push_back(k);
        throw ConfigError({"--tol-override: unknown tolerance '" + key + "' (nearest valid key: '" +
                           detail::nearest(key, names) + "')"});
    }
    double x = 0.0;
    try {
        std::size_t pos = 0;
        x = std::stod(val, &pos);
        if (pos != val.size()) throw std::invalid_argument("x");
    } catch (const std::exception&) {
        throw ConfigError({"--tol-override: value for '" + key + "' is not a number ('" + val + "')"});
    }
    if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError({"--tol-override: '" + key + "' must be finite and > 0"});
    *it->second = x;
    cfg.solver.fixed_point_tolerance = cfg.tolerances.fixed_point;
}

}  // namespace memvisco
