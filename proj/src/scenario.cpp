#include "hybridkvh/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

namespace hkvh {

namespace {

enum class ValueType { Int, Double, String, Bool, List, OptionalDouble };

// One configurable key: parse and print go through the same accessors so
// that serialisation is the exact inverse of parsing.
struct KeySpec {
    std::string section;
    std::string key;
    ValueType type;
    std::function<void(ScenarioConfig&, const std::string&)> set;
    std::function<std::optional<std::string>(const ScenarioConfig&)> get;
};

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, r.ptr);
    // keep decimals recognisable as such
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct TypeError {
    std::string expected;
};

long to_int(const std::string& v) {
    long out = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw TypeError{"an integer"};
    return out;
}

double to_double(const std::string& v) {
    double out = 0.0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size() || v.empty()) throw TypeError{"a number"};
    return out;
}

bool to_bool(const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw TypeError{"true or false"};
}

std::string to_string_value(const std::string& v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    if (v.find('"') != std::string::npos) throw TypeError{"a string (unbalanced quotes)"};
    return v;
}

std::vector<std::string> to_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(to_string_value(v));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

template <class M>
KeySpec int_key(std::string section, std::string key, M member) {
    return {section, key, ValueType::Int, [member](ScenarioConfig& c, const std::string& v) { member(c) = to_int(v); },
            [member](const ScenarioConfig& c) -> std::optional<std::string> {
                return std::to_string(member(const_cast<ScenarioConfig&>(c)));
            }};
}

template <class M>
KeySpec double_key(std::string section, std::string key, M member) {
    return {section, key, ValueType::Double,
            [member](ScenarioConfig& c, const std::string& v) { member(c) = to_double(v); },
            [member](const ScenarioConfig& c) -> std::optional<std::string> {
                return format_double(member(const_cast<ScenarioConfig&>(c)));
            }};
}

template <class M>
KeySpec string_key(std::string section, std::string key, M member) {
    return {section, key, ValueType::String,
            [member](ScenarioConfig& c, const std::string& v) { member(c) = to_string_value(v); },
            [member](const ScenarioConfig& c) -> std::optional<std::string> {
                return member(const_cast<ScenarioConfig&>(c));
            }};
}

template <class M>
KeySpec bool_key(std::string section, std::string key, M member) {
    return {section, key, ValueType::Bool, [member](ScenarioConfig& c, const std::string& v) { member(c) = to_bool(v); },
            [member](const ScenarioConfig& c) -> std::optional<std::string> {
                return member(const_cast<ScenarioConfig&>(c)) ? "true" : "false";
            }};
}

template <class M>
KeySpec list_key(std::string section, std::string key, M member) {
    return {section, key, ValueType::List, [member](ScenarioConfig& c, const std::string& v) { member(c) = to_list(v); },
            [member](const ScenarioConfig& c) -> std::optional<std::string> {
                return join(member(const_cast<ScenarioConfig&>(c)));
            }};
}

KeySpec option_key(const std::string& name) {
    return {"model", name, ValueType::OptionalDouble,
            [name](ScenarioConfig& c, const std::string& v) { c.model.options[name] = to_double(v); },
            [name](const ScenarioConfig& c) -> std::optional<std::string> {
                const auto it = c.model.options.find(name);
                if (it == c.model.options.end()) return std::nullopt;
                return format_double(it->second);
            }};
}

#define HKVH_FIELD(expr) [](ScenarioConfig& c) -> auto& { return c.expr; }

const std::vector<KeySpec>& key_table() {
    static const std::vector<KeySpec> table{
        string_key("grid", "mode", HKVH_FIELD(grid.mode)),
        int_key("grid", "nq", HKVH_FIELD(grid.nq)),
        int_key("grid", "np", HKVH_FIELD(grid.np)),
        int_key("grid", "nx", HKVH_FIELD(grid.nx)),
        int_key("grid", "n_levels", HKVH_FIELD(grid.n_levels)),
        double_key("grid", "Lq", HKVH_FIELD(grid.Lq)),
        double_key("grid", "Lp", HKVH_FIELD(grid.Lp)),
        double_key("grid", "Lx", HKVH_FIELD(grid.Lx)),

        double_key("model", "hbar", HKVH_FIELD(model.hbar)),
        double_key("model", "m", HKVH_FIELD(model.m)),
        double_key("model", "M", HKVH_FIELD(model.M)),
        double_key("model", "lambda", HKVH_FIELD(model.lambda)),
        string_key("model", "potential", HKVH_FIELD(model.potential)),
        bool_key("model", "quantum_kinetic", HKVH_FIELD(model.quantum_kinetic)),
        option_key("delta"),
        option_key("alpha_0"),
        option_key("alpha_x"),
        option_key("alpha_y"),
        option_key("alpha_z"),

        string_key("initial", "name", HKVH_FIELD(initial.name)),
        double_key("initial", "q0", HKVH_FIELD(initial.q0)),
        double_key("initial", "p0", HKVH_FIELD(initial.p0)),
        double_key("initial", "sigma_q", HKVH_FIELD(initial.sigma_q)),
        double_key("initial", "sigma_p", HKVH_FIELD(initial.sigma_p)),
        {"initial", "kq", ValueType::Int,
         [](ScenarioConfig& c, const std::string& v) { c.initial.kq = static_cast<int>(to_int(v)); },
         [](const ScenarioConfig& c) -> std::optional<std::string> { return std::to_string(c.initial.kq); }},
        double_key("initial", "x0", HKVH_FIELD(initial.x0)),
        double_key("initial", "sigma_x", HKVH_FIELD(initial.sigma_x)),
        {"initial", "kx", ValueType::Int,
         [](ScenarioConfig& c, const std::string& v) { c.initial.kx = static_cast<int>(to_int(v)); },
         [](const ScenarioConfig& c) -> std::optional<std::string> { return std::to_string(c.initial.kx); }},
        {"initial", "level", ValueType::Int,
         [](ScenarioConfig& c, const std::string& v) { c.initial.level = static_cast<int>(to_int(v)); },
         [](const ScenarioConfig& c) -> std::optional<std::string> { return std::to_string(c.initial.level); }},
        double_key("initial", "theta", HKVH_FIELD(initial.theta)),
        double_key("initial", "phi", HKVH_FIELD(initial.phi)),

        double_key("closure", "q0", HKVH_FIELD(closure.q0)),
        double_key("closure", "p0", HKVH_FIELD(closure.p0)),
        double_key("closure", "sigma_q", HKVH_FIELD(closure.sigma_q)),
        double_key("closure", "sigma_p", HKVH_FIELD(closure.sigma_p)),
        double_key("closure", "theta", HKVH_FIELD(closure.theta)),
        double_key("closure", "phi", HKVH_FIELD(closure.phi)),
        double_key("closure", "texture", HKVH_FIELD(closure.texture)),
        double_key("closure", "texture_width", HKVH_FIELD(closure.texture_width)),
        double_key("closure", "mixing", HKVH_FIELD(closure.mixing)),
        double_key("closure", "perturbation", HKVH_FIELD(closure.perturbation)),

        string_key("run", "kind", HKVH_FIELD(run.kind)),
        double_key("run", "dt", HKVH_FIELD(run.dt)),
        int_key("run", "steps", HKVH_FIELD(run.steps)),
        int_key("run", "snapshot_every", HKVH_FIELD(run.snapshot_every)),
        int_key("run", "diagnostics_every", HKVH_FIELD(run.diagnostics_every)),
        list_key("run", "diagnostics", HKVH_FIELD(run.diagnostics)),
        string_key("run", "closure_variant", HKVH_FIELD(run.closure_variant)),
        double_key("run", "node_threshold", HKVH_FIELD(run.node_threshold)),
        double_key("run", "boundary_mass_threshold", HKVH_FIELD(run.boundary_mass_threshold)),
        {"run", "threads", ValueType::Int,
         [](ScenarioConfig& c, const std::string& v) { c.run.threads = static_cast<int>(to_int(v)); },
         [](const ScenarioConfig& c) -> std::optional<std::string> { return std::to_string(c.run.threads); }},

        double_key("loop", "q0", HKVH_FIELD(loop.q0)),
        double_key("loop", "p0", HKVH_FIELD(loop.p0)),
        double_key("loop", "x0", HKVH_FIELD(loop.x0)),
        double_key("loop", "rq", HKVH_FIELD(loop.rq)),
        double_key("loop", "rp", HKVH_FIELD(loop.rp)),
        double_key("loop", "rx", HKVH_FIELD(loop.rx)),
        int_key("loop", "points", HKVH_FIELD(loop.points)),

        string_key("output", "directory", HKVH_FIELD(output.directory)),
        list_key("output", "formats", HKVH_FIELD(output.formats)),
    };
    return table;
}

#undef HKVH_FIELD

const std::vector<std::string> kSections{"grid", "model", "initial", "closure", "run", "loop", "output"};

// Line numbers of the keys seen while parsing, for validation messages.
using LineMap = std::map<std::string, int>;

void check(bool ok, const LineMap& lines, const std::string& key, const std::string& message) {
    if (ok) return;
    const auto it = lines.find(key);
    const std::string where = it != lines.end() ? "line " + std::to_string(it->second) + ": " : "";
    fail(ErrorKind::Validation, where + key + ": " + message);
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

void validate_with_lines(const ScenarioConfig& c, const LineMap& lines) {
    check(c.grid.mode == "continuum" || c.grid.mode == "finite_dim", lines, "grid.mode",
          "must be continuum or finite_dim, got '" + c.grid.mode + "'");
    const bool continuum = c.grid.mode == "continuum";
    check(c.grid.nq >= 4 && c.grid.nq % 2 == 0, lines, "grid.nq", "must be even and >= 4, got " + std::to_string(c.grid.nq));
    check(c.grid.np >= 4 && c.grid.np % 2 == 0, lines, "grid.np", "must be even and >= 4, got " + std::to_string(c.grid.np));
    if (continuum)
        check(c.grid.nx >= 4 && c.grid.nx % 2 == 0, lines, "grid.nx", "must be even and >= 4, got " + std::to_string(c.grid.nx));
    else
        check(c.grid.n_levels >= 1, lines, "grid.n_levels", "must be >= 1, got " + std::to_string(c.grid.n_levels));
    check(c.grid.Lq > 0.0, lines, "grid.Lq", "must be positive");
    check(c.grid.Lp > 0.0, lines, "grid.Lp", "must be positive");
    if (continuum) check(c.grid.Lx > 0.0, lines, "grid.Lx", "must be positive");

    check(continuum || c.model.quantum_kinetic, lines, "model.quantum_kinetic", "can only be switched off on continuum grids");
    check(c.model.hbar > 0.0, lines, "model.hbar", "must be positive");
    check(c.model.m > 0.0, lines, "model.m", "must be positive");
    check(c.model.M > 0.0, lines, "model.M", "must be positive");
    check(contains(potential_names(), c.model.potential), lines, "model.potential",
          "unknown potential '" + c.model.potential + "'");

    check(contains(initial_state_names(), c.initial.name), lines, "initial.name",
          "unknown initial state '" + c.initial.name + "'");
    check(c.initial.sigma_q > 0.0, lines, "initial.sigma_q", "must be positive");
    check(c.initial.sigma_p > 0.0, lines, "initial.sigma_p", "must be positive");
    if (continuum) check(c.initial.sigma_x > 0.0, lines, "initial.sigma_x", "must be positive");
    else
        check(c.initial.level >= 0 && c.initial.level < c.grid.n_levels, lines, "initial.level",
              "must lie in [0, n_levels)");

    check(c.run.kind == "wave" || c.run.kind == "closure", lines, "run.kind", "must be wave or closure, got '" + c.run.kind + "'");
    check(c.run.dt > 0.0, lines, "run.dt", "must be positive");
    check(c.run.steps >= 0, lines, "run.steps", "must be >= 0");
    check(c.run.snapshot_every >= 0, lines, "run.snapshot_every", "must be >= 0");
    check(c.run.diagnostics_every >= 1, lines, "run.diagnostics_every", "must be >= 1");
    check(c.run.closure_variant == "reduced" || c.run.closure_variant == "general", lines, "run.closure_variant",
          "must be reduced or general");
    check(c.run.node_threshold > 0.0 && c.run.node_threshold < 1.0, lines, "run.node_threshold", "must lie in (0, 1)");
    check(c.run.boundary_mass_threshold > 0.0, lines, "run.boundary_mass_threshold", "must be positive");
    check(c.run.threads >= 0, lines, "run.threads", "must be >= 0");
    for (const auto& d : c.run.diagnostics) {
        check(d == "madelung" || d == "loop", lines, "run.diagnostics", "unknown diagnostic '" + d + "'");
        check(continuum && c.run.kind == "wave", lines, "run.diagnostics", "'" + d + "' needs a continuum wave run");
    }
    if (c.run.kind == "closure") {
        check(!continuum && c.grid.n_levels >= 2, lines, "run.kind", "closure runs need finite_dim with n_levels >= 2");
        check(c.closure.sigma_q > 0.0 && c.closure.sigma_p > 0.0, lines, "closure.sigma_q", "widths must be positive");
        check(c.closure.texture_width > 0.0, lines, "closure.texture_width", "must be positive");
        check(c.closure.mixing >= 0.0 && c.closure.mixing <= 1.0, lines, "closure.mixing", "must lie in [0, 1]");
    }
    check(c.loop.points >= 8 && c.loop.points % 2 == 0, lines, "loop.points", "must be even and >= 8");
    check(!c.output.directory.empty(), lines, "output.directory", "must not be empty");
    for (const auto& f : c.output.formats)
        check(f == "csv" || f == "snapshot", lines, "output.formats", "unknown format '" + f + "'");

    // remaining model constraints (e.g. potential/mode compatibility) come
    // from the constructors themselves
    try {
        const PhaseGrid g = c.phase_grid();
        g.validate();
        c.model_params().validate();
        if (c.run.kind == "wave") c.hamiltonian();
    } catch (const Error& e) {
        fail(ErrorKind::Validation, e.what());
    }
}

}  // namespace

PhaseGrid ScenarioConfig::phase_grid() const {
    if (grid.mode == "continuum")
        return PhaseGrid::continuum(std::size_t(grid.nq), std::size_t(grid.np), std::size_t(grid.nx), grid.Lq, grid.Lp,
                                    grid.Lx);
    return PhaseGrid::finite_dim(std::size_t(grid.nq), std::size_t(grid.np), std::size_t(grid.n_levels), grid.Lq, grid.Lp);
}

ModelParams ScenarioConfig::model_params() const {
    ModelParams p;
    p.hbar = model.hbar;
    p.m = model.m;
    p.M = model.M;
    p.lambda = model.lambda;
    return p;
}

PotentialSpec ScenarioConfig::potential_spec() const {
    PotentialSpec s;
    s.name = model.potential;
    s.options = model.options;
    return s;
}

HybridHamiltonian ScenarioConfig::hamiltonian() const {
    HybridHamiltonian H = make_hamiltonian(phase_grid(), model_params(), potential_spec());
    if (model.quantum_kinetic || !H.is_separable()) return H;
    SeparableHamiltonian h = H.separable();
    h.quantum_kinetic = false;
    return HybridHamiltonian(std::move(h));
}

bool ScenarioConfig::wants(const std::string& d) const { return contains(run.diagnostics, d); }
bool ScenarioConfig::writes(const std::string& f) const { return contains(output.formats, f); }

ScenarioConfig parse_config(const std::string& text) {
    ScenarioConfig c;
    LineMap lines;
    std::set<std::string> sections;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    const auto at = [&](const std::string& msg) { fail(ErrorKind::Validation, "line " + std::to_string(line_no) + ": " + msg); };
    while (std::getline(in, raw)) {
        ++line_no;
        // '#' starts a comment unless inside quotes
        bool quoted = false;
        std::size_t cut = raw.size();
        for (std::size_t k = 0; k < raw.size(); ++k) {
            if (raw[k] == '"') quoted = !quoted;
            if (raw[k] == '#' && !quoted) {
                cut = k;
                break;
            }
        }
        const std::string line = trim(raw.substr(0, cut));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') at("malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            if (!contains(kSections, section)) at("unknown section [" + section + "]");
            if (!sections.insert(section).second) at("duplicate section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) at("expected 'key = value', got '" + line + "'");
        if (section.empty()) at("key outside of any [section]");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto& table = key_table();
        const auto spec = std::find_if(table.begin(), table.end(),
                                       [&](const KeySpec& k) { return k.section == section && k.key == key; });
        if (spec == table.end()) at("unknown key '" + key + "' in [" + section + "]");
        const std::string full = section + "." + key;
        if (lines.count(full)) at("duplicate key '" + key + "' in [" + section + "]");
        lines[full] = line_no;
        try {
            spec->set(c, value);
        } catch (const TypeError& e) {
            at(full + ": expected " + e.expected + ", got '" + value + "'");
        }
    }
    for (const char* s : {"grid", "model", "run"})
        if (!sections.count(s)) fail(ErrorKind::Validation, std::string("missing required section [") + s + "]");
    std::vector<std::string> required{"grid.nq", "grid.np", "grid.Lp", "run.dt", "run.steps"};
    if (c.grid.mode == "continuum") required.push_back("grid.nx");
    for (const auto& k : required)
        if (!lines.count(k)) fail(ErrorKind::Validation, "missing required key '" + k + "'");
    validate_with_lines(c, lines);
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(bool(f), ErrorKind::Io, "cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

void validate_config(const ScenarioConfig& c) { validate_with_lines(c, {}); }

std::string serialize_config(const ScenarioConfig& c) {
    std::ostringstream out;
    out << "# hybridkvh scenario\n";
    for (const auto& section : kSections) {
        out << "\n[" << section << "]\n";
        for (const auto& k : key_table()) {
            if (k.section != section) continue;
            const auto v = k.get(c);
            if (!v) continue;
            const bool quote = (k.type == ValueType::String || k.type == ValueType::List);
            out << k.key << " = " << (quote ? "\"" + *v + "\"" : *v) << "\n";
        }
    }
    return out.str();
}

// --- built-in scenarios ------------------------------------------------------

namespace {

ScenarioConfig canonical_wave(const std::string& potential) {
    ScenarioConfig c;
    c.grid.mode = "finite_dim";
    c.grid.nq = 64;
    c.grid.np = 64;
    c.grid.n_levels = 2;
    c.grid.Lp = 12.0;
    c.model.lambda = 0.1;
    c.model.potential = potential;
    if (potential == "analytic_alpha") c.model.options = {{"alpha_x", 1.0}, {"alpha_z", 0.5}};
    c.initial.q0 = 0.5;
    c.initial.sigma_q = 0.4;
    c.initial.sigma_p = 0.6;
    c.initial.theta = 1.0;
    c.run.dt = 1e-3;
    c.run.steps = 2000;
    c.run.snapshot_every = 500;
    c.run.diagnostics_every = 10;
    c.output.directory = "out/" + std::string(potential == "analytic_alpha" ? "canonical_alpha" : "canonical_wave");
    c.output.formats = {"csv", "snapshot"};
    return c;
}

std::vector<BuiltinScenario> make_builtins() {
    std::vector<BuiltinScenario> out;
    const auto add = [&](std::string name, std::string description, const ScenarioConfig& c) {
        validate_config(c);
        out.push_back({std::move(name), std::move(description), serialize_config(c)});
    };

    add("canonical_wave", "two-level pendulum_bilinear wave run, 64x64 phase grid, 2000 steps",
        canonical_wave("pendulum_bilinear"));
    add("canonical_alpha", "two-level analytic_alpha wave run to T = 2", canonical_wave("analytic_alpha"));

    ScenarioConfig tiny;
    tiny.grid.nq = 8;
    tiny.grid.np = 8;
    tiny.grid.Lp = 8.0;
    tiny.model.lambda = 0.1;
    tiny.initial.sigma_p = 0.8;
    tiny.run.dt = 1e-3;
    tiny.run.steps = 100;
    // eight p points cannot resolve the decay of the bump; the oracle compares
    // against the same discrete operator, so edge mass is not an error here
    tiny.run.boundary_mass_threshold = 1e-3;
    tiny.output.directory = "out/tiny_oracle";
    add("tiny_oracle", "8x8 phase grid with two levels, 100 steps (dense-exponential oracle size)", tiny);

    ScenarioConfig hydro;
    hydro.grid.mode = "continuum";
    hydro.grid.nq = 32;
    hydro.grid.np = 64;
    hydro.grid.nx = 32;
    hydro.grid.Lp = 4.0 * M_PI;
    hydro.model.lambda = 0.1;
    hydro.initial.q0 = 0.3;
    hydro.initial.p0 = 0.4;
    hydro.initial.kx = 1;
    hydro.initial.sigma_x = 0.6;
    hydro.run.dt = 1e-3;
    hydro.run.steps = 400;
    hydro.run.diagnostics_every = 2;
    hydro.run.diagnostics = {"madelung", "loop"};
    hydro.loop = {0.3, 0.4, 0.0, 0.3, 0.3, 0.4, 32};
    hydro.output.directory = "out/madelung_continuum";
    add("madelung_continuum", "continuum wave run with Madelung residuals and a Poincare loop", hydro);

    ScenarioConfig closure;
    closure.grid.nq = 64;
    closure.grid.np = 64;
    closure.grid.n_levels = 2;
    closure.grid.Lp = 12.0;
    closure.model.lambda = 0.5;
    closure.model.potential = "analytic_alpha";
    closure.model.options = {{"alpha_x", 1.0}, {"alpha_z", 0.3}};
    closure.closure.p0 = 0.5;
    closure.closure.texture = 0.5;
    closure.run.kind = "closure";
    closure.run.dt = 1e-3;
    closure.run.steps = 2000;
    closure.run.diagnostics_every = 10;
    closure.output.directory = "out/closure_reduced";
    add("closure_reduced", "mean-field closure on u = p dq, analytic_alpha, 2000 steps", closure);

    closure.run.closure_variant = "general";
    closure.closure.perturbation = 0.05;
    closure.output.directory = "out/closure_general";
    add("closure_general", "mean-field closure with a perturbed covector u, 2000 steps", closure);
    return out;
}

}  // namespace

const std::vector<BuiltinScenario>& builtin_scenarios() {
    static const std::vector<BuiltinScenario> all = make_builtins();
    return all;
}

const BuiltinScenario& builtin_scenario(const std::string& name) {
    for (const auto& s : builtin_scenarios())
        if (s.name == name) return s;
    fail(ErrorKind::Validation, "unknown scenario '" + name + "'");
}

}  // namespace hkvh
