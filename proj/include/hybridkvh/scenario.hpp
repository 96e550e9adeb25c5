#pragma once

#include <map>
#include <string>
#include <vector>

#include "hybridkvh/closure.hpp"
#include "hybridkvh/initial_states.hpp"

namespace hkvh {

// Scenario file: `key = value` lines under `[section]` headers, `#` starts a
// comment. Sections: grid, model, initial, closure, run, output.
struct ScenarioConfig {
    struct Grid {
        std::string mode = "finite_dim";
        long nq = 0, np = 0;
        long nx = 0;        // continuum only
        long n_levels = 2;  // finite_dim only
        double Lq = 2.0 * M_PI;
        double Lp = 0.0;
        double Lx = 2.0 * M_PI;

        bool operator==(const Grid&) const = default;
    } grid;

    struct Model {
        double hbar = 1.0, m = 1.0, M = 1.0, lambda = 0.0;
        std::string potential = "pendulum_bilinear";
        std::map<std::string, double> options;  // delta, alpha_0, alpha_x, alpha_y, alpha_z
        bool quantum_kinetic = true;

        bool operator==(const Model&) const = default;
    } model;

    InitialStateSpec initial;
    ClosureInit closure;

    struct Run {
        std::string kind = "wave";  // wave | closure
        double dt = 0.0;
        long steps = -1;
        long snapshot_every = 0;
        long diagnostics_every = 1;
        std::vector<std::string> diagnostics;  // madelung, loop (continuum wave runs)
        std::string closure_variant = "reduced";  // reduced | general
        double node_threshold = 1e-10;
        double boundary_mass_threshold = 1e-6;
        int threads = 0;  // 0: HYBRIDKVH_THREADS or auto

        bool operator==(const Run&) const = default;
    } run;

    // Poincare loop and its tracers (continuum runs with the `loop` diagnostic).
    struct Loop {
        double q0 = 0.0, p0 = 0.0, x0 = 0.0;
        double rq = 0.3, rp = 0.3, rx = 0.0;
        long points = 32;

        bool operator==(const Loop&) const = default;
    } loop;

    struct Output {
        std::string directory = "out";
        std::vector<std::string> formats{"csv"};  // csv, snapshot

        bool operator==(const Output&) const = default;
    } output;

    bool operator==(const ScenarioConfig&) const = default;

    PhaseGrid phase_grid() const;
    ModelParams model_params() const;
    PotentialSpec potential_spec() const;
    // make_hamiltonian plus the quantum_kinetic switch.
    HybridHamiltonian hamiltonian() const;
    bool wants(const std::string& diagnostic) const;
    bool writes(const std::string& format) const;
};

// Parses and validates. Errors are Validation with "line N: " prefixes
// (missing keys name their section instead).
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);
// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ScenarioConfig& config);
void validate_config(const ScenarioConfig& config);

struct BuiltinScenario {
    std::string name;
    std::string description;
    std::string text;
};
const std::vector<BuiltinScenario>& builtin_scenarios();
const BuiltinScenario& builtin_scenario(const std::string& name);

}  // namespace hkvh
