#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hybridkvh/run.hpp"

namespace hkvh {

// Invariant probes shared by `hybridkvh check` and the acceptance binary.
// Each is deterministic for fixed inputs.

// RK4 against the dense exponential at dt and dt/2 over the same horizon.
struct OracleProbe {
    double error = 0.0;       // max |psi_rk4 - psi_exact| at dt
    double error_half = 0.0;  // same at dt/2
    double ratio() const { return error / error_half; }
    double order() const;  // log2(ratio)
};
OracleProbe oracle_probe(const ScenarioConfig& tiny);

// Worst |lhs - rhs| / max(1, |lhs|, |rhs|) of the defining pairing over
// `count` random band-limited Hermitian observables.
double pairing_probe(std::size_t count, std::uint64_t seed);

struct NamedValue {
    std::string name;
    double value = 0.0;
};
// Commutator identity on the 8x8x2 grid for a scalar pair, a constant
// (purely quantum) pair and a general matrix pair.
std::vector<NamedValue> commutator_probe();

struct EquivarianceProbe {
    double quantum = 0.0;  // worst Liouvillian or density residual under constant unitaries
    double shift = 0.0;    // worst residual under whole-cell q and p translations
};
EquivarianceProbe equivariance_probe();

// Evolves a lambda = 0 product state to t = steps * dt and compares with
// the uncoupled quantum evolution exp(-i H_q t / hbar).
struct MeanFieldProbe {
    double second_singular_value = 0.0;  // of the (z) x (level) unfolding, sigma_1 = 1
    double trace_distance = 0.0;
};
MeanFieldProbe mean_field_probe(const ScenarioConfig& finite_dim_wave);

// Two-snapshot residuals between `anchor` and `anchor + spacing` steps and
// between `anchor` and `anchor + spacing / 2` (spacing even).
struct MadelungLevels {
    double S = 0.0;  // D-weighted
    double S_masked = 0.0;
    double D = 0.0;
    double continuity = 0.0;
};
struct MadelungProbe {
    MadelungLevels coarse, fine;
};
MadelungProbe madelung_probe(const ScenarioConfig& continuum_wave, std::size_t anchor, std::size_t spacing);

// Reduced and general closure runs from the config's state with u = A.
struct ClosureProbe {
    double mass_drift = 0.0;
    double energy_drift = 0.0;  // relative
    double max_trace_dev = 0.0;
    double min_rho_eig = 0.0;
    double manifold_dev = 0.0;         // general step started on u = A
    double general_vs_reduced = 0.0;   // max over D and rho
    double auxiliary_identity = 0.0;   // at t = 0
};
ClosureProbe closure_probe(const ScenarioConfig& closure, std::size_t steps);

struct CheckReport {
    std::string suite;
    std::vector<Monitor> entries;

    bool all_passed() const;
    std::string to_json() const;
};

const std::vector<std::string>& check_suite_names();
// Unknown names are Validation errors.
CheckReport check_suite(const std::string& name);

}  // namespace hkvh
