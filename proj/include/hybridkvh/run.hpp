#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hybridkvh/scenario.hpp"

namespace hkvh {

const char* software_version();

// %.17g, with "nan" for any NaN.
std::string format_csv_float(double v);

// run.threads when positive, else HYBRIDKVH_THREADS, where 0 or unset means
// hardware concurrency. A malformed variable is a Validation error.
int resolve_threads(int configured);

// A monitored quantity and its bound: passes when value <= limit (upper),
// value >= limit (lower) or |value - target| <= limit (band, target set).
struct Monitor {
    std::string name;
    double value = 0.0;
    double limit = 0.0;
    bool lower = false;
    double target = std::numeric_limits<double>::quiet_NaN();

    bool passed() const {
        if (!std::isnan(target)) return std::abs(value - target) <= limit;
        return lower ? value >= limit : value <= limit;
    }
    std::string bound() const { return !std::isnan(target) ? "band" : lower ? "lower" : "upper"; }
};

struct RunResult {
    std::string directory;
    std::vector<Monitor> monitors;
    std::size_t steps = 0;
    int threads = 1;
    double wall_seconds = 0.0;

    bool all_passed() const;
};

// Wave runs write diagnostics.csv (plus loop.csv and trajectories.csv with
// the loop diagnostic) and psi_<step>.hkvh snapshots; closure runs write
// closure.csv and closure_<step>.hkvh holding D rho as (nq, np, n, n).
// Both write manifest.json, also when the solver fails (then with the error,
// before rethrowing). `out_dir` overrides output.directory when non-empty.
RunResult run_scenario(const ScenarioConfig& config, const std::string& out_dir = "");

}  // namespace hkvh
