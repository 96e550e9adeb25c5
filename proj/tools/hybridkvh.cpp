// hybridkvh: run scenarios, invariant suites and list built-ins.
// Exit codes: 0 success, 1 validation/usage, 2 runtime or I/O, 3 monitor failure.
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "hybridkvh/check.hpp"
#include "hybridkvh/run.hpp"
#include "hybridkvh/scenario.hpp"

namespace {

enum Exit { kOk = 0, kValidation = 1, kRuntime = 2, kMonitor = 3 };

int exit_code(const hkvh::Error& e) {
    switch (e.kind()) {
        case hkvh::ErrorKind::Validation:
        case hkvh::ErrorKind::Shape:
        case hkvh::ErrorKind::Unsupported:
            return kValidation;
        default:
            return kRuntime;
    }
}

int do_run(const std::string& config_path, const std::string& out, bool quiet) {
    const hkvh::ScenarioConfig config = hkvh::load_config(config_path);
    const hkvh::RunResult r = hkvh::run_scenario(config, out);
    if (!quiet) {
        std::printf("%s: %zu steps, %d threads, %.2f s\n", r.directory.c_str(), r.steps, r.threads, r.wall_seconds);
        for (const auto& m : r.monitors)
            std::printf("  %-18s %-4s %.3e (%s %.1e)\n", m.name.c_str(), m.passed() ? "ok" : "FAIL", m.value,
                        m.bound().c_str(), m.limit);
    }
    return r.all_passed() ? kOk : kMonitor;
}

int do_check(const std::string& suite, const std::string& report_path) {
    hkvh::set_fft_threads(hkvh::resolve_threads(0));
    const hkvh::CheckReport r = hkvh::check_suite(suite);
    const std::string text = r.to_json();
    std::cout << text << '\n';
    if (!report_path.empty()) {
        std::ofstream f(report_path, std::ios::trunc);
        if (!f) throw hkvh::Error(hkvh::ErrorKind::Io, "cannot write report '" + report_path + "'");
        f << text << '\n';
    }
    return r.all_passed() ? kOk : kMonitor;
}

int do_scenarios(const std::string& name) {
    if (!name.empty()) {
        std::cout << hkvh::builtin_scenario(name).text;
        return kOk;
    }
    for (const auto& s : hkvh::builtin_scenarios()) std::printf("%-20s %s\n", s.name.c_str(), s.description.c_str());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid quantum-classical wave dynamics on phase-space grids"};
    app.require_subcommand(1);
    app.set_version_flag("--version", hkvh::software_version());

    std::string config_path, out_dir;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "Run a scenario file");
    run->add_option("--config", config_path, "Scenario file")->required();
    run->add_option("--out", out_dir, "Output directory (overrides output.directory)");
    run->add_flag("--quiet", quiet, "Suppress the monitor summary");

    std::string suite, report_path;
    auto* check = app.add_subcommand("check", "Run an invariant suite and print a JSON report");
    check->add_option("--suite", suite, "identities, convergence or closure")->required();
    check->add_option("--report", report_path, "Also write the report to this file");

    std::string scenario_name;
    auto* scenarios = app.add_subcommand("scenarios", "List built-in scenarios, or print one");
    scenarios->add_option("name", scenario_name, "Scenario to print");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kValidation;
    }

    try {
        if (*run) return do_run(config_path, out_dir, quiet);
        if (*check) return do_check(suite, report_path);
        return do_scenarios(scenario_name);
    } catch (const hkvh::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kRuntime;
    }
}
