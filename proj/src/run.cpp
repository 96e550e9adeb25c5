#include "hybridkvh/run.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <thread>


#include "hybridkvh/closure.hpp"
#include "hybridkvh/densities.hpp"
#include "hybridkvh/madelung.hpp"
#include "hybridkvh/propagator.hpp"
#include "hybridkvh/snapshot.hpp"
#include "report_json.hpp"

#ifndef HKVH_VERSION
#define HKVH_VERSION "0.0.0"
#endif

namespace hkvh {

namespace fs = std::filesystem;

const char* software_version() { return HKVH_VERSION; }

std::string format_csv_float(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int resolve_threads(int configured) {
    int threads = configured;
    if (threads <= 0) {
        threads = 0;
        if (const char* env = std::getenv("HYBRIDKVH_THREADS"); env && *env) {
            char* end = nullptr;
            const long v = std::strtol(env, &end, 10);
            require(*end == '\0' && v >= 0 && v <= 4096, ErrorKind::Validation,
                    std::string("HYBRIDKVH_THREADS must be a non-negative integer, got '") + env + "'");
            threads = static_cast<int>(v);
        }
    }
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    return threads;
}

bool RunResult::all_passed() const {
    for (const auto& m : monitors)
        if (!m.passed()) return false;
    return true;
}

namespace {

// Running extremes of the monitored columns.
struct Tracker {
    double first = 0.0;
    double worst = 0.0;  // max |x - first| or min / max x depending on use
    bool started = false;

    void drift(double x) {
        if (!started) {
            first = x;
            started = true;
        }
        worst = std::max(worst, std::abs(x - first));
    }
    void minimum(double x) {
        worst = started ? std::min(worst, x) : x;
        started = true;
    }
    void maximum(double x) {
        worst = started ? std::max(worst, x) : x;
        started = true;
    }
};

class CsvWriter {
public:
    CsvWriter() = default;
    CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path, std::ios::trunc) {
        require(bool(out_), ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
        for (std::size_t k = 0; k < header.size(); ++k) out_ << (k ? "," : "") << header[k];
        out_ << '\n';
    }
    bool open() const { return out_.is_open(); }
    void row(const std::vector<double>& values) {
        if (!open()) return;
        for (std::size_t k = 0; k < values.size(); ++k) out_ << (k ? "," : "") << format_csv_float(values[k]);
        out_ << '\n';
    }
    void raw(const std::string& line) {
        if (open()) out_ << line << '\n';
    }
    void flush() {
        if (!open()) return;
        out_.flush();
        require(bool(out_), ErrorKind::Io, "CSV write failed");
    }

private:
    std::ofstream out_;
};

std::string step_name(const std::string& prefix, std::size_t step) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%07zu.hkvh", prefix.c_str(), step);
    return buf;
}

json monitors_json(const std::vector<Monitor>& monitors) {
    json out = json::array();
    for (const auto& m : monitors) out.push_back(monitor_json(m));
    return out;
}

void write_manifest(const fs::path& dir, const ScenarioConfig& config, const RunResult& result,
                    const std::string& error) {
    json m;
    m["software"] = "hybridkvh";
    m["version"] = software_version();
    m["kind"] = config.run.kind;
    m["status"] = error.empty() ? (result.all_passed() ? "ok" : "monitor_failure") : "error";
    if (!error.empty()) m["error"] = error;
    m["steps_completed"] = result.steps;
    m["threads"] = result.threads;
    m["wall_seconds"] = result.wall_seconds;
    m["monitors"] = monitors_json(result.monitors);
    m["config"] = serialize_config(config);
    std::ofstream f(dir / "manifest.json", std::ios::trunc);
    require(bool(f), ErrorKind::Io, "cannot write manifest in '" + dir.string() + "'");
    f << m.dump(2) << '\n';
}

// --- wave runs ---------------------------------------------------------------

void run_wave(const ScenarioConfig& c, const fs::path& dir, RunResult& result) {
    const PhaseGrid g = c.phase_grid();
    const ModelParams params = c.model_params();
    const HybridHamiltonian H = c.hamiltonian();
    const HybridWavefunction psi0 = make_initial_state(g, c.initial);
    const bool csv = c.writes("csv");
    const bool snapshots = c.writes("snapshot") && c.run.snapshot_every > 0;
    const bool madelung = c.wants("madelung");
    const bool loop = c.wants("loop");

    std::vector<std::string> header{"t",       "norm",      "energy_re",     "energy_im",
                                    "trace_D", "rho_c_min", "rho_q_min_eig", "boundary_mass_p"};
    if (madelung) header.insert(header.end(), {"madelung_S", "madelung_D", "continuity"});
    CsvWriter diag = csv ? CsvWriter(dir / "diagnostics.csv", header) : CsvWriter();
    CsvWriter loop_csv = csv && loop ? CsvWriter(dir / "loop.csv", {"t", "loop_integral", "lhs_rate", "rhs_rate"})
                                     : CsvWriter();
    CsvWriter traj_csv = csv && loop ? CsvWriter(dir / "trajectories.csv", {"t", "id", "q", "p", "x"}) : CsvWriter();

    std::unique_ptr<LagrangianTracker> tracker;
    if (loop)
        tracker = std::make_unique<LagrangianTracker>(
            H, make_loop({c.loop.q0, c.loop.p0, c.loop.x0}, {c.loop.rq, c.loop.rp, c.loop.rx}, std::size_t(c.loop.points)),
            TrajectoryEnsemble{}, c.run.node_threshold);
    std::size_t loop_written = 0;

    Tracker norm, energy, energy_scale, imag_ratio, trace, rho_q, rho_c, boundary, loop_error, loop_scale;
    std::optional<RunState> previous;
    const std::size_t steps = std::size_t(c.run.steps);

    const auto on_step = [&](const RunState& s) {
        result.steps = s.step;
        if (s.step % std::size_t(c.run.diagnostics_every) != 0 && s.step != steps) return;
        const double n2 = s.psi.norm2();
        const cplx h = total_energy(s.psi, H);
        const DensityDiagnostics d = density_diagnostics(s.psi, params.hbar);
        norm.drift(n2);
        energy.drift(h.real());
        energy_scale.maximum(std::abs(h.real()));
        imag_ratio.maximum(std::abs(h.imag()) / std::max(std::abs(h.real()), 1e-300));
        trace.drift(d.trace_D);
        rho_q.minimum(d.rho_q_min_eig);
        rho_c.minimum(d.rho_c_min);
        boundary.maximum(d.boundary_mass_p);
        std::vector<double> row{s.t, n2, h.real(), h.imag(), d.trace_D, d.rho_c_min, d.rho_q_min_eig, d.boundary_mass_p};
        if (madelung) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            if (previous) {
                const std::array<HybridWavefunction, 2> pair{previous->psi, s.psi};
                const double delta = s.t - previous->t;
                const MadelungResiduals r = madelung_residuals(pair, delta, H, c.run.node_threshold);
                const ResidualField cont = continuity_residual(pair, delta, H, c.run.node_threshold);
                row.insert(row.end(), {r.S.weighted, r.D.norm, cont.norm});
            } else {
                row.insert(row.end(), {nan, nan, nan});
            }
            previous = s;
        }
        diag.row(row);
        if (tracker) {
            tracker->observe(s.psi, s.t);
            const auto& samples = tracker->loop_samples();
            for (; loop_written < samples.size(); ++loop_written) {
                const LoopSample& ls = samples[loop_written];
                loop_csv.row({ls.t, ls.loop_integral, ls.lhs_rate, ls.rhs_rate});
                loop_error.maximum(std::abs(ls.lhs_rate - ls.rhs_rate));
                loop_scale.maximum(std::abs(ls.rhs_rate));
            }
            const auto& pts = tracker->loop().points;
            for (std::size_t k = 0; k < pts.size(); ++k)
                traj_csv.raw(format_csv_float(s.t) + "," + std::to_string(k) + "," + format_csv_float(pts[k][0]) + "," +
                             format_csv_float(pts[k][1]) + "," + format_csv_float(pts[k][2]));
        }
    };
    const auto on_snapshot = [&](const RunState& s) {
        if (snapshots) write_snapshot((dir / step_name("psi", s.step)).string(), snapshot_of(s.psi));
    };

    EvolveOptions opts;
    opts.dt = c.run.dt;
    opts.steps = steps;
    opts.snapshot_every = std::size_t(c.run.snapshot_every);
    try {
        evolve(psi0, H, opts, on_step, on_snapshot);
    } catch (...) {
        diag.flush();
        loop_csv.flush();
        traj_csv.flush();
        throw;
    }
    diag.flush();
    loop_csv.flush();
    traj_csv.flush();

    auto& mon = result.monitors;
    mon.push_back({"norm_drift", norm.worst / std::max(norm.first, 1e-300), 1e-8});
    mon.push_back({"energy_drift", energy.worst / std::max(std::abs(energy.first), 1e-300), 1e-6});
    mon.push_back({"energy_imag_ratio", imag_ratio.worst, 1e-10});
    mon.push_back({"boundary_mass_p", boundary.worst, c.run.boundary_mass_threshold});
    if (g.mode == Mode::FiniteDim) {
        mon.push_back({"trace_D_drift", trace.worst, 1e-10});
        mon.push_back({"rho_q_min_eig", rho_q.worst, -1e-10, true});
    }
    // the nonnegativity claim concerns the analytic_alpha coupling only
    if (c.model.potential == "analytic_alpha") mon.push_back({"rho_c_min", rho_c.worst, -1e-6, true});
    if (loop && loop_scale.started)
        mon.push_back({"loop_rate_error", loop_error.worst / std::max(loop_scale.worst, 1e-300), 1e-4});
}

// --- closure runs ------------------------------------------------------------

void run_closure(const ScenarioConfig& c, const fs::path& dir, RunResult& result) {
    const PhaseGrid g = c.phase_grid();
    const HybridHamiltonian H = c.hamiltonian();
    ClosureState state = make_closure_state(g, c.closure);
    const bool general = c.run.closure_variant == "general";
    const double limit = closure_dt_max(state, H);
    require(c.run.dt <= limit, ErrorKind::Validation,
            "time step " + std::to_string(c.run.dt) + " exceeds the closure limit " + std::to_string(limit));

    CsvWriter csv = c.writes("csv") ? CsvWriter(dir / "closure.csv", {"t", "mass", "closure_energy", "min_trace_dev",
                                                                     "min_rho_eig", "manifold_dev"})
                                    : CsvWriter();
    const bool snapshots = c.writes("snapshot") && c.run.snapshot_every > 0;
    const std::size_t n = g.nx;
    const auto snapshot = [&] {
        Snapshot s;
        s.mode = Mode::FiniteDim;
        s.dims = {std::uint32_t(g.nq), std::uint32_t(g.np), std::uint32_t(n), std::uint32_t(n)};
        s.data.resize(s.size());
        for (std::size_t k = 0; k < s.data.size(); ++k) s.data[k] = state.D[k / (n * n)] * state.rho[k];
        write_snapshot((dir / step_name("closure", state.step)).string(), s);
    };

    Tracker mass, energy, trace, eig, manifold;
    const std::size_t steps = std::size_t(c.run.steps);
    const auto observe = [&] {
        result.steps = state.step;
        if (snapshots && state.step % std::size_t(c.run.snapshot_every) == 0) snapshot();
        if (state.step % std::size_t(c.run.diagnostics_every) != 0 && state.step != steps) return;
        const ClosureDiagnostics d = closure_diagnostics(state, H);
        mass.drift(d.mass);
        energy.drift(d.energy);
        trace.maximum(d.max_trace_dev);
        eig.minimum(d.min_rho_eig);
        manifold.maximum(d.manifold_dev);
        csv.row({state.t, d.mass, d.energy, d.max_trace_dev, d.min_rho_eig, d.manifold_dev});
    };
    try {
        observe();
        for (std::size_t k = 0; k < steps; ++k) {
            state = general ? closure_step_general(state, H, c.run.dt) : closure_step_reduced(state, H, c.run.dt);
            observe();
        }
    } catch (...) {
        csv.flush();
        throw;
    }
    csv.flush();

    auto& mon = result.monitors;
    mon.push_back({"mass_drift", mass.worst, 1e-9});
    mon.push_back({"energy_drift", energy.worst / std::max(std::abs(energy.first), 1e-300), 1e-6});
    mon.push_back({"max_trace_dev", trace.worst, 1e-8});
    mon.push_back({"min_rho_eig", eig.worst, -1e-8, true});
    if (!general) mon.push_back({"manifold_dev", manifold.worst, 1e-9});
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& config, const std::string& out_dir) {
    validate_config(config);
    RunResult result;
    const fs::path dir = out_dir.empty() ? fs::path(config.output.directory) : fs::path(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec && fs::is_directory(dir), ErrorKind::Io, "cannot create output directory '" + dir.string() + "'");
    result.directory = dir.string();
    result.threads = resolve_threads(config.run.threads);
    set_fft_threads(result.threads);

    const auto start = std::chrono::steady_clock::now();
    const auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
    try {
        if (config.run.kind == "closure")
            run_closure(config, dir, result);
        else
            run_wave(config, dir, result);
    } catch (const std::exception& e) {
        result.wall_seconds = elapsed();
        write_manifest(dir, config, result, e.what());
        throw;
    }
    result.wall_seconds = elapsed();
    write_manifest(dir, config, result, "");
    return result;
}

}  // namespace hkvh
