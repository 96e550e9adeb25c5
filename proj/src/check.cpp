#include "hybridkvh/check.hpp"

#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "hybridkvh/closure.hpp"
#include "hybridkvh/densities.hpp"
#include "hybridkvh/madelung.hpp"
#include "hybridkvh/propagator.hpp"
#include "report_json.hpp"

namespace hkvh {

double OracleProbe::order() const { return std::log2(ratio()); }

OracleProbe oracle_probe(const ScenarioConfig& tiny) {
    const PhaseGrid g = tiny.phase_grid();
    const HybridHamiltonian H = tiny.hamiltonian();
    const HybridWavefunction psi0 = make_initial_state(g, tiny.initial);
    const double T = tiny.run.dt * double(tiny.run.steps);
    const HybridWavefunction exact = DenseExponential(H).evolve(psi0, T);
    OracleProbe out;
    for (int r = 0; r < 2; ++r) {
        EvolveOptions opts;
        opts.dt = tiny.run.dt / double(1 << r);
        opts.steps = std::size_t(tiny.run.steps) << r;
        const RunState end = evolve(psi0, H, opts);
        (r ? out.error_half : out.error) = max_abs_diff(end.psi.psi, exact.psi);
    }
    return out;
}

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

// Random trigonometric polynomial in q times a p-Gaussian with a quadratic
// prefactor, per level.
HybridWavefunction smooth_random_state(const PhaseGrid& g, std::mt19937_64& rng, double sigma_p) {
    std::normal_distribution<double> n;
    auto s = HybridWavefunction::zeros(g);
    for (std::size_t c = 0; c < g.nx; ++c) {
        cplx a[7], b[3];
        for (auto& v : a) v = {n(rng), n(rng)};
        for (auto& v : b) v = {n(rng), n(rng)};
        for (std::size_t i = 0; i < g.nq; ++i)
            for (std::size_t j = 0; j < g.np; ++j) {
                const double q = g.q(i), p = g.p(j);
                cplx f = 0.0;
                for (int k = -3; k <= 3; ++k) f += a[k + 3] * std::polar(1.0, k * q);
                const cplx h = b[0] + b[1] * p + b[2] * p * p;
                s.psi(i, j, c) = f * h * std::exp(-p * p / (4 * sigma_p * sigma_p));
            }
    }
    s.normalize();
    return s;
}

// sum_a f_a(q, p) sigma_a with real f_a band-limited on the periodic box.
HybridHamiltonian random_observable(const PhaseGrid& g, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    struct Mode {
        int k, l;
        double amp, phase;
    };
    std::array<std::vector<Mode>, 4> modes;
    for (auto& m : modes)
        for (int k = 0; k <= 2; ++k)
            for (int l = 0; l <= 2; ++l) m.push_back({k, l, n(rng), phase(rng)});
    const std::array<CMatrix, 4> basis{pauli::identity(), pauli::x(), pauli::y(), pauli::z()};
    const double Lq = g.Lq, Lp = g.Lp;
    return HybridHamiltonian::from_function(g, {}, [=](double q, double p) -> CMatrix {
        CMatrix out = CMatrix::Zero(2, 2);
        for (std::size_t a = 0; a < 4; ++a) {
            double f = 0.0;
            for (const auto& m : modes[a])
                f += m.amp * std::cos(kTwoPi * (m.k * q / Lq + m.l * p / Lp) + m.phase);
            out += f * basis[a];
        }
        return out;
    });
}

}  // namespace

double pairing_probe(std::size_t count, std::uint64_t seed) {
    const PhaseGrid g = PhaseGrid::finite_dim(32, 32, 2, kTwoPi, 16.0);
    std::mt19937_64 rng(seed);
    const HybridWavefunction psi = smooth_random_state(g, rng, 0.9);
    double worst = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        const PairingResult r = defining_identity(random_observable(g, rng), psi);
        worst = std::max(worst, r.residual() / std::max(1.0, r.scale()));
    }
    return worst;
}

std::vector<NamedValue> commutator_probe() {
    const PhaseGrid g = PhaseGrid::finite_dim(8, 8, 2, kTwoPi, 8.0);
    const ModelParams mp;
    const CMatrix I = pauli::identity();
    const CMatrix Z = CMatrix::Zero(2, 2);
    const auto sinq = HybridHamiltonian::from_function(
        g, mp, [&](double q, double) -> CMatrix { return std::sin(q) * I; },
        [&](double q, double) -> CMatrix { return std::cos(q) * I; }, [&](double, double) { return Z; },
        [&](double q, double) -> CMatrix { return -std::sin(q) * I; }, [&](double, double) { return Z; },
        [&](double, double) { return Z; });
    const auto cosq = HybridHamiltonian::from_function(
        g, mp, [&](double q, double) -> CMatrix { return std::cos(q) * I; },
        [&](double q, double) -> CMatrix { return -std::sin(q) * I; }, [&](double, double) { return Z; },
        [&](double q, double) -> CMatrix { return -std::cos(q) * I; }, [&](double, double) { return Z; },
        [&](double, double) { return Z; });
    const auto sx_const = HybridHamiltonian::from_function(g, mp, [](double, double) { return pauli::x(); });
    const auto sy_const = HybridHamiltonian::from_function(g, mp, [](double, double) { return pauli::y(); });
    const auto sx = HybridHamiltonian::from_function(
        g, mp, [](double q, double) -> CMatrix { return std::sin(q) * pauli::x(); },
        [](double q, double) -> CMatrix { return std::cos(q) * pauli::x(); }, [&](double, double) { return Z; },
        [](double q, double) -> CMatrix { return -std::sin(q) * pauli::x(); }, [&](double, double) { return Z; },
        [&](double, double) { return Z; });
    const auto cy = HybridHamiltonian::from_function(
        g, mp, [](double, double p) -> CMatrix { return std::cos(p) * pauli::y(); },
        [&](double, double) { return Z; }, [](double, double p) -> CMatrix { return -std::sin(p) * pauli::y(); },
        [&](double, double) { return Z; }, [&](double, double) { return Z; },
        [](double, double p) -> CMatrix { return -std::cos(p) * pauli::y(); });
    return {{"scalar_pair", commutator_identity_residual(sinq, cosq)},
            {"constant_pair", commutator_identity_residual(sx_const, sy_const)},
            {"matrix_pair", commutator_identity_residual(sx, cy)}};
}

EquivarianceProbe equivariance_probe() {
    // hp = 0.5; the p shift needs the state to vanish at the p edges, where
    // the shifted kinetic term wraps around
    const PhaseGrid g = PhaseGrid::finite_dim(32, 32, 2, kTwoPi, 16.0);
    std::mt19937_64 rng(7);
    const HybridWavefunction psi = smooth_random_state(g, rng, 0.7);
    ModelParams mp;
    mp.lambda = 0.2;
    const auto A = HybridHamiltonian::scalar_times(g, mp, [](double q, double) { return std::sin(q); }, pauli::z());
    const auto B = HybridHamiltonian::scalar_times(g, mp, [](double q, double) { return std::sin(q); }, pauli::identity());
    EquivarianceProbe out;
    const auto U = PointTransform::quantum(unitary_exp(pauli::y(), 0.8));
    out.quantum = std::max(liouvillian_equivariance_residual(U, A, psi), density_equivariance_residual(U, psi, 1.0));

    PointTransform sq;
    sq.cells_q = 3;
    out.shift = std::max(liouvillian_equivariance_residual(sq, B, psi), density_equivariance_residual(sq, psi, 1.0));
    // one p cell with hbar = hp keeps the compensating phase periodic
    const auto sp = PointTransform::translation(g, g.hp(), 0.0, g.hp());
    ModelParams mh = mp;
    mh.hbar = g.hp();
    const auto H = make_hamiltonian(g, mh, {"analytic_alpha", {{"alpha_z", 0.4}}});
    out.shift = std::max({out.shift, liouvillian_equivariance_residual(sp, H, psi),
                          density_equivariance_residual(sp, psi, g.hp())});
    return out;
}

MeanFieldProbe mean_field_probe(const ScenarioConfig& config) {
    ScenarioConfig c = config;
    c.model.lambda = 0.0;
    const PhaseGrid g = c.phase_grid();
    require(g.mode == Mode::FiniteDim, ErrorKind::Unsupported, "mean-field probe needs a finite_dim grid");
    const ModelParams mp = c.model_params();
    const HybridHamiltonian H = c.hamiltonian();
    const HybridWavefunction psi0 = make_initial_state(g, c.initial);
    EvolveOptions opts;
    opts.dt = c.run.dt;
    opts.steps = std::size_t(c.run.steps);
    const RunState end = evolve(psi0, H, opts);

    const std::size_t n = g.nx;
    CMatrix unfolding(static_cast<Eigen::Index>(g.nq * g.np), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j)
            for (std::size_t a = 0; a < n; ++a)
                unfolding(Eigen::Index(i * g.np + j), Eigen::Index(a)) = end.psi.psi(i, j, a);
    const Eigen::JacobiSVD<CMatrix> svd(unfolding);
    const auto& sv = svd.singularValues();

    // with lambda = 0 the symbol is scalar plus a constant traceless part
    CMatrix Hq = matrix_at(H.matrix().H, n, 0, 0);
    Hq -= (Hq.trace() / double(n)) * CMatrix::Identity(Eigen::Index(n), Eigen::Index(n));
    const double T = opts.dt * double(opts.steps);
    const CMatrix U = unitary_exp(Hq, -T / mp.hbar);
    const CMatrix expected = U * quantum_density_matrix(psi0) * U.adjoint();
    const CMatrix diff = quantum_density_matrix(end.psi) - expected;
    const Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (diff + diff.adjoint()));
    MeanFieldProbe out;
    out.second_singular_value = sv.size() > 1 ? sv(1) / sv(0) : 0.0;
    out.trace_distance = 0.5 * es.eigenvalues().cwiseAbs().sum();
    return out;
}

MadelungProbe madelung_probe(const ScenarioConfig& c, std::size_t anchor, std::size_t spacing) {
    require(spacing >= 2 && spacing % 2 == 0, ErrorKind::Validation, "madelung probe spacing must be even");
    const PhaseGrid g = c.phase_grid();
    const HybridHamiltonian H = c.hamiltonian();
    RunState s{make_initial_state(g, c.initial), 0.0, 0};
    std::vector<HybridWavefunction> kept;
    for (std::size_t k = 0; k <= anchor + spacing; ++k) {
        if (k == anchor || k == anchor + spacing / 2 || k == anchor + spacing) kept.push_back(s.psi);
        if (k < anchor + spacing) s = step_rk4(s, H, c.run.dt);
    }
    const auto levels = [&](const HybridWavefunction& b, std::size_t steps) {
        const std::array<HybridWavefunction, 2> pair{kept[0], b};
        const double delta = c.run.dt * double(steps);
        const MadelungResiduals r = madelung_residuals(pair, delta, H, c.run.node_threshold);
        const ResidualField cont = continuity_residual(pair, delta, H, c.run.node_threshold);
        return MadelungLevels{r.S.weighted, r.S.norm, r.D.norm, cont.norm};
    };
    return {levels(kept[2], spacing), levels(kept[1], spacing / 2)};
}

ClosureProbe closure_probe(const ScenarioConfig& c, std::size_t steps) {
    const PhaseGrid g = c.phase_grid();
    const HybridHamiltonian H = c.hamiltonian();
    ClosureInit init = c.closure;
    init.perturbation = 0.0;
    ClosureState reduced = make_closure_state(g, init);
    ClosureState general = reduced;
    ClosureProbe out;
    out.auxiliary_identity = auxiliary_identity_residual(reduced, H);
    const ClosureDiagnostics d0 = closure_diagnostics(reduced, H);
    out.min_rho_eig = d0.min_rho_eig;
    out.max_trace_dev = d0.max_trace_dev;
    for (std::size_t k = 0; k < steps; ++k) {
        reduced = closure_step_reduced(reduced, H, c.run.dt);
        general = closure_step_general(general, H, c.run.dt);
        const ClosureDiagnostics d = closure_diagnostics(reduced, H);
        out.mass_drift = std::max(out.mass_drift, std::abs(d.mass - d0.mass));
        out.energy_drift = std::max(out.energy_drift, std::abs(d.energy - d0.energy) / std::abs(d0.energy));
        out.max_trace_dev = std::max(out.max_trace_dev, d.max_trace_dev);
        out.min_rho_eig = std::min(out.min_rho_eig, d.min_rho_eig);
        out.manifold_dev = std::max(out.manifold_dev, general.manifold_deviation());
        out.general_vs_reduced = std::max({out.general_vs_reduced, max_abs_diff(general.D, reduced.D),
                                           max_abs_diff(general.rho, reduced.rho)});
    }
    return out;
}

// --- suites ------------------------------------------------------------------

bool CheckReport::all_passed() const {
    for (const auto& e : entries)
        if (!e.passed()) return false;
    return true;
}

std::string CheckReport::to_json() const {
    json out;
    out["suite"] = suite;
    out["version"] = software_version();
    out["passed"] = all_passed();
    out["entries"] = json::array();
    for (const auto& e : entries) out["entries"].push_back(monitor_json(e));
    return out.dump(2);
}

const std::vector<std::string>& check_suite_names() {
    static const std::vector<std::string> names{"identities", "convergence", "closure"};
    return names;
}

namespace {

Monitor band(std::string name, double value, double target, double half_width) {
    Monitor m{std::move(name), value, half_width};
    m.target = target;
    return m;
}

CheckReport identities() {
    CheckReport r{"identities", {}};
    r.entries.push_back({"pairing_identity", pairing_probe(20, 2024), 1e-10});
    for (const auto& c : commutator_probe()) r.entries.push_back({"commutator_" + c.name, c.value, 1e-8});
    const EquivarianceProbe e = equivariance_probe();
    r.entries.push_back({"equivariance_quantum", e.quantum, 1e-12});
    r.entries.push_back({"equivariance_shift", e.shift, 1e-8});
    return r;
}

CheckReport convergence() {
    CheckReport r{"convergence", {}};
    const OracleProbe o = oracle_probe(parse_config(builtin_scenario("tiny_oracle").text));
    r.entries.push_back({"rk4_oracle_error", o.error, 1e-8});
    r.entries.push_back(band("rk4_order", o.order(), 4.0, 0.2));
    const MadelungProbe m = madelung_probe(parse_config(builtin_scenario("madelung_continuum").text), 100, 4);
    r.entries.push_back(band("madelung_S_order", std::log2(m.coarse.S / m.fine.S), 2.0, 0.2));
    r.entries.push_back(band("madelung_D_order", std::log2(m.coarse.D / m.fine.D), 2.0, 0.2));
    r.entries.push_back(band("continuity_order", std::log2(m.coarse.continuity / m.fine.continuity), 2.0, 0.2));
    return r;
}

CheckReport closure() {
    CheckReport r{"closure", {}};
    const ScenarioConfig c = parse_config(builtin_scenario("closure_reduced").text);
    const ClosureProbe p = closure_probe(c, std::size_t(c.run.steps));
    r.entries.push_back({"mass_drift", p.mass_drift, 1e-9});
    r.entries.push_back({"max_trace_dev", p.max_trace_dev, 1e-8});
    r.entries.push_back({"min_rho_eig", p.min_rho_eig, -1e-8, true});
    r.entries.push_back({"energy_drift", p.energy_drift, 1e-6});
    r.entries.push_back({"manifold_dev", p.manifold_dev, 1e-9});
    r.entries.push_back({"general_vs_reduced", p.general_vs_reduced, 1e-9});
    r.entries.push_back({"auxiliary_identity", p.auxiliary_identity, 1e-10});
    return r;
}

}  // namespace

CheckReport check_suite(const std::string& name) {
    if (name == "identities") return identities();
    if (name == "convergence") return convergence();
    if (name == "closure") return closure();
    fail(ErrorKind::Validation, "unknown check suite '" + name + "' (expected identities, convergence or closure)");
}

}  // namespace hkvh
