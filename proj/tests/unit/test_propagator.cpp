#include <doctest.h>

#include <cmath>

#include "hybridkvh/initial_states.hpp"
#include "hybridkvh/propagator.hpp"

using namespace hkvh;

namespace {
constexpr double kTwoPi = 2.0 * M_PI;

PhaseGrid tiny() { return PhaseGrid::finite_dim(8, 8, 2, kTwoPi, 8.0); }

HybridWavefunction tiny_state(const PhaseGrid& g) {
    InitialStateSpec s;
    s.q0 = 0.3;
    s.sigma_q = 0.7;
    s.sigma_p = 0.8;
    s.theta = 1.0;
    s.phi = 0.4;
    return make_initial_state(g, s);
}

double max_diff(const HybridWavefunction& a, const HybridWavefunction& b) { return max_abs_diff(a.psi, b.psi); }
}  // namespace

TEST_CASE("constant energy: one step is the scalar phase to O(dt^5)") {
    const auto g = tiny();
    ModelParams mp;
    mp.hbar = 0.8;
    const double E = 1.7;
    const auto H = HybridHamiltonian::from_function(g, mp, [&](double, double) -> CMatrix { return E * pauli::identity(); });
    const auto s = tiny_state(g);
    for (double dt : {0.1, 0.05}) {
        const auto next = step_rk4({s, 0.0, 0}, H, dt);
        HybridWavefunction want = s;
        for (auto& v : want.psi) v *= std::polar(1.0, -E * dt / mp.hbar);
        const double y = E * dt / mp.hbar;
        CHECK(max_diff(next.psi, want) <= 0.02 * std::pow(y, 5) * max_abs(s.psi));
        CHECK(next.step == 1);
        CHECK(next.t == doctest::Approx(dt));
    }
}

TEST_CASE("sigma_z precession of a z-independent level state") {
    const auto g = tiny();
    const auto H = HybridHamiltonian::from_function(g, {}, [](double, double) { return pauli::z(); });
    auto s = HybridWavefunction::zeros(g);
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            s.psi(i, j, 0) = 0.6;
            s.psi(i, j, 1) = cplx{0.0, 0.8};
        }
    const double dt = 0.05;
    const auto next = step_rk4({s, 0.0, 0}, H, dt);
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            CHECK(std::abs(next.psi.psi(i, j, 0) - 0.6 * std::polar(1.0, -dt)) < 1e-8);
            CHECK(std::abs(next.psi.psi(i, j, 1) - cplx{0.0, 0.8} * std::polar(1.0, dt)) < 1e-8);
        }
}

TEST_CASE("RK4 against the dense exponential on the tiny grid") {
    const auto g = tiny();
    ModelParams mp;
    mp.lambda = 0.1;
    const auto H = make_hamiltonian(g, mp, {});
    const auto s = tiny_state(g);
    const DenseExponential oracle(H);
    const double T = 0.1;
    const auto exact = oracle.evolve(s, T);
    double errors[2];
    for (int r = 0; r < 2; ++r) {
        const std::size_t steps = 100u << r;
        const auto out = evolve(s, H, {T / double(steps), steps, 0, true});
        errors[r] = max_diff(out.psi, exact);
    }
    CHECK(errors[0] <= 1e-8);
    CHECK(errors[0] / errors[1] == doctest::Approx(16.0).epsilon(3.0 / 16.0));
    CHECK(std::abs(exact.norm2() - s.norm2()) < 1e-12);
    CHECK(max_diff(oracle.evolve(s, 0.0), s) < 1e-13);
}

TEST_CASE("dense oracle reproduces a constant phase") {
    const auto g = tiny();
    const auto H = HybridHamiltonian::from_function(g, {}, [](double, double) -> CMatrix { return 0.9 * pauli::identity(); });
    const auto s = tiny_state(g);
    const auto out = dense_exponential_oracle(H, s, 2.0);
    HybridWavefunction want = s;
    for (auto& v : want.psi) v *= std::polar(1.0, -1.8);
    CHECK(max_diff(out, want) < 1e-12);
}

TEST_CASE("evolve: zero steps, observers and dt guard") {
    const auto g = tiny();
    ModelParams mp;
    mp.lambda = 0.1;
    const auto H = make_hamiltonian(g, mp, {});
    const auto s = tiny_state(g);
    std::size_t rows = 0, snaps = 0;
    const auto out = evolve(s, H, {1e-3, 0, 5, true}, [&](const RunState&) { ++rows; }, [&](const RunState&) { ++snaps; });
    CHECK(rows == 1);
    CHECK(snaps == 1);
    CHECK(out.psi.psi == s.psi);

    rows = snaps = 0;
    std::vector<double> times;
    evolve(s, H, {1e-3, 10, 5, true}, [&](const RunState& st) { times.push_back(st.t); }, [&](const RunState&) { ++snaps; });
    CHECK(times.size() == 11);
    CHECK(snaps == 3);
    CHECK(std::is_sorted(times.begin(), times.end()));
    CHECK(times.back() == 10 * 1e-3);

    CHECK_THROWS_AS(evolve(s, H, {10.0 * dt_max(H), 1, 0, true}), Error);
    CHECK(dt_max(H) > 0.0);
}

TEST_CASE("non-finite values abort the step") {
    const auto g = tiny();
    const auto H = make_hamiltonian(g, {}, {});
    auto s = tiny_state(g);
    s.psi(1, 1, 0) = std::numeric_limits<double>::quiet_NaN();
    try {
        step_rk4({s, 0.0, 0}, H, 1e-3);
        FAIL("expected a runtime error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Runtime);
    }
}

TEST_CASE("total energy") {
    const auto g = tiny();
    const auto s = tiny_state(g);
    const auto E = HybridHamiltonian::from_function(g, {}, [](double, double) -> CMatrix { return 2.0 * pauli::identity(); });
    CHECK(std::abs(total_energy(s, E) - cplx{2.0, 0.0}) < 1e-12);

    InitialStateSpec up;
    up.sigma_p = 0.8;
    const auto u = make_initial_state(g, up);
    const auto Z = HybridHamiltonian::from_function(g, {}, [](double, double) { return pauli::z(); });
    CHECK(std::abs(total_energy(u, Z) - cplx{1.0, 0.0}) < 1e-12);

    ModelParams mp;
    mp.lambda = 0.1;
    const auto H = make_hamiltonian(g, mp, {});
    const CMatrix L = materialize_liouvillian(H);
    const CVector v = Eigen::Map<const CVector>(s.psi.data(), long(s.psi.size()));
    const cplx quad = v.dot(L * v) * g.cell_weight();
    const cplx h = total_energy(s, H);
    CHECK(std::abs(h - quad) <= 1e-10 * std::abs(h));
    CHECK(std::abs(h.imag()) <= 1e-10 * std::abs(h.real()));
}

TEST_CASE("spectral radius bound dominates the dense spectrum") {
    const auto g = tiny();
    ModelParams mp;
    mp.lambda = 0.3;
    for (const char* name : {"pendulum_bilinear", "analytic_alpha"}) {
        const auto H = make_hamiltonian(g, mp, {name, {}});
        const DenseExponential d(H);
        CHECK(d.eigenvalues().cwiseAbs().maxCoeff() <= spectral_radius_bound(H));
    }
    const auto ga = PhaseGrid::continuum(8, 8, 8, kTwoPi, 8.0, kTwoPi);
    const auto Ha = make_hamiltonian(ga, mp, {});
    CHECK(DenseExponential(Ha).eigenvalues().cwiseAbs().maxCoeff() <= spectral_radius_bound(Ha));
}

TEST_CASE("initial states") {
    const auto g = PhaseGrid::continuum(16, 16, 16, kTwoPi, 12.0, kTwoPi);
    InitialStateSpec s;
    s.kx = 2;
    s.name = "plane_wave_product";
    const auto pw = make_initial_state(g, s);
    CHECK(std::abs(pw.norm2() - 1.0) < 1e-12);
    CHECK(std::abs(std::abs(pw.psi(3, 8, 0)) - std::abs(pw.psi(3, 8, 7))) < 1e-14);
    s.name = "nope";
    CHECK_THROWS_AS(make_initial_state(g, s), Error);
    s.name = "gaussian_product";
    s.sigma_p = -1.0;
    CHECK_THROWS_AS(make_initial_state(g, s), Error);

    const auto b = PhaseGrid::finite_dim(16, 16, 2, kTwoPi, 12.0);
    InitialStateSpec bloch;
    bloch.theta = M_PI / 2;
    const CVector v = quantum_factor(b, bloch);
    CHECK(std::abs(std::norm(v(0)) - 0.5) < 1e-15);
    CHECK(std::abs(std::norm(v(1)) - 0.5) < 1e-15);
    bloch.level = 2;
    CHECK_THROWS_AS(make_initial_state(b, bloch), Error);
}
