#include <doctest.h>

#include <cmath>
#include <random>

#include "hybridkvh/closure.hpp"

using namespace hkvh;

namespace {
constexpr double kTwoPi = 2.0 * M_PI;

// (p^2/2 + 1 - cos q) Id with analytic derivatives (p^2 is not periodic).
HybridHamiltonian scalar_pendulum(const PhaseGrid& g) {
    const long n = static_cast<long>(g.nx);
    const CMatrix I = CMatrix::Identity(n, n);
    return HybridHamiltonian::from_function(
        g, {}, [=](double q, double p) -> CMatrix { return (0.5 * p * p + 1.0 - std::cos(q)) * I; },
        [=](double q, double) -> CMatrix { return std::sin(q) * I; }, [=](double, double p) -> CMatrix { return p * I; },
        [=](double q, double) -> CMatrix { return std::cos(q) * I; },
        [=](double, double) -> CMatrix { return CMatrix::Zero(n, n); }, [=](double, double) -> CMatrix { return I; });
}

// Backward pendulum flow z -> phi_{-T}(z) with its Jacobian, by fine RK4.
struct Backward {
    double q, p;
    double J[2][2];
};

Backward pendulum_backward(double q, double p, double T) {
    const int n = 2000;
    const double h = -T / n;
    // y = (q, p, J00, J01, J10, J11); J' = Df J, Df = [[0, 1], [-cos q, 0]]
    using Y = std::array<double, 6>;
    const auto f = [](const Y& y) {
        const double c = std::cos(y[0]);
        return Y{y[1], -std::sin(y[0]), y[4], y[5], -c * y[2], -c * y[3]};
    };
    const auto axpy = [](const Y& y, double a, const Y& k) {
        Y r;
        for (int i = 0; i < 6; ++i) r[i] = y[i] + a * k[i];
        return r;
    };
    Y y{q, p, 1.0, 0.0, 0.0, 1.0};
    for (int s = 0; s < n; ++s) {
        const Y k1 = f(y), k2 = f(axpy(y, 0.5 * h, k1)), k3 = f(axpy(y, 0.5 * h, k2)), k4 = f(axpy(y, h, k3));
        for (int i = 0; i < 6; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return {y[0], y[1], {{y[2], y[3]}, {y[4], y[5]}}};
}

ClosureState run(ClosureState s, const HybridHamiltonian& H, double dt, std::size_t steps, bool general) {
    for (std::size_t k = 0; k < steps; ++k)
        s = general ? closure_step_general(s, H, dt) : closure_step_reduced(s, H, dt);
    return s;
}

CMatrix random_density(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> d;
    CMatrix a(static_cast<long>(n), static_cast<long>(n));
    for (long r = 0; r < a.rows(); ++r)
        for (long c = 0; c < a.cols(); ++c) a(r, c) = {d(rng), d(rng)};
    CMatrix rho = a * a.adjoint();
    return rho / rho.trace();
}

double max_diff(const RField& a, const RField& b) { return max_abs_diff(a, b); }
}  // namespace

TEST_CASE("expected vector field") {
    const auto g = PhaseGrid::finite_dim(32, 48, 2, kTwoPi, 12.0);
    ClosureInit init;
    init.texture = 0.6;
    auto s = make_closure_state(g, init);

    SUBCASE("scalar symbol gives X_H for any rho") {
        const auto v = expected_vector_field(s, scalar_pendulum(g));
        for (std::size_t i = 0; i < g.nq; ++i)
            for (std::size_t j = 0; j < g.np; ++j) {
                CHECK(std::abs(v.q(i, j, 0) - g.p(j)) < 1e-12);
                CHECK(std::abs(v.p(i, j, 0) + std::sin(g.q(i))) < 1e-12);
            }
    }
    SUBCASE("maximally mixed rho gives the field of Tr H / n") {
        ModelParams mp;
        mp.lambda = 0.4;
        const auto H = make_hamiltonian(g, mp, {"analytic_alpha", {{"alpha_z", 0.7}, {"alpha_x", 0.2}}});
        for (std::size_t i = 0; i < g.nq; ++i)
            for (std::size_t j = 0; j < g.np; ++j) set_matrix_at(s.rho, 2, i, j, CMatrix::Identity(2, 2) / 2.0);
        const auto v = expected_vector_field(s, H);
        const auto& h = H.matrix();
        for (std::size_t i = 0; i < g.nq; i += 3)
            for (std::size_t j = 0; j < g.np; j += 3) {
                CHECK(std::abs(v.q(i, j, 0) - matrix_at(h.Hp, 2, i, j).trace().real() / 2.0) < 1e-12);
                CHECK(std::abs(v.p(i, j, 0) + matrix_at(h.Hq, 2, i, j).trace().real() / 2.0) < 1e-12);
            }
    }
    SUBCASE("analytic_alpha with random rho against an 8th-order difference of the symbol") {
        ModelParams mp;
        mp.lambda = 0.4;
        const auto H = make_hamiltonian(g, mp, {"analytic_alpha", {{"alpha_z", 0.7}, {"alpha_x", 0.2}}});
        std::mt19937_64 rng(7);
        for (std::size_t i = 0; i < g.nq; ++i)
            for (std::size_t j = 0; j < g.np; ++j) set_matrix_at(s.rho, 2, i, j, random_density(rng, 2));
        const auto v = expected_vector_field(s, H);
        static const double c[4] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
        const auto& h = H.matrix();
        double worst = 0.0;
        for (std::size_t i = 0; i < g.nq; ++i)
            for (std::size_t j = 4; j + 4 < g.np; ++j) {
                CMatrix dq = CMatrix::Zero(2, 2), dp = CMatrix::Zero(2, 2);
                for (std::size_t m = 1; m <= 4; ++m) {
                    dq += c[m - 1] * (matrix_at(h.H, 2, (i + m) % g.nq, j) - matrix_at(h.H, 2, (i + g.nq - m) % g.nq, j));
                    dp += c[m - 1] * (matrix_at(h.H, 2, i, j + m) - matrix_at(h.H, 2, i, j - m));
                }
                dq /= g.hq();
                dp /= g.hp();
                const CMatrix rho = matrix_at(s.rho, 2, i, j);
                worst = std::max({worst, std::abs((rho * dp).trace().real() - v.q(i, j, 0)),
                                  std::abs(-(rho * dq).trace().real() - v.p(i, j, 0))});
            }
        CHECK(worst < 1e-6);
    }
    SUBCASE("trace corruption is reported") {
        s.rho(3, 4, 0) += 1e-6;
        CHECK_THROWS_AS(expected_vector_field(s, scalar_pendulum(g)), Error);
    }
}

TEST_CASE("closure energy examples") {
    const auto g = PhaseGrid::finite_dim(16, 16, 2, kTwoPi, 8.0);
    auto s = make_closure_state(g, {});
    const double E = 1.7;
    const auto HE = HybridHamiltonian::scalar_times(g, {}, [&](double, double) { return E; }, CMatrix::Identity(2, 2));
    CHECK(closure_energy(s, HE) == doctest::Approx(E).epsilon(1e-12));

    const CMatrix A = 0.3 * pauli::x() + 0.8 * pauli::z();
    const auto HA = HybridHamiltonian::scalar_times(g, {}, [](double, double) { return 1.0; }, A);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(A);
    const CVector e = es.eigenvectors().col(1);
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) set_matrix_at(s.rho, 2, i, j, e * e.adjoint());
    CHECK(closure_energy(s, HA) == doctest::Approx(es.eigenvalues()(1)).epsilon(1e-12));
}

TEST_CASE("z-independent Hamiltonian: pure von Neumann precession") {
    const auto g = PhaseGrid::finite_dim(8, 8, 2, kTwoPi, 8.0);
    ModelParams mp;
    mp.hbar = 0.8;
    const CMatrix A = 0.7 * pauli::x() + 0.3 * pauli::z();
    const auto H = HybridHamiltonian::scalar_times(g, mp, [](double, double) { return 1.0; }, A);
    ClosureInit init;
    init.theta = 1.1;
    init.phi = 0.4;
    init.mixing = 0.0;
    auto s = make_closure_state(g, init);
    std::fill(s.D.begin(), s.D.end(), 1.0 / (g.Lq * g.Lp));
    const CMatrix rho0 = matrix_at(s.rho, 2, 0, 0);
    const double T = 1.0;
    s = run(s, H, 1e-3, 1000, false);
    const CMatrix U = unitary_exp(A, -T / mp.hbar);
    const CMatrix exact = U * rho0 * U.adjoint();
    double worst = 0.0;
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) worst = std::max(worst, (matrix_at(s.rho, 2, i, j) - exact).cwiseAbs().maxCoeff());
    CHECK(worst < 1e-8);
    CHECK(max_abs_diff(s.D, RField(s.D.shape(), 1.0 / (g.Lq * g.Lp))) < 1e-14);
}

TEST_CASE("scalar symbol: D and rho follow the characteristics") {
    // the shear p d_q folds the rho texture into p; np = 96 resolves it at T = 1
    const auto g = PhaseGrid::finite_dim(64, 96, 2, kTwoPi, 12.0);
    const auto H = scalar_pendulum(g);
    ClosureInit init;
    init.q0 = 0.4;
    init.p0 = 0.3;
    init.texture = 0.8;
    const auto s0 = make_closure_state(g, init);
    const double T = 1.0;
    const auto s = run(s0, H, 1e-3, 1000, false);

    // reference: the initial fields evaluated at phi_{-T}(z); D0 is the
    // unnormalised bump times the normalisation read off the grid
    const auto bump = [&](double q, double p) {
        return std::exp((std::cos(q - init.q0) - 1.0) / (init.sigma_q * init.sigma_q)) *
               std::exp(-(p - init.p0) * (p - init.p0) / (2.0 * init.sigma_p * init.sigma_p));
    };
    const double norm = s0.D(32, 48, 0) / bump(g.q(32), g.p(48));
    double worst_D = 0.0, worst_rho = 0.0;
    for (std::size_t i = 0; i < g.nq; i += 2)
        for (std::size_t j = 0; j < g.np; j += 2) {
            const Backward b = pendulum_backward(g.q(i), g.p(j), T);
            const double dq = b.q - init.q0, dp = b.p - init.p0;
            const double D0 = norm * bump(b.q, b.p);
            worst_D = std::max(worst_D, std::abs(s.D(i, j, 0) - D0));
            const double env = std::exp(-dp * dp / (2.0 * init.texture_width * init.texture_width));
            const double theta = init.theta + init.texture * std::sin(dq) * env;
            const double phi = init.phi + init.texture * std::cos(dq) * env;
            CVector chi(2);
            chi << std::cos(0.5 * theta), std::polar(std::sin(0.5 * theta), phi);
            const CMatrix rho0 = (1.0 - init.mixing) * chi * chi.adjoint() + init.mixing * CMatrix::Identity(2, 2) / 2.0;
            worst_rho = std::max(worst_rho, (matrix_at(s.rho, 2, i, j) - rho0).cwiseAbs().maxCoeff());
        }
    CHECK(worst_D < 1e-6);
    CHECK(worst_rho < 1e-6);
}

TEST_CASE("scalar symbol with uniform rho: u - A is transported as a covector") {
    const auto g = PhaseGrid::finite_dim(64, 64, 2, kTwoPi, 12.0);
    const auto H = scalar_pendulum(g);
    ClosureInit init;
    init.perturbation = 0.05;
    init.q0 = 0.2;
    const auto s0 = make_closure_state(g, init);
    const double T = 1.0;
    const auto s = run(s0, H, 1e-3, 1000, true);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.nq; i += 2)
        for (std::size_t j = 0; j < g.np; j += 2) {
            const Backward b = pendulum_backward(g.q(i), g.p(j), T);
            const double dq = b.q - init.q0, dp = b.p - init.p0;
            const double env = std::exp(-dp * dp / (2.0 * init.texture_width * init.texture_width));
            const double w0q = init.perturbation * env * std::sin(dq), w0p = init.perturbation * env * std::cos(dq);
            // w(T, z) = J^T w0(phi_{-T} z)
            const double wq = b.J[0][0] * w0q + b.J[1][0] * w0p;
            const double wp = b.J[0][1] * w0q + b.J[1][1] * w0p;
            worst = std::max({worst, std::abs(s.uq(i, j, 0) - g.p(j) - wq), std::abs(s.up(i, j, 0) - wp)});
        }
    CHECK(worst < 1e-6);
}

TEST_CASE("invariant manifold u = A and reduced/general agreement") {
    const auto g = PhaseGrid::finite_dim(32, 48, 2, kTwoPi, 12.0);
    ModelParams mp;
    mp.lambda = 0.5;
    const auto H = make_hamiltonian(g, mp, {"analytic_alpha", {{"alpha_x", 1.0}}});
    ClosureInit init;
    init.texture = 0.5;
    init.p0 = 0.5;
    const auto s0 = make_closure_state(g, init);
    const auto general = run(s0, H, 1e-3, 1000, true);
    const auto reduced = run(s0, H, 1e-3, 1000, false);
    CHECK(general.manifold_deviation() <= 1e-9);
    CHECK(max_diff(general.D, reduced.D) <= 1e-9);
    CHECK(max_abs_diff(general.rho, reduced.rho) <= 1e-9);

    auto off = s0;
    off.uq(1, 1, 0) += 1e-3;
    CHECK_THROWS_AS(closure_step_reduced(off, H, 1e-3), Error);
}

TEST_CASE("analytic_alpha run keeps the closure invariants") {
    const auto g = PhaseGrid::finite_dim(48, 64, 2, kTwoPi, 12.0);
    ModelParams mp;
    mp.lambda = 0.5;
    const auto H = make_hamiltonian(g, mp, {"analytic_alpha", {{"alpha_x", 1.0}, {"alpha_z", 0.3}}});
    ClosureInit init;
    init.texture = 0.5;
    init.p0 = 0.5;
    for (const bool general : {false, true}) {
        CAPTURE(general);
        init.perturbation = general ? 0.05 : 0.0;
        auto s = make_closure_state(g, init);
        CHECK(closure_dt_max(s, H) > 1e-3);
        const auto d0 = closure_diagnostics(s, H);
        CHECK(std::abs(d0.mass - 1.0) < 1e-12);
        for (std::size_t k = 0; k < 500; ++k) {
            s = general ? closure_step_general(s, H, 1e-3) : closure_step_reduced(s, H, 1e-3);
            if (k % 50 != 49) continue;
            const auto d = closure_diagnostics(s, H);
            CHECK(std::abs(d.mass - d0.mass) <= 1e-9);
            CHECK(d.max_trace_dev <= 1e-8);
            CHECK(d.min_rho_eig >= -1e-8);
            CHECK(std::abs(d.energy - d0.energy) <= 1e-6 * std::abs(d0.energy));
        }
    }
}

TEST_CASE("auxiliary identity for the Lie derivative of the canonical one-form") {
    const auto g = PhaseGrid::finite_dim(32, 48, 2, kTwoPi, 12.0);
    ModelParams mp;
    mp.lambda = 0.5;
    const auto H = make_hamiltonian(g, mp, {"analytic_alpha", {{"alpha_x", 1.0}, {"alpha_z", 0.3}}});
    ClosureInit init;
    init.texture = 0.7;
    const auto s = make_closure_state(g, init);
    CHECK(auxiliary_identity_residual(s, H) < 1e-10);
}

TEST_CASE("closure validation") {
    const auto c = PhaseGrid::continuum(8, 8, 8, kTwoPi, 8.0, kTwoPi);
    CHECK_THROWS_AS(make_closure_state(c, {}), Error);
    const auto g = PhaseGrid::finite_dim(8, 8, 2, kTwoPi, 8.0);
    ClosureInit bad;
    bad.mixing = 1.5;
    CHECK_THROWS_AS(make_closure_state(g, bad), Error);
    const auto s = make_closure_state(g, {});
    CHECK_THROWS_AS(closure_step_general(s, scalar_pendulum(g), -1.0), Error);
}
