#include <doctest.h>

#include <cmath>
#include <random>

#include "hybridkvh/phase_grid.hpp"

using namespace hkvh;

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

RField sample(const PhaseGrid& g, std::size_t nc, auto f) {
    RField out({g.nq, g.np, nc});
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j)
            for (std::size_t k = 0; k < nc; ++k) out(i, j, k) = f(g.q(i), g.p(j), g.mode == Mode::Continuum ? g.x(k) : 0.0);
    return out;
}

// Random trigonometric polynomial with wavenumbers |k| <= kmax on each axis.
struct BandLimited {
    std::vector<std::array<double, 5>> terms;  // kq, kp, kx, amplitude, phase
    BandLimited(std::mt19937_64& rng, int kmax, int count = 6) {
        std::uniform_int_distribution<int> k(-kmax, kmax);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int n = 0; n < count; ++n)
            terms.push_back({double(k(rng)), double(k(rng)), double(k(rng)), u(rng), M_PI * u(rng)});
    }
    double operator()(double q, double p, double x) const {
        double s = 0.0;
        for (const auto& t : terms) s += t[3] * std::sin(t[0] * q + t[1] * p + t[2] * x + t[4]);
        return s;
    }
};

// 8th-order centred difference along axis 0 or 1 of a periodic field.
RField fd8(const RField& f, int axis, double h) {
    static const double c[4] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
    const Shape s = f.shape();
    RField out(s);
    const long n = static_cast<long>(axis == 0 ? s.n0 : s.n1);
    for (std::size_t i = 0; i < s.n0; ++i)
        for (std::size_t j = 0; j < s.n1; ++j)
            for (std::size_t k = 0; k < s.n2; ++k) {
                double acc = 0.0;
                for (long m = 1; m <= 4; ++m) {
                    const long base = axis == 0 ? long(i) : long(j);
                    const auto fw = std::size_t(((base + m) % n + n) % n);
                    const auto bw = std::size_t(((base - m) % n + n) % n);
                    acc += c[m - 1] * (axis == 0 ? f(fw, j, k) - f(bw, j, k) : f(i, fw, k) - f(i, bw, k));
                }
                out(i, j, k) = acc / h;
            }
    return out;
}

}  // namespace

TEST_CASE("grid validation rejects odd, small and non-positive settings") {
    CHECK_THROWS_AS(PhaseGrid::continuum(5, 8, 8, 1, 1, 1), Error);
    CHECK_THROWS_AS(PhaseGrid::continuum(2, 8, 8, 1, 1, 1), Error);
    CHECK_THROWS_AS(PhaseGrid::continuum(8, 8, 6 + 1, 1, 1, 1), Error);
    CHECK_THROWS_AS(PhaseGrid::continuum(8, 8, 8, 1, 0.0, 1), Error);
    CHECK_THROWS_AS(PhaseGrid::finite_dim(8, 8, 0, 1, 1), Error);
    CHECK_NOTHROW(PhaseGrid::finite_dim(8, 8, 2, 1, 1));
    try {
        PhaseGrid::continuum(7, 8, 8, 1, 1, 1);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Validation);
    }
}

TEST_CASE("cell-centred coordinates and weights") {
    const auto g = PhaseGrid::continuum(8, 16, 4, kTwoPi, 12.0, 2.0);
    CHECK(g.q(0) == doctest::Approx(-M_PI));
    CHECK(g.p(8) == doctest::Approx(0.0));
    CHECK(g.cell_weight() == doctest::Approx(g.hq() * g.hp() * g.hx()));
    const auto b = PhaseGrid::finite_dim(8, 16, 2, kTwoPi, 12.0);
    CHECK(b.cell_weight() == doctest::Approx(b.hq() * b.hp()));
}

TEST_CASE("geometry conventions") {
    const auto J = Geometry::J;
    // J^2 = -1
    CHECK(J[0][0] * J[0][0] + J[0][1] * J[1][0] == -1.0);
    CHECK(J[0][0] * J[0][1] + J[0][1] * J[1][1] == 0.0);
    CHECK(J[1][0] * J[0][0] + J[1][1] * J[1][0] == 0.0);
    CHECK(J[1][0] * J[0][1] + J[1][1] * J[1][1] == -1.0);
    CHECK(Geometry::symplectic_form({1.0, 0.0}, {0.0, 1.0}) == 1.0);
    const auto a = Geometry::canonical_one_form(0.3, -1.7);
    CHECK(a[0] == -1.7);
    CHECK(a[1] == 0.0);
}

TEST_CASE("derivative of a resolved mode is exact") {
    const auto g = PhaseGrid::continuum(32, 16, 8, 3.0, 5.0, 7.0);
    const RField f = sample(g, g.nx, [&](double q, double, double) { return std::sin(kTwoPi * q / g.Lq); });
    const RField d = spectral_derivative(g, f, Axis::Q);
    const RField want = sample(g, g.nx, [&](double q, double, double) { return kTwoPi / g.Lq * std::cos(kTwoPi * q / g.Lq); });
    CHECK(max_abs_diff(d, want) <= 1e-12 * max_abs(want));

    const RField fx = sample(g, g.nx, [&](double, double, double x) { return std::cos(3 * kTwoPi * x / g.Lx); });
    const RField dx = spectral_derivative(g, fx, Axis::X);
    const RField wantx =
        sample(g, g.nx, [&](double, double, double x) { return -3 * kTwoPi / g.Lx * std::sin(3 * kTwoPi * x / g.Lx); });
    CHECK(max_abs_diff(dx, wantx) <= 1e-12 * max_abs(wantx));
}

TEST_CASE("derivative of a constant vanishes on every axis") {
    const auto g = PhaseGrid::continuum(8, 8, 8, 1.0, 2.0, 3.0);
    const RField one(hybrid_shape(g), 2.5);
    for (Axis a : {Axis::Q, Axis::P, Axis::X}) CHECK(max_abs(spectral_derivative(g, one, a)) < 1e-14);
}

TEST_CASE("x derivative is rejected in finite_dim mode") {
    const auto g = PhaseGrid::finite_dim(8, 8, 2, 1.0, 1.0);
    const RField f(hybrid_shape(g), 1.0);
    try {
        (void)spectral_derivative(g, f, Axis::X);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Validation);
    }
}

TEST_CASE("band-limited derivative agrees with an 8th-order finite difference") {
    std::mt19937_64 rng(7);
    const BandLimited f(rng, 3);
    double prev = 0.0;
    for (std::size_t n : {32, 64}) {
        const auto g = PhaseGrid::continuum(n, n, 4, kTwoPi, kTwoPi, kTwoPi);
        const RField v = sample(g, g.nx, f);
        const double err = max_abs_diff(spectral_derivative(g, v, Axis::Q), fd8(v, 0, g.hq())) +
                           max_abs_diff(spectral_derivative(g, v, Axis::P), fd8(v, 1, g.hp()));
        // O(h^8) with the constant of a k <= 3 trigonometric polynomial
        CHECK(err < 30.0 * std::pow(3.0 * g.hq(), 8));
        if (prev > 0.0 && err > 1e-12) CHECK(prev / err > 100.0);
        prev = err;
    }
}

TEST_CASE("poisson bracket: analytic case, antisymmetry, Jacobi") {
    const auto g = PhaseGrid::finite_dim(32, 32, 1, kTwoPi, kTwoPi);
    const RField A = sample(g, 1, [](double q, double, double) { return std::sin(q); });
    const RField B = sample(g, 1, [](double, double p, double) { return std::cos(p); });
    const RField want = sample(g, 1, [](double q, double p, double) { return -std::cos(q) * std::sin(p); });
    CHECK(max_abs_diff(poisson_bracket(g, A, B), want) < 1e-13);

    const RField AB = poisson_bracket(g, A, B), BA = poisson_bracket(g, B, A);
    for (std::size_t k = 0; k < AB.size(); ++k) CHECK(AB[k] == -BA[k]);
    CHECK(max_abs(poisson_bracket(g, A, A)) == 0.0);

    std::mt19937_64 rng(11);
    const RField a = sample(g, 1, BandLimited(rng, 4)), b = sample(g, 1, BandLimited(rng, 4)),
                 c = sample(g, 1, BandLimited(rng, 4));
    const RField j1 = poisson_bracket(g, a, poisson_bracket(g, b, c));
    const RField j2 = poisson_bracket(g, b, poisson_bracket(g, c, a));
    const RField j3 = poisson_bracket(g, c, poisson_bracket(g, a, b));
    double jac = 0.0;
    for (std::size_t k = 0; k < j1.size(); ++k) jac = std::max(jac, std::abs(j1[k] + j2[k] + j3[k]));
    CHECK(jac < 1e-10);
    CHECK(std::abs(integrate(g, poisson_bracket(g, a, b))) < 1e-12 * std::max(1.0, max_abs(a) * max_abs(b)));
}

TEST_CASE("matrix-valued bracket with a scalar is entrywise") {
    const auto g = PhaseGrid::finite_dim(16, 16, 2, kTwoPi, kTwoPi);
    CField A(matrix_shape(g));
    RField a0 = sample(g, 1, [](double q, double p, double) { return std::sin(q + p); });
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j)
            for (std::size_t c = 0; c < 4; ++c) A(i, j, c) = double(c + 1) * a0(i, j, 0);
    const CField B = to_complex(sample(g, 1, [](double q, double, double) { return std::cos(q); }));
    const CField out = poisson_bracket(g, A, B);
    const RField ref = poisson_bracket(g, a0, real_part(B));
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j)
            for (std::size_t c = 0; c < 4; ++c)
                CHECK(std::abs(out(i, j, c) - double(c + 1) * ref(i, j, 0)) < 1e-13);
    const auto other = PhaseGrid::finite_dim(8, 8, 2, kTwoPi, kTwoPi);
    CHECK_THROWS_AS(poisson_bracket(other, A, B), Error);
}

TEST_CASE("summation by parts is exact on every axis") {
    std::mt19937_64 rng(3);
    const auto g = PhaseGrid::continuum(16, 16, 16, kTwoPi, kTwoPi, kTwoPi);
    const RField f = sample(g, g.nx, BandLimited(rng, 5)), h = sample(g, g.nx, BandLimited(rng, 5));
    for (Axis ax : {Axis::Q, Axis::P, Axis::X}) {
        RField l = spectral_derivative(g, f, ax), r = spectral_derivative(g, h, ax);
        for (std::size_t k = 0; k < l.size(); ++k) {
            l[k] *= h[k];
            r[k] *= f[k];
        }
        const double lhs = integrate(g, l), rhs = -integrate(g, r);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("integration examples") {
    const auto g = PhaseGrid::continuum(8, 8, 8, kTwoPi, kTwoPi, kTwoPi);
    CHECK(integrate(g, RField(hybrid_shape(g), 1.0)) == doctest::Approx(std::pow(kTwoPi, 3)).epsilon(1e-14));
    const RField s = sample(g, g.nx, [](double q, double, double) { return std::sin(q); });
    CHECK(std::abs(integrate(g, s)) < 1e-13);

    const auto fine = PhaseGrid::finite_dim(128, 128, 1, 16.0, 16.0);
    const RField bump = sample(fine, 1, [](double q, double p, double) {
        return std::exp(-(q * q + p * p) / (2 * 0.64)) / (kTwoPi * 0.64);
    });
    CHECK(std::abs(integrate(fine, bump) - 1.0) < 1e-12);
}

TEST_CASE("deterministic summation") {
    std::mt19937_64 rng(5);
    const auto g = PhaseGrid::continuum(16, 16, 8, kTwoPi, kTwoPi, kTwoPi);
    const RField f = sample(g, g.nx, BandLimited(rng, 4));
    const double a = integrate(g, f), b = integrate(g, f);
    CHECK(a == b);
}

TEST_CASE("boundary mass") {
    const auto g = PhaseGrid::finite_dim(16, 32, 1, kTwoPi, 40.0);
    CHECK(boundary_mass(g, RField(phase_shape(g), 3.0)) == doctest::Approx(2.0 / 32.0));
    const RField peaked = sample(g, 1, [](double, double p, double) { return std::exp(-p * p / 2.0); });
    CHECK(boundary_mass(g, peaked) < 1e-12);
}

TEST_CASE("complex integration and per-component integrals") {
    const auto g = PhaseGrid::finite_dim(8, 8, 2, kTwoPi, kTwoPi);
    CField f(hybrid_shape(g));
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            f(i, j, 0) = {1.0, 0.0};
            f(i, j, 1) = {0.0, 2.0};
        }
    const auto per = integrate_phase(g, f);
    CHECK(per[0].real() == doctest::Approx(kTwoPi * kTwoPi));
    CHECK(per[1].imag() == doctest::Approx(2 * kTwoPi * kTwoPi));
    const cplx tot = integrate(g, f);
    CHECK(tot.real() == doctest::Approx(kTwoPi * kTwoPi));
    CHECK(tot.imag() == doctest::Approx(2 * kTwoPi * kTwoPi));
}
