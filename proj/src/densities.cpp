#include "hybridkvh/densities.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace hkvh {

namespace {

// Outer-product fields M_ab = u_a conj(v_b) on a state-shaped pair.
CField outer(const CField& u, const CField& v, std::size_t n) {
    const Shape s = u.shape();
    CField out({s.n0, s.n1, n * n});
    for (std::size_t i = 0; i < s.n0; ++i)
        for (std::size_t j = 0; j < s.n1; ++j)
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b) out(i, j, a * n + b) = u(i, j, a) * std::conj(v(i, j, b));
    return out;
}

// Assembles rho + d_p(p rho) + i hbar/2 (d_p Bq - d_q Bp) from the local
// quadratic fields rho = u u^dag, Bq = (d_q u) u^dag - u (d_q u)^dag, etc.
CField density_form(const CField& rho, const CField& Bq, const CField& Bp, const PhaseGrid& g, double hbar) {
    CField prho = rho;
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j)
            for (std::size_t c = 0; c < rho.shape().n2; ++c) prho(i, j, c) *= g.p(j);
    const CField t1 = derivative(prho, 1, g.Lp);
    const CField t2 = derivative(Bq, 1, g.Lp);
    const CField t3 = derivative(Bp, 0, g.Lq);
    const cplx ih2{0.0, 0.5 * hbar};
    CField out(rho.shape());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = rho[k] + t1[k] + ih2 * (t2[k] - t3[k]);
    return out;
}

CField antisym(const CField& du, const CField& u, std::size_t n) {
    CField a = outer(du, u, n);
    const CField b = outer(u, du, n);
    for (std::size_t k = 0; k < a.size(); ++k) a[k] -= b[k];
    return a;
}

}  // namespace

DensityOperatorField hybrid_density_operator(const HybridWavefunction& psi, double hbar) {
    const PhaseGrid& g = psi.grid;
    require(g.mode == Mode::FiniteDim, ErrorKind::Unsupported,
            "the hybrid density operator is only assembled on finite_dim grids; use joint_distribution");
    const std::size_t n = g.nx;
    const CField dq = derivative(psi.psi, 0, g.Lq);
    const CField dp = derivative(psi.psi, 1, g.Lp);
    return {g, density_form(outer(psi.psi, psi.psi, n), antisym(dq, psi.psi, n), antisym(dp, psi.psi, n), g, hbar)};
}

RField joint_distribution(const HybridWavefunction& psi, double hbar) {
    const PhaseGrid& g = psi.grid;
    if (g.mode == Mode::FiniteDim) {
        const DensityOperatorField D = hybrid_density_operator(psi, hbar);
        RField out(hybrid_shape(g));
        for (std::size_t i = 0; i < g.nq; ++i)
            for (std::size_t j = 0; j < g.np; ++j)
                for (std::size_t c = 0; c < g.nx; ++c) out(i, j, c) = D.D(i, j, c * g.nx + c).real();
        return out;
    }
    // Scalar form per x: |psi|^2 + d_p(p |psi|^2) + hbar (d_q Ip - d_p Iq),
    // with Ik = Im(conj(psi) d_k psi).
    const CField dq = derivative(psi.psi, 0, g.Lq);
    const CField dp = derivative(psi.psi, 1, g.Lp);
    RField prho(hybrid_shape(g)), Iq(hybrid_shape(g)), Ip(hybrid_shape(g));
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j)
            for (std::size_t k = 0; k < g.nx; ++k) {
                const cplx v = psi.psi(i, j, k);
                prho(i, j, k) = g.p(j) * std::norm(v);
                Iq(i, j, k) = (std::conj(v) * dq(i, j, k)).imag();
                Ip(i, j, k) = (std::conj(v) * dp(i, j, k)).imag();
            }
    const RField t1 = derivative(prho, 1, g.Lp);
    const RField t2 = derivative(Ip, 0, g.Lq);
    const RField t3 = derivative(Iq, 1, g.Lp);
    RField out(hybrid_shape(g));
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::norm(psi.psi[k]) + t1[k] + hbar * (t2[k] - t3[k]);
    return out;
}

RField classical_density(const DensityOperatorField& D) {
    const PhaseGrid& g = D.grid;
    RField out(phase_shape(g));
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            double tr = 0.0;
            for (std::size_t a = 0; a < g.nx; ++a) tr += D.D(i, j, a * g.nx + a).real();
            out(i, j, 0) = tr;
        }
    return out;
}

RField classical_density(const RField& joint, const PhaseGrid& g) {
    require(joint.shape() == hybrid_shape(g), ErrorKind::Shape, "joint distribution has the wrong shape");
    const double w = g.quantum_weight();
    RField out(phase_shape(g));
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            KahanSum s;
            for (std::size_t k = 0; k < g.nx; ++k) s.add(joint(i, j, k));
            out(i, j, 0) = s.value() * w;
        }
    return out;
}

CMatrix quantum_density_matrix(const DensityOperatorField& D) {
    const PhaseGrid& g = D.grid;
    const auto per = integrate_phase(g, D.D);
    const long n = static_cast<long>(g.nx);
    CMatrix rho(n, n);
    for (long a = 0; a < n; ++a)
        for (long b = 0; b < n; ++b) rho(a, b) = per[static_cast<std::size_t>(a * n + b)];
    return rho;
}

CMatrix quantum_density_matrix(const HybridWavefunction& psi) {
    const PhaseGrid& g = psi.grid;
    const long n = static_cast<long>(g.nx);
    // rows: phase points, columns: quantum index
    const Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Y(
        psi.psi.data(), static_cast<long>(g.phase_points()), n);
    CMatrix rho = Y.transpose() * Y.conjugate();
    rho *= g.phase_weight() * g.quantum_weight();
    return rho;
}

PairingResult defining_identity(const HybridHamiltonian& A, const HybridWavefunction& psi) {
    const double hbar = A.params().hbar;
    const DensityOperatorField D = hybrid_density_operator(psi, hbar);
    const auto& a = A.matrix();
    const std::size_t n = psi.grid.nx;
    KahanSum re, im;
    for (std::size_t i = 0; i < psi.grid.nq; ++i)
        for (std::size_t j = 0; j < psi.grid.np; ++j)
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < n; ++c) {
                    const cplx v = a.H(i, j, r * n + c) * D.D(i, j, c * n + r);
                    re.add(v.real());
                    im.add(v.imag());
                }
    const double w = psi.grid.phase_weight();
    return {inner(psi, apply_liouvillian(A, psi)), {re.value() * w, im.value() * w}};
}

double density_equivariance_residual(const PointTransform& T, const HybridWavefunction& psi, double hbar) {
    const PhaseGrid& g = psi.grid;
    const DensityOperatorField lhs = hybrid_density_operator(apply_point_transform(T, psi, hbar), hbar);
    const DensityOperatorField base = hybrid_density_operator(psi, hbar);
    const long nq = static_cast<long>(g.nq), np = static_cast<long>(g.np);
    double worst = 0.0;
    for (long i = 0; i < nq; ++i)
        for (long j = 0; j < np; ++j) {
            const auto si = static_cast<std::size_t>(((i - T.cells_q) % nq + nq) % nq);
            const auto sj = static_cast<std::size_t>(((j - T.cells_p) % np + np) % np);
            CMatrix want = base.at(si, sj);
            if (T.U.size() != 0) want = T.U * want * T.U.adjoint();
            const CMatrix got = lhs.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
        }
    return worst / max_abs(base.D);
}

DensityDiagnostics density_diagnostics(const HybridWavefunction& psi, double hbar) {
    const PhaseGrid& g = psi.grid;
    DensityDiagnostics d;
    RField rho_c;
    if (g.mode == Mode::FiniteDim) {
        rho_c = classical_density(hybrid_density_operator(psi, hbar));
    } else {
        rho_c = classical_density(joint_distribution(psi, hbar), g);
    }
    d.trace_D = integrate(g, rho_c);
    d.rho_c_min = *std::min_element(rho_c.begin(), rho_c.end());
    d.rho_c_max = *std::max_element(rho_c.begin(), rho_c.end());
    d.rho_q_min_eig = min_eigenvalue(quantum_density_matrix(psi));

    RField mass(phase_shape(g));
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < g.nx; ++c) s += std::norm(psi.psi(i, j, c));
            mass(i, j, 0) = s;
        }
    d.boundary_mass_p = boundary_mass(g, mass);
    return d;
}

}  // namespace hkvh
