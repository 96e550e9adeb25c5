#pragma once

#include "hybridkvh/liouvillian.hpp"

namespace hkvh {

// Matrix-valued density D(z) with n*n components per phase-space point.
struct DensityOperatorField {
    PhaseGrid grid;
    CField D;

    CMatrix at(std::size_t i, std::size_t j) const { return matrix_at(D, grid.nx, i, j); }
};

// D = psi psi^dagger + d_p(p psi psi^dagger) + i hbar {psi, psi^dagger}, with
// the bracket written in divergence form
//   i hbar/2 ( d_p[(d_q psi) psi^dag - psi (d_q psi)^dag]
//            - d_q[(d_p psi) psi^dag - psi (d_p psi)^dag] ).
// This is the exact discrete adjoint of the skew-form Liouvillian, so the
// pairing identity below holds to rounding error. finite_dim grids only.
DensityOperatorField hybrid_density_operator(const HybridWavefunction& psi, double hbar);

// Joint distribution on (q, p, c): the same formula with scalar psi at each x
// (continuum) or the diagonal of D (finite_dim). Real by construction.
RField joint_distribution(const HybridWavefunction& psi, double hbar);

// rho_c(z) = Tr D(z), or the x-integral of the joint distribution.
RField classical_density(const DensityOperatorField& D);
RField classical_density(const RField& joint, const PhaseGrid& grid);

// rho = int D dz as an n x n matrix.
CMatrix quantum_density_matrix(const DensityOperatorField& D);
// rho = int psi psi^dagger dz as an operator matrix: n x n levels, or the
// nx x nx kernel rho(x, x') times hx (unit trace for a normalised state).
CMatrix quantum_density_matrix(const HybridWavefunction& psi);

struct PairingResult {
    cplx lhs;  // int <psi | L_A psi> dz
    cplx rhs;  // Tr int A D dz
    double residual() const { return std::abs(lhs - rhs); }
    double scale() const { return std::max(std::abs(lhs), std::abs(rhs)); }
};

// Both sides of the defining pairing of D with the observable A.
PairingResult defining_identity(const HybridHamiltonian& A, const HybridWavefunction& psi);

// max |D(T psi) - U (D(psi) o eta^-1) U^dagger| / max |D(psi)|.
double density_equivariance_residual(const PointTransform& T, const HybridWavefunction& psi, double hbar);

struct DensityDiagnostics {
    double trace_D = 0.0;          // int Tr D dz (or int joint dz dx)
    double rho_c_min = 0.0;        // min_z rho_c
    double rho_c_max = 0.0;        // max_z rho_c
    double rho_q_min_eig = 0.0;    // smallest eigenvalue of the quantum density matrix
    double boundary_mass_p = 0.0;  // share of |psi|^2 in the outermost p rows
};

DensityDiagnostics density_diagnostics(const HybridWavefunction& psi, double hbar);

}  // namespace hkvh
