#pragma once

#include <optional>
#include <vector>

#include "hybridkvh/hybrid_model.hpp"

namespace hkvh {

// Hybrid wavefunction on (q, p) x (x-grid or levels).
struct HybridWavefunction {
    PhaseGrid grid;
    CField psi;

    static HybridWavefunction zeros(const PhaseGrid& grid);

    double norm2() const;
    void normalize();
};

// <a|b> over the hybrid space with quadrature weights.
cplx inner(const HybridWavefunction& a, const HybridWavefunction& b);
// sqrt(<a-b|a-b>).
double distance(const HybridWavefunction& a, const HybridWavefunction& b);

// Hybrid Liouvillian i hbar {H, .} - L_H applied to psi. The bracket is
// evaluated in skew-symmetric form, 1/2 (a D psi + D(a psi)), which is the
// plain product a D psi whenever the coefficient a does not vary along D.
// The discrete operator is therefore exactly Hermitian.
HybridWavefunction apply_liouvillian(const HybridHamiltonian& H, const HybridWavefunction& psi);

// Dense matrix of apply_liouvillian in the (q, p, c) basis (c fastest).
constexpr std::size_t kMaxDenseDimension = 4096;
CMatrix materialize_liouvillian(const HybridHamiltonian& H);

// Matrix symbol {H, F} - {F, H} built from the stored analytic derivatives.
HybridHamiltonian symmetrized_bracket_symbol(const HybridHamiltonian& H, const HybridHamiltonian& F);

// Transpose over the quantum factor only: M[(g,a),(g',b)] -> M[(g,b),(g',a)].
CMatrix partial_transpose(const CMatrix& m, std::size_t levels);

// Residual of [L_H, L_F] + [L_Hbar, L_Fbar]^T - i hbar L_{{H,F}-{F,H}} on the
// materialised operators. Without test states this is the max-entry norm of
// the residual matrix; with test states it is max ||R v|| / ||v||.
double commutator_identity_residual(const HybridHamiltonian& H, const HybridHamiltonian& F,
                                    const std::vector<HybridWavefunction>& test_states = {});

// Classical part: translation eta(q, p) = (q + a, p + b) by whole cells with
// the compensating phase phi(q, p) = -b q. Quantum part: constant unitary U
// (finite_dim) or a whole-cell x translation (continuum).
struct PointTransform {
    long cells_q = 0;
    long cells_p = 0;
    long cells_x = 0;
    CMatrix U;  // empty means identity
    // Sign s in the lift (U psi)(z) = exp(i s phi(eta^-1 z) / hbar) psi(eta^-1 z).
    // s = -1 is the convention that makes the Liouvillian equivariant.
    int phase_sign = -1;

    static PointTransform identity() { return {}; }
    // Translation by amounts (a, b); throws when they are not whole cells or
    // when the phase exp(i b q / hbar) is not periodic on the q axis.
    static PointTransform translation(const PhaseGrid& grid, double hbar, double a, double b);
    static PointTransform quantum(const CMatrix& U);

    void validate(const PhaseGrid& grid, double hbar) const;
};

HybridWavefunction apply_point_transform(const PointTransform& T, const HybridWavefunction& psi, double hbar);
HybridWavefunction apply_inverse_point_transform(const PointTransform& T, const HybridWavefunction& psi,
                                                 double hbar);
// The symbol eta^*(U^dagger A U) that the transformed Liouvillian should equal.
HybridHamiltonian transformed_symbol(const PointTransform& T, const HybridHamiltonian& A);

// || U^dagger L_A (U psi) - L_{eta^* U^dagger A U} psi || / ||psi||.
double liouvillian_equivariance_residual(const PointTransform& T, const HybridHamiltonian& A,
                                         const HybridWavefunction& psi);

}  // namespace hkvh
