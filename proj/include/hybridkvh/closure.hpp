#pragma once

#include "hybridkvh/hybrid_model.hpp"
#include "hybridkvh/linalg.hpp"

namespace hkvh {

// Mean-field closure variables on a finite_dim grid: density D(z), quantum
// state rho(z) (n*n components, unit trace, positive) and covector u(z).
// rho_tilde = D rho is never formed.
struct ClosureState {
    PhaseGrid grid;
    RField D;     // phase_shape
    CField rho;   // matrix_shape
    RField uq, up;  // phase_shape; the canonical manifold is u = (p, 0)
    double t = 0.0;
    std::size_t step = 0;

    std::size_t levels() const { return grid.nx; }
    // max |u - A| over the grid.
    double manifold_deviation() const;
    void set_canonical_u();
};

// D is the normalised |Psi|^2 of the phase-space bump of InitialStateSpec
// (von Mises in q, Gaussian in p). rho(z) = (1 - mixing) |chi(z)><chi(z)| +
// mixing Id/n with chi the level vector at angles
//   theta(z) = theta + texture sin(q - q0) g(p),  phi(z) = phi + texture cos(q - q0) g(p),
// g(p) = exp(-(p - p0)^2 / 2 w^2), w = texture_width. The texture is localised in p
// so that rho stays periodic on the truncated p axis under the shear p/M d_q.
// u = A + perturbation g(p) (sin(q - q0), cos(q - q0)).
struct ClosureInit {
    double q0 = 0.0, p0 = 0.0;
    double sigma_q = 0.5, sigma_p = 0.5;
    double theta = 0.0, phi = 0.0;
    double texture = 0.0, texture_width = 0.8;
    double mixing = 0.1;
    double perturbation = 0.0;

    void validate(const PhaseGrid& grid) const;
    bool operator==(const ClosureInit&) const = default;
};

ClosureState make_closure_state(const PhaseGrid& grid, const ClosureInit& init);

// <X_H> = (Tr(rho dH/dp), -Tr(rho dH/dq)). Throws Runtime when the pointwise
// trace of rho deviates from 1 by more than kTraceTolerance.
constexpr double kTraceTolerance = 1e-8;
struct PhaseVelocity {
    RField q, p;
};
PhaseVelocity expected_vector_field(const ClosureState& state, const HybridHamiltonian& H);

// RK4 steps of
//   dD/dt + div(D <X>) = 0,
//   drho/dt + <X>.grad rho = (-i/hbar) [u.X_H - L_H, rho],
//   (d/dt + Lie_<X>)(u - A) = (u - A) . Tr(X_H grad rho).
// The reduced step assumes u = A (then u.X_H - L_H = H) and leaves u alone;
// it rejects states off that manifold by more than 1e-9.
ClosureState closure_step_reduced(const ClosureState& state, const HybridHamiltonian& H, double dt);
ClosureState closure_step_general(const ClosureState& state, const HybridHamiltonian& H, double dt);

// 0.5 / (max|<X>_q| kq + max|<X>_p| kp + 2 max||H + (u - A).X_H||_F / hbar).
double closure_dt_max(const ClosureState& state, const HybridHamiltonian& H);

// int D Tr(rho (u.X_H - L_H)) dz.
double closure_energy(const ClosureState& state, const HybridHamiltonian& H);

struct ClosureDiagnostics {
    double mass = 0.0;
    double energy = 0.0;
    double max_trace_dev = 0.0;  // max_z |Tr rho - 1|
    double min_rho_eig = 0.0;
    double manifold_dev = 0.0;
};
ClosureDiagnostics closure_diagnostics(const ClosureState& state, const HybridHamiltonian& H);

// max over z and components of |Lie_<X> A - grad <L_H> - Tr(H grad rho)|,
// relative to the largest term. Derivatives of the symbol are the stored
// analytic ones; derivatives of rho are spectral.
double auxiliary_identity_residual(const ClosureState& state, const HybridHamiltonian& H);

}  // namespace hkvh
