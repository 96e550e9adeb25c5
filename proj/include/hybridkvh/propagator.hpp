#pragma once

#include <functional>

#include "hybridkvh/liouvillian.hpp"

namespace hkvh {

struct RunState {
    HybridWavefunction psi;
    double t = 0.0;
    std::size_t step = 0;
};

// Upper bound on the spectral radius of the discrete Liouvillian: the sum of
// the bounds of the transport, multiplication and x-Laplacian terms, with
// matrix symbols measured in the Frobenius norm.
double spectral_radius_bound(const HybridHamiltonian& H);
// Largest admissible RK4 step, 0.5 / spectral_radius_bound.
double dt_max(const HybridHamiltonian& H);

// One classical RK4 step of i hbar d psi/dt = L psi. Throws Runtime when the
// result contains non-finite values.
RunState step_rk4(const RunState& state, const HybridHamiltonian& H, double dt);

struct EvolveOptions {
    double dt = 1e-3;
    std::size_t steps = 0;
    std::size_t snapshot_every = 0;  // 0 disables snapshots
    bool check_dt_max = true;
};

using StateObserver = std::function<void(const RunState&)>;

// Runs `steps` RK4 steps. `on_step` sees the initial state and every later
// state; `on_snapshot` sees step 0 and every snapshot_every-th step.
RunState evolve(const HybridWavefunction& psi0, const HybridHamiltonian& H, const EvolveOptions& options,
                const StateObserver& on_step = {}, const StateObserver& on_snapshot = {});

// h = <psi | L psi> with hybrid quadrature weights.
cplx total_energy(const HybridWavefunction& psi, const HybridHamiltonian& H);

// exp(-i t L / hbar) through the eigendecomposition of the materialised,
// Hermitian-symmetrised Liouvillian (dimension <= kMaxDenseDimension).
class DenseExponential {
public:
    explicit DenseExponential(const HybridHamiltonian& H);

    HybridWavefunction evolve(const HybridWavefunction& psi0, double t) const;
    const RVector& eigenvalues() const { return eigenvalues_; }

private:
    PhaseGrid grid_;
    double hbar_;
    CMatrix vectors_;
    RVector eigenvalues_;
};

HybridWavefunction dense_exponential_oracle(const HybridHamiltonian& H, const HybridWavefunction& psi0, double t);

}  // namespace hkvh
