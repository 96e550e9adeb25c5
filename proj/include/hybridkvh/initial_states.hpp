#pragma once

#include <string>
#include <vector>

#include "hybridkvh/liouvillian.hpp"

namespace hkvh {

// Product states Psi(z) phi(c); the sigmas are widths of |Psi|^2. The phase-space factor is a von Mises bump in
// q (periodic), a Gaussian in p and an optional e^{i kq q} phase; the quantum
// factor is a von Mises bump in x with e^{i kx x} (continuum) or the level
// vector cos(theta/2) e_level + e^{i phi} sin(theta/2) e_{level+1} (finite_dim).
struct InitialStateSpec {
    std::string name = "gaussian_product";
    double q0 = 0.0, p0 = 0.0;
    double sigma_q = 0.5, sigma_p = 0.5;
    int kq = 0;
    double x0 = 0.0, sigma_x = 0.5;
    int kx = 0;
    int level = 0;
    double theta = 0.0, phi = 0.0;

    void validate(const PhaseGrid& grid) const;
    bool operator==(const InitialStateSpec&) const = default;
};

// Names accepted by make_initial_state.
const std::vector<std::string>& initial_state_names();

// gaussian_product  : bump in z times bump (or level vector) in the quantum factor
// plane_wave_product: bump in z times the plane wave e^{i kx x} (continuum) or
//                     the level vector (finite_dim)
HybridWavefunction make_initial_state(const PhaseGrid& grid, const InitialStateSpec& spec);

// Unnormalised factors, exposed for oracles.
CField phase_space_factor(const PhaseGrid& grid, const InitialStateSpec& spec);
CVector quantum_factor(const PhaseGrid& grid, const InitialStateSpec& spec);

// Psi(z) phi(c), normalised.
HybridWavefunction product_state(const PhaseGrid& grid, const CField& psi_z, const CVector& phi);

}  // namespace hkvh
