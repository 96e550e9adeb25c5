#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "hybridkvh/liouvillian.hpp"

namespace hkvh {

using MaskField = GridArray<std::uint8_t>;

constexpr double kDefaultNodeThreshold = 1e-10;  // relative to max D

// Polar variables psi = sqrt(D) exp(i S / hbar). S is unwrapped along x on
// every (q, p) line and set to 0 on the node mask (mask == 0).
struct MadelungFields {
    PhaseGrid grid;
    RField D;
    RField S;
    MaskField mask;    // 1 where D >= threshold
    double threshold;  // absolute
};

MadelungFields polar_decompose(const HybridWavefunction& psi, double hbar,
                               double node_threshold = kDefaultNodeThreshold);
HybridWavefunction reconstruct(const MadelungFields& f, double hbar);

// Gauge-invariant derivatives of the polar variables, taken from psi:
//   dS = hbar Im(conj(psi) d psi) / |psi|^2,
//   Lap sqrt(D) / sqrt(D) = Re(conj(psi) Lap_x psi) / |psi|^2 + |dS/dx|^2 / hbar^2.
// All quotients are zero on the node mask. continuum grids only.
struct PhaseGradients {
    RField D;
    RField Sq, Sp, Sx;
    RField quantum_curvature;  // Lap_x sqrt(D) / sqrt(D)
    MaskField mask;
};

PhaseGradients phase_gradients(const HybridWavefunction& psi, double hbar,
                               double node_threshold = kDefaultNodeThreshold);

// Hybrid velocity (X_{H_I}, dS/dx / m); the x component is 0 on the mask and
// whenever the quantum kinetic term is switched off.
struct HybridVelocity {
    RField q, p, x;
};
HybridVelocity velocity_field(const HybridWavefunction& psi, const HybridHamiltonian& H,
                              double node_threshold = kDefaultNodeThreshold);

// L_I + |dS/dx|^2/2m + (hbar^2/2m) Lap sqrt(D)/sqrt(D).
RField hybrid_lagrangian(const HybridWavefunction& psi, const HybridHamiltonian& H,
                         double node_threshold = kDefaultNodeThreshold);

// J_C = joint * X_{H_I} and the x-current
//   J_Q = (1/m)(D S_x + d_p(p D S_x) + {D S_x, S}) - (hbar^2/4mD){D, d_x D},
// with {D, d_x D}/D = 4 {sqrt D, d_x sqrt D} evaluated on the smooth amplitude.
struct HybridCurrents {
    RField Cq, Cp;
    RField Q;
};
HybridCurrents hybrid_currents(const HybridWavefunction& psi, const HybridHamiltonian& H,
                               double node_threshold = kDefaultNodeThreshold);

// Residual fields with their masked L2 norms. `weighted` is the D-weighted
// RMS sqrt(int D r^2 / int D) over the same mask.
struct ResidualField {
    RField r;
    double norm = 0.0;
    double weighted = 0.0;
};

struct MadelungResiduals {
    ResidualField S;  // dS/dt + |S_x|^2/2m - (hbar^2/2m) Lap sqrt(D)/sqrt(D) - L_I - {H_I, S}
    ResidualField D;  // dD/dt + (1/m) d_x(D S_x) - {H_I, D}
};

// Time derivatives use snapshots spaced by `delta`: three snapshots give the
// centred difference at the middle one; two give the midpoint rule with the
// spatial terms averaged. Fewer than two snapshots is an error.
MadelungResiduals madelung_residuals(std::span<const HybridWavefunction> snapshots, double delta,
                                     const HybridHamiltonian& H, double node_threshold = kDefaultNodeThreshold);

// d/dt joint + div_z J_C + d_x J_Q on the same stencil.
ResidualField continuity_residual(std::span<const HybridWavefunction> snapshots, double delta,
                                  const HybridHamiltonian& H, double node_threshold = kDefaultNodeThreshold);

// max_x |d/dt rho_q + d_x int (D S_x / m) dz| relative to max rho_q, with
// rho_q(x) = int D dz.
double quantum_marginal_residual(std::span<const HybridWavefunction> snapshots, double delta,
                                 const HybridHamiltonian& H);

// --- Lagrangian trajectories ------------------------------------------------

// Tensor-product periodic Lagrange interpolation of even order on the hybrid
// grid. Exact for polynomials of degree < order away from wrap-around.
class PeriodicInterpolator {
public:
    explicit PeriodicInterpolator(const PhaseGrid& grid, int order = 8);

    double operator()(const RField& f, double q, double p, double x) const;
    cplx operator()(const CField& f, double q, double p, double x) const;
    // Value of the mask at the nearest grid point.
    bool resolved(const MaskField& mask, double q, double p, double x) const;

private:
    struct Stencil {
        std::array<std::size_t, 16> index;
        std::array<double, 16> weight;
    };
    Stencil stencil(double coord, double origin, double h, std::size_t n) const;
    template <class F, class T>
    T eval(const F& f, double q, double p, double x) const;

    PhaseGrid grid_;
    int order_;
};

// Points (q, p, x) in unwrapped coordinates; fields are sampled at the
// periodic image. Flagged points entered the node mask and are frozen.
struct TrajectoryEnsemble {
    std::vector<std::array<double, 3>> points;
    std::vector<std::uint8_t> flagged;

    std::size_t size() const { return points.size(); }
};

// Closed loop q0 + a cos s, p0 + b sin s, x0 + c sin s with `count` points.
TrajectoryEnsemble make_loop(std::array<double, 3> centre, std::array<double, 3> radii, std::size_t count);

// Velocity snapshot used by the trajectory integrator.
struct VelocitySnapshot {
    double t = 0.0;
    HybridVelocity v;
    MaskField mask;
};

VelocitySnapshot velocity_snapshot(const HybridWavefunction& psi, const HybridHamiltonian& H, double t,
                                   double node_threshold = kDefaultNodeThreshold);

// One RK4 step from a.t to b.t of dPhi/dt = X(Phi) with X linear in time
// between the two snapshots.
void advect_trajectories(TrajectoryEnsemble& ensemble, const VelocitySnapshot& a, const VelocitySnapshot& b,
                         const PeriodicInterpolator& interp);

// oint p dq along an ordered closed loop (spectral in the loop parameter).
double loop_action(const TrajectoryEnsemble& loop);
// oint dV/dx dx along the loop.
double loop_potential_rate(const TrajectoryEnsemble& loop, const HybridHamiltonian& H,
                           const PeriodicInterpolator& interp);

struct LoopSample {
    double t = 0.0;
    double loop_integral = 0.0;
    double lhs_rate = 0.0;  // centred time difference of loop_integral
    double rhs_rate = 0.0;  // oint dV/dx dx
};

// Tracks a loop and a set of tracer trajectories along a wave run. Feed every
// state in order through observe(); samples become available one step late
// because the loop rate is a centred difference.
class LagrangianTracker {
public:
    LagrangianTracker(const HybridHamiltonian& H, TrajectoryEnsemble loop, TrajectoryEnsemble tracers,
                      double node_threshold = kDefaultNodeThreshold, int order = 8);

    void observe(const HybridWavefunction& psi, double t);

    const TrajectoryEnsemble& loop() const { return loop_; }
    const TrajectoryEnsemble& tracers() const { return tracers_; }
    const std::vector<LoopSample>& loop_samples() const { return samples_; }

    // Per tracer: |S(t, Phi(t)) - S(0, Phi(0)) - int L dtau|, with S tracked
    // continuously through the phase of psi along the trajectory.
    std::vector<double> phase_transport_error() const;

private:
    void record_loop(double t);

    HybridHamiltonian H_;
    double threshold_;
    PeriodicInterpolator interp_;
    TrajectoryEnsemble loop_, tracers_;
    VelocitySnapshot last_;
    bool started_ = false;

    // loop integral history: (t, value) for the last two times
    std::vector<std::pair<double, double>> history_;
    std::vector<double> rhs_history_;
    std::vector<LoopSample> samples_;

    std::vector<cplx> last_value_;     // psi at tracer positions, previous step
    std::vector<double> phase_;        // accumulated S along tracers
    std::vector<double> action_;       // accumulated int L dtau
    std::vector<double> last_lagrangian_;
};

}  // namespace hkvh
