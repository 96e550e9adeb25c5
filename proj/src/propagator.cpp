#include "hybridkvh/propagator.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace hkvh {

namespace {

double kmax(std::size_t n, double length) { return M_PI * static_cast<double>(n) / length; }

double max_frobenius(const CField& f, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < f.shape().n0; ++i)
        for (std::size_t j = 0; j < f.shape().n1; ++j) m = std::max(m, matrix_at(f, n, i, j).norm());
    return m;
}

}  // namespace

double spectral_radius_bound(const HybridHamiltonian& H) {
    const PhaseGrid& g = H.grid();
    const double hbar = H.params().hbar;
    const double kq = kmax(g.nq, g.Lq), kp = kmax(g.np, g.Lp);
    if (H.is_separable()) {
        const auto& h = H.separable();
        const double pmax = 0.5 * g.Lp;
        double lagrangian = 0.0;
        for (double v : interaction_lagrangian(H)) lagrangian = std::max(lagrangian, std::abs(v));
        double r = hbar * (max_abs(h.dVdq) * kp + pmax / h.params.M * kq) + lagrangian;
        if (h.quantum_kinetic) {
            const double kx = kmax(g.nx, g.Lx);
            r += hbar * hbar / (2.0 * h.params.m) * kx * kx;
        }
        return r;
    }
    const auto& h = H.matrix();
    const std::size_t n = h.levels();
    return hbar * (max_frobenius(h.Hq, n) * kp + max_frobenius(h.Hp, n) * kq) +
           max_frobenius(hybrid_lagrangian_symbol(H), n);
}

double dt_max(const HybridHamiltonian& H) {
    const double r = spectral_radius_bound(H);
    return r > 0.0 ? 0.5 / r : std::numeric_limits<double>::infinity();
}

RunState step_rk4(const RunState& state, const HybridHamiltonian& H, double dt) {
    require(dt > 0.0 && std::isfinite(dt), ErrorKind::Validation, "time step must be positive");
    const cplx factor{0.0, -dt / H.params().hbar};  // dt * d/dt = -i dt/hbar L
    const std::size_t N = state.psi.psi.size();
    const auto rhs = [&](const HybridWavefunction& y) {
        HybridWavefunction k = apply_liouvillian(H, y);
        for (auto& v : k.psi) v *= factor;
        return k;
    };
    const auto shifted = [&](const HybridWavefunction& k, double c) {
        HybridWavefunction y = state.psi;
        for (std::size_t n = 0; n < N; ++n) y.psi[n] += c * k.psi[n];
        return y;
    };
    const HybridWavefunction k1 = rhs(state.psi);
    const HybridWavefunction k2 = rhs(shifted(k1, 0.5));
    const HybridWavefunction k3 = rhs(shifted(k2, 0.5));
    const HybridWavefunction k4 = rhs(shifted(k3, 1.0));

    RunState next{state.psi, state.t + dt, state.step + 1};
    for (std::size_t n = 0; n < N; ++n)
        next.psi.psi[n] += (k1.psi[n] + 2.0 * k2.psi[n] + 2.0 * k3.psi[n] + k4.psi[n]) / 6.0;

    if (!all_finite(next.psi.psi)) {
        std::ostringstream msg;
        msg << "non-finite state after step " << next.step << " (t = " << next.t << ", dt = " << dt
            << "); previous state norm^2 = " << state.psi.norm2() << ", max |psi| = " << max_abs(state.psi.psi)
            << ", dt_max = " << dt_max(H);
        fail(ErrorKind::Runtime, msg.str());
    }
    return next;
}

RunState evolve(const HybridWavefunction& psi0, const HybridHamiltonian& H, const EvolveOptions& options,
                const StateObserver& on_step, const StateObserver& on_snapshot) {
    require(options.dt > 0.0, ErrorKind::Validation, "time step must be positive");
    if (options.check_dt_max) {
        const double limit = dt_max(H);
        require(options.dt <= limit, ErrorKind::Validation,
                "time step " + std::to_string(options.dt) + " exceeds dt_max = " + std::to_string(limit));
    }
    RunState state{psi0, 0.0, 0};
    if (on_step) on_step(state);
    if (on_snapshot) on_snapshot(state);
    for (std::size_t s = 0; s < options.steps; ++s) {
        state = step_rk4(state, H, options.dt);
        // t from the step count keeps the time axis free of accumulated rounding
        state.t = static_cast<double>(state.step) * options.dt;
        if (on_step) on_step(state);
        if (on_snapshot && options.snapshot_every > 0 && state.step % options.snapshot_every == 0) on_snapshot(state);
    }
    return state;
}

cplx total_energy(const HybridWavefunction& psi, const HybridHamiltonian& H) {
    return inner(psi, apply_liouvillian(H, psi));
}

DenseExponential::DenseExponential(const HybridHamiltonian& H) : grid_(H.grid()), hbar_(H.params().hbar) {
    const CMatrix L = materialize_liouvillian(H);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (L + L.adjoint()));
    require(es.info() == Eigen::Success, ErrorKind::Runtime, "dense eigensolver failed");
    vectors_ = es.eigenvectors();
    eigenvalues_ = es.eigenvalues();
}

HybridWavefunction DenseExponential::evolve(const HybridWavefunction& psi0, double t) const {
    require(psi0.grid == grid_, ErrorKind::Shape, "state lives on a different grid");
    const CVector v = Eigen::Map<const CVector>(psi0.psi.data(), static_cast<long>(psi0.psi.size()));
    CVector c = vectors_.adjoint() * v;
    for (long k = 0; k < c.size(); ++k) c(k) *= std::polar(1.0, -eigenvalues_(k) * t / hbar_);
    const CVector out = vectors_ * c;
    HybridWavefunction r = psi0;
    for (long k = 0; k < out.size(); ++k) r.psi[static_cast<std::size_t>(k)] = out(k);
    return r;
}

HybridWavefunction dense_exponential_oracle(const HybridHamiltonian& H, const HybridWavefunction& psi0, double t) {
    return DenseExponential(H).evolve(psi0, t);
}

}  // namespace hkvh
