#include "hybridkvh/closure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hybridkvh/initial_states.hpp"

namespace hkvh {

namespace {

// Tr(A B) for n*n blocks stored row-major at component offset 0.
cplx trace_product(const cplx* a, const cplx* b, std::size_t n) {
    cplx s = 0.0;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) s += a[r * n + c] * b[c * n + r];
    return s;
}

const cplx* block(const CField& f, std::size_t i, std::size_t j) { return &f(i, j, 0); }

void require_matrix(const ClosureState& s, const HybridHamiltonian& H) {
    require(!H.is_separable(), ErrorKind::Unsupported, "the closure model needs a matrix-valued Hamiltonian");
    require(H.grid() == s.grid, ErrorKind::Shape, "closure state and Hamiltonian live on different grids");
}

double phase_integral(const PhaseGrid& g, const RField& f) {
    KahanSum s;
    for (double v : f) s.add(v);
    return s.value() * g.phase_weight();
}

// The evolved fields of one RK4 stage. w = u - A.
struct Fields {
    RField D;
    CField rho;
    RField wq, wp;

    void axpy(double c, const Fields& k) {
        for (std::size_t n = 0; n < D.size(); ++n) D[n] += c * k.D[n];
        for (std::size_t n = 0; n < rho.size(); ++n) rho[n] += c * k.rho[n];
        for (std::size_t n = 0; n < wq.size(); ++n) {
            wq[n] += c * k.wq[n];
            wp[n] += c * k.wp[n];
        }
    }
};

Fields fields_of(const ClosureState& s) {
    Fields f{s.D, s.rho, s.uq, s.up};
    for (std::size_t i = 0; i < s.grid.nq; ++i)
        for (std::size_t j = 0; j < s.grid.np; ++j) f.wq(i, j, 0) -= s.grid.p(j);
    return f;
}

void store(ClosureState& s, const Fields& f) {
    s.D = f.D;
    s.rho = f.rho;
    s.uq = f.wq;
    s.up = f.wp;
    for (std::size_t i = 0; i < s.grid.nq; ++i)
        for (std::size_t j = 0; j < s.grid.np; ++j) s.uq(i, j, 0) += s.grid.p(j);
}

PhaseVelocity velocity_of(const PhaseGrid& g, const MatrixHamiltonian& h, const CField& rho) {
    const std::size_t n = g.nx;
    PhaseVelocity v{RField(phase_shape(g)), RField(phase_shape(g))};
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            v.q(i, j, 0) = trace_product(block(rho, i, j), block(h.Hp, i, j), n).real();
            v.p(i, j, 0) = -trace_product(block(rho, i, j), block(h.Hq, i, j), n).real();
        }
    return v;
}

// Time derivative of the closure fields. With `general` false the commutator
// uses H and w is neither read nor evolved.
Fields rates(const PhaseGrid& g, const MatrixHamiltonian& h, const Fields& f, bool general) {
    const std::size_t n = g.nx, nn = n * n;
    const double hbar = h.params.hbar;
    const PhaseVelocity v = velocity_of(g, h, f.rho);

    Fields out{RField(phase_shape(g)), CField(matrix_shape(g)), RField(phase_shape(g)), RField(phase_shape(g))};

    RField Dvq(phase_shape(g)), Dvp(phase_shape(g));
    for (std::size_t k = 0; k < Dvq.size(); ++k) {
        Dvq[k] = f.D[k] * v.q[k];
        Dvp[k] = f.D[k] * v.p[k];
    }
    const RField divq = derivative(Dvq, 0, g.Lq), divp = derivative(Dvp, 1, g.Lp);
    for (std::size_t k = 0; k < out.D.size(); ++k) out.D[k] = -(divq[k] + divp[k]);

    const CField rq = derivative(f.rho, 0, g.Lq), rp = derivative(f.rho, 1, g.Lp);
    RField wqq, wqp, wpq, wpp;
    if (general) {
        wqq = derivative(f.wq, 0, g.Lq);
        wqp = derivative(f.wq, 1, g.Lp);
        wpq = derivative(f.wp, 0, g.Lq);
        wpp = derivative(f.wp, 1, g.Lp);
    }
    std::vector<cplx> K(nn);
    const cplx minus_i_over_hbar(0.0, -1.0 / hbar);
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            const double vq = v.q(i, j, 0), vp = v.p(i, j, 0);
            const cplx* H = block(h.H, i, j);
            const cplx* Hq = block(h.Hq, i, j);
            const cplx* Hp = block(h.Hp, i, j);
            const cplx* rho = block(f.rho, i, j);
            const double wq = general ? f.wq(i, j, 0) : 0.0, wp = general ? f.wp(i, j, 0) : 0.0;
            // u.X_H - L_H = H + w.X_H with X_H = (Hp, -Hq)
            for (std::size_t c = 0; c < nn; ++c) K[c] = H[c] + wq * Hp[c] - wp * Hq[c];
            cplx* out_rho = &out.rho(i, j, 0);
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b) {
                    cplx comm = 0.0;
                    for (std::size_t c = 0; c < n; ++c) comm += K[a * n + c] * rho[c * n + b] - rho[a * n + c] * K[c * n + b];
                    const std::size_t ab = a * n + b;
                    out_rho[ab] = -(vq * rq(i, j, ab) + vp * rp(i, j, ab)) + minus_i_over_hbar * comm;
                }
            if (!general) continue;
            // Lie derivative of the covector w along v, with the velocity
            // gradient taken from the analytic symbol derivatives.
            const cplx* Hqq = block(h.Hqq, i, j);
            const cplx* Hqp = block(h.Hqp, i, j);
            const cplx* Hpp = block(h.Hpp, i, j);
            const cplx* dq_rho = block(rq, i, j);
            const cplx* dp_rho = block(rp, i, j);
            const double dq_vq = (trace_product(dq_rho, Hp, n) + trace_product(rho, Hqp, n)).real();
            const double dp_vq = (trace_product(dp_rho, Hp, n) + trace_product(rho, Hpp, n)).real();
            const double dq_vp = -(trace_product(dq_rho, Hq, n) + trace_product(rho, Hqq, n)).real();
            const double dp_vp = -(trace_product(dp_rho, Hq, n) + trace_product(rho, Hqp, n)).real();
            // (w . Tr(X_H grad rho))_i = w_q Tr(Hp d_i rho) - w_p Tr(Hq d_i rho)
            const double src_q = (wq * trace_product(Hp, dq_rho, n) - wp * trace_product(Hq, dq_rho, n)).real();
            const double src_p = (wq * trace_product(Hp, dp_rho, n) - wp * trace_product(Hq, dp_rho, n)).real();
            out.wq(i, j, 0) = -(vq * wqq(i, j, 0) + vp * wqp(i, j, 0)) - (wq * dq_vq + wp * dq_vp) + src_q;
            out.wp(i, j, 0) = -(vq * wpq(i, j, 0) + vp * wpp(i, j, 0)) - (wq * dp_vq + wp * dp_vp) + src_p;
        }
    return out;
}

ClosureState rk4(const ClosureState& s, const HybridHamiltonian& H, double dt, bool general) {
    require_matrix(s, H);
    require(dt > 0.0 && std::isfinite(dt), ErrorKind::Validation, "time step must be positive");
    const PhaseGrid& g = s.grid;
    const MatrixHamiltonian& h = H.matrix();
    const Fields y = fields_of(s);
    const Fields k1 = rates(g, h, y, general);
    Fields y2 = y;
    y2.axpy(0.5 * dt, k1);
    const Fields k2 = rates(g, h, y2, general);
    Fields y3 = y;
    y3.axpy(0.5 * dt, k2);
    const Fields k3 = rates(g, h, y3, general);
    Fields y4 = y;
    y4.axpy(dt, k3);
    const Fields k4 = rates(g, h, y4, general);
    Fields next = y;
    next.axpy(dt / 6.0, k1);
    next.axpy(dt / 3.0, k2);
    next.axpy(dt / 3.0, k3);
    next.axpy(dt / 6.0, k4);
    if (!general) {
        next.wq = y.wq;
        next.wp = y.wp;
    }

    ClosureState out = s;
    store(out, next);
    out.t = s.t + dt;
    out.step = s.step + 1;
    const auto finite = [](const auto& f) {
        return std::all_of(f.begin(), f.end(), [](const auto& v) { return std::isfinite(std::abs(v)); });
    };
    if (!finite(out.D) || !all_finite(out.rho) || !finite(out.uq) || !finite(out.up)) {
        std::ostringstream msg;
        msg << "non-finite closure state at step " << out.step << " (t = " << out.t << ", dt = " << dt
            << "); reduce dt below " << closure_dt_max(s, H);
        fail(ErrorKind::Runtime, msg.str());
    }
    return out;
}

}  // namespace

double ClosureState::manifold_deviation() const {
    double m = 0.0;
    for (std::size_t i = 0; i < grid.nq; ++i)
        for (std::size_t j = 0; j < grid.np; ++j)
            m = std::max({m, std::abs(uq(i, j, 0) - grid.p(j)), std::abs(up(i, j, 0))});
    return m;
}

void ClosureState::set_canonical_u() {
    uq = RField(phase_shape(grid));
    up = RField(phase_shape(grid));
    for (std::size_t i = 0; i < grid.nq; ++i)
        for (std::size_t j = 0; j < grid.np; ++j) uq(i, j, 0) = grid.p(j);
}

void ClosureInit::validate(const PhaseGrid& grid) const {
    require(grid.mode == Mode::FiniteDim, ErrorKind::Unsupported, "the closure model needs a finite_dim grid");
    require(grid.nx >= 2, ErrorKind::Validation, "the closure model needs at least two levels");
    require(sigma_q > 0.0 && sigma_p > 0.0, ErrorKind::Validation, "closure widths sigma_q, sigma_p must be positive");
    require(texture_width > 0.0, ErrorKind::Validation, "texture_width must be positive");
    require(mixing >= 0.0 && mixing <= 1.0, ErrorKind::Validation, "mixing must lie in [0, 1]");
}

ClosureState make_closure_state(const PhaseGrid& g, const ClosureInit& init) {
    g.validate();
    init.validate(g);
    InitialStateSpec bump;
    bump.q0 = init.q0;
    bump.p0 = init.p0;
    bump.sigma_q = init.sigma_q;
    bump.sigma_p = init.sigma_p;
    const CField amp = phase_space_factor(g, bump);

    ClosureState s{g, abs2(amp), CField(matrix_shape(g)), {}, {}};
    const double mass = phase_integral(g, s.D);
    for (auto& v : s.D) v /= mass;
    s.set_canonical_u();

    const std::size_t n = g.nx;
    const CMatrix mixed = CMatrix::Identity(long(n), long(n)) / static_cast<double>(n);
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            const double dq = g.q(i) - init.q0, dp = g.p(j) - init.p0;
            const double env = std::exp(-dp * dp / (2.0 * init.texture_width * init.texture_width));
            const double theta = init.theta + init.texture * std::sin(dq) * env;
            const double phi = init.phi + init.texture * std::cos(dq) * env;
            CVector chi = CVector::Zero(long(n));
            chi(0) = std::cos(0.5 * theta);
            chi(1) = std::polar(std::sin(0.5 * theta), phi);
            const CMatrix rho = (1.0 - init.mixing) * chi * chi.adjoint() + init.mixing * mixed;
            set_matrix_at(s.rho, n, i, j, rho);
            s.uq(i, j, 0) += init.perturbation * env * std::sin(dq);
            s.up(i, j, 0) += init.perturbation * env * std::cos(dq);
        }
    return s;
}

PhaseVelocity expected_vector_field(const ClosureState& s, const HybridHamiltonian& H) {
    require_matrix(s, H);
    const std::size_t n = s.levels();
    for (std::size_t i = 0; i < s.grid.nq; ++i)
        for (std::size_t j = 0; j < s.grid.np; ++j) {
            cplx tr = 0.0;
            for (std::size_t a = 0; a < n; ++a) tr += s.rho(i, j, a * n + a);
            if (std::abs(tr - 1.0) > kTraceTolerance) {
                std::ostringstream msg;
                msg << "closure state corrupted: Tr rho = " << tr.real() << " at grid point (" << i << ", " << j << ")";
                fail(ErrorKind::Runtime, msg.str());
            }
        }
    return velocity_of(s.grid, H.matrix(), s.rho);
}

ClosureState closure_step_reduced(const ClosureState& s, const HybridHamiltonian& H, double dt) {
    require(s.manifold_deviation() <= 1e-9, ErrorKind::Validation,
            "reduced closure step needs u = p dq; use the general step");
    return rk4(s, H, dt, false);
}

ClosureState closure_step_general(const ClosureState& s, const HybridHamiltonian& H, double dt) {
    return rk4(s, H, dt, true);
}

double closure_dt_max(const ClosureState& s, const HybridHamiltonian& H) {
    require_matrix(s, H);
    const PhaseGrid& g = s.grid;
    const MatrixHamiltonian& h = H.matrix();
    const std::size_t n = g.nx;
    const PhaseVelocity v = velocity_of(g, h, s.rho);
    double vq = 0.0, vp = 0.0, k = 0.0;
    for (std::size_t c = 0; c < v.q.size(); ++c) {
        vq = std::max(vq, std::abs(v.q[c]));
        vp = std::max(vp, std::abs(v.p[c]));
    }
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            const double wq = s.uq(i, j, 0) - g.p(j), wp = s.up(i, j, 0);
            const CMatrix K = matrix_at(h.H, n, i, j) + wq * matrix_at(h.Hp, n, i, j) - wp * matrix_at(h.Hq, n, i, j);
            k = std::max(k, K.norm());
        }
    const double kq = M_PI * static_cast<double>(g.nq) / g.Lq, kp = M_PI * static_cast<double>(g.np) / g.Lp;
    return 0.5 / (vq * kq + vp * kp + 2.0 * k / h.params.hbar);
}

double closure_energy(const ClosureState& s, const HybridHamiltonian& H) {
    require_matrix(s, H);
    const PhaseGrid& g = s.grid;
    const MatrixHamiltonian& h = H.matrix();
    const std::size_t n = g.nx;
    KahanSum e;
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            const double wq = s.uq(i, j, 0) - g.p(j), wp = s.up(i, j, 0);
            const cplx* rho = block(s.rho, i, j);
            const cplx value = trace_product(rho, block(h.H, i, j), n) + wq * trace_product(rho, block(h.Hp, i, j), n) -
                               wp * trace_product(rho, block(h.Hq, i, j), n);
            e.add(s.D(i, j, 0) * value.real());
        }
    return e.value() * g.phase_weight();
}

ClosureDiagnostics closure_diagnostics(const ClosureState& s, const HybridHamiltonian& H) {
    ClosureDiagnostics d;
    d.mass = phase_integral(s.grid, s.D);
    d.energy = closure_energy(s, H);
    d.min_rho_eig = std::numeric_limits<double>::infinity();
    const std::size_t n = s.levels();
    for (std::size_t i = 0; i < s.grid.nq; ++i)
        for (std::size_t j = 0; j < s.grid.np; ++j) {
            const CMatrix rho = matrix_at(s.rho, n, i, j);
            d.max_trace_dev = std::max(d.max_trace_dev, std::abs(rho.trace() - 1.0));
            d.min_rho_eig = std::min(d.min_rho_eig, min_eigenvalue(rho));
        }
    d.manifold_dev = s.manifold_deviation();
    return d;
}

double auxiliary_identity_residual(const ClosureState& s, const HybridHamiltonian& H) {
    require_matrix(s, H);
    const PhaseGrid& g = s.grid;
    const MatrixHamiltonian& h = H.matrix();
    const std::size_t n = g.nx;
    const PhaseVelocity v = velocity_of(g, h, s.rho);
    const CField rq = derivative(s.rho, 0, g.Lq), rp = derivative(s.rho, 1, g.Lp);
    // q is periodic, so q-derivatives of <X>_q and <L_H> are taken spectrally;
    // p-derivatives use the product rule with the analytic symbol derivatives.
    RField mean_L(phase_shape(g));
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            const cplx *rho = block(s.rho, i, j), *H0 = block(h.H, i, j), *Hp = block(h.Hp, i, j);
            mean_L(i, j, 0) = (g.p(j) * trace_product(rho, Hp, n) - trace_product(rho, H0, n)).real();
        }
    const RField dq_v = derivative(v.q, 0, g.Lq), dq_L = derivative(mean_L, 0, g.Lq);
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            const double p = g.p(j);
            const cplx* rho = block(s.rho, i, j);
            const cplx *H0 = block(h.H, i, j), *Hp = block(h.Hp, i, j), *Hpp = block(h.Hpp, i, j);
            const cplx *dq = block(rq, i, j), *dp = block(rp, i, j);
            // Lie_v A with A = (p, 0): (v_p + p d_q v_q, p d_p v_q)
            const double dp_vq = (trace_product(dp, Hp, n) + trace_product(rho, Hpp, n)).real();
            const double lhs_q = v.p(i, j, 0) + p * dq_v(i, j, 0);
            const double lhs_p = p * dp_vq;
            cplx dp_L = p * trace_product(rho, Hpp, n);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < n; ++c) dp_L += dp[r * n + c] * (p * Hp[c * n + r] - H0[c * n + r]);
            const double rhs_q = dq_L(i, j, 0) + trace_product(H0, dq, n).real();
            const double rhs_p = dp_L.real() + trace_product(H0, dp, n).real();
            worst = std::max({worst, std::abs(lhs_q - rhs_q), std::abs(lhs_p - rhs_p)});
            scale = std::max({scale, std::abs(lhs_q), std::abs(lhs_p)});
        }
    return scale > 0.0 ? worst / scale : worst;
}

}  // namespace hkvh
