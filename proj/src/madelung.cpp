#include "hybridkvh/madelung.hpp"

#include "hybridkvh/densities.hpp"

#include <algorithm>
#include <cmath>

namespace hkvh {

namespace {

void require_continuum(const PhaseGrid& g) {
    require(g.mode == Mode::Continuum, ErrorKind::Unsupported, "Madelung diagnostics need a continuum grid");
}

double absolute_threshold(const RField& D, double relative) {
    return relative * *std::max_element(D.begin(), D.end());
}

RField imag_of_conj_product(const CField& psi, const CField& dpsi) {
    RField out(psi.shape());
    for (std::size_t k = 0; k < psi.size(); ++k) out[k] = (std::conj(psi[k]) * dpsi[k]).imag();
    return out;
}

template <class F>
RField pointwise(const PhaseGrid& g, F f) {
    RField out(hybrid_shape(g));
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j)
            for (std::size_t k = 0; k < g.nx; ++k) out(i, j, k) = f(i, j, k);
    return out;
}

// Masked L2 norm and D-weighted RMS of a residual field.
ResidualField finish(const PhaseGrid& g, RField r, const RField& D, const MaskField& mask) {
    KahanSum plain, weighted, mass;
    for (std::size_t k = 0; k < r.size(); ++k) {
        if (!mask[k]) {
            r[k] = 0.0;
            continue;
        }
        plain.add(r[k] * r[k]);
        weighted.add(D[k] * r[k] * r[k]);
        mass.add(D[k]);
    }
    ResidualField out;
    out.norm = std::sqrt(plain.value() * g.cell_weight());
    out.weighted = mass.value() > 0.0 ? std::sqrt(weighted.value() / mass.value()) : 0.0;
    out.r = std::move(r);
    return out;
}

// Centred (or midpoint) time stencil over a snapshot list.
struct Stencil {
    const HybridWavefunction* before;
    const HybridWavefunction* after;
    std::vector<const HybridWavefunction*> centre;  // states whose spatial terms are averaged
    double span;                                    // time between before and after
};

Stencil make_stencil(std::span<const HybridWavefunction> snaps, double delta) {
    require(snaps.size() >= 2, ErrorKind::Validation, "time-derivative stencil needs at least two snapshots");
    require(delta > 0.0, ErrorKind::Validation, "snapshot spacing must be positive");
    for (const auto& s : snaps)
        require(s.grid == snaps[0].grid, ErrorKind::Shape, "snapshots live on different grids");
    if (snaps.size() == 2) return {&snaps[0], &snaps[1], {&snaps[0], &snaps[1]}, delta};
    const std::size_t m = snaps.size() / 2;
    return {&snaps[m - 1], &snaps[m + 1], {&snaps[m]}, 2.0 * delta};
}

// Average of f(state) over the stencil centre.
template <class F>
RField centred(const Stencil& st, F f) {
    RField acc = f(*st.centre[0]);
    for (std::size_t n = 1; n < st.centre.size(); ++n) {
        const RField v = f(*st.centre[n]);
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += v[k];
    }
    const double w = 1.0 / static_cast<double>(st.centre.size());
    for (auto& v : acc) v *= w;
    return acc;
}

MaskField mask_union(const Stencil& st, double hbar, double threshold) {
    MaskField m = phase_gradients(*st.before, hbar, threshold).mask;
    const MaskField a = phase_gradients(*st.after, hbar, threshold).mask;
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = m[k] && a[k];
    for (const auto* c : st.centre) {
        const MaskField b = phase_gradients(*c, hbar, threshold).mask;
        for (std::size_t k = 0; k < m.size(); ++k) m[k] = m[k] && b[k];
    }
    return m;
}

}  // namespace

MadelungFields polar_decompose(const HybridWavefunction& psi, double hbar, double node_threshold) {
    const PhaseGrid& g = psi.grid;
    require_continuum(g);
    MadelungFields f{g, abs2(psi.psi), RField(hybrid_shape(g)), MaskField(hybrid_shape(g)), 0.0};
    f.threshold = absolute_threshold(f.D, node_threshold);
    require(f.threshold > 0.0, ErrorKind::Runtime, "degenerate state: psi vanishes everywhere");
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            bool have_prev = false;
            double prev = 0.0;
            for (std::size_t k = 0; k < g.nx; ++k) {
                if (f.D(i, j, k) < f.threshold) continue;
                f.mask(i, j, k) = 1;
                double s = std::arg(psi.psi(i, j, k));
                if (have_prev) s += 2.0 * M_PI * std::round((prev - s) / (2.0 * M_PI));
                f.S(i, j, k) = hbar * s;
                prev = s;
                have_prev = true;
            }
        }
    return f;
}

HybridWavefunction reconstruct(const MadelungFields& f, double hbar) {
    auto out = HybridWavefunction::zeros(f.grid);
    for (std::size_t k = 0; k < out.psi.size(); ++k)
        out.psi[k] = f.mask[k] ? std::polar(std::sqrt(f.D[k]), f.S[k] / hbar) : cplx{};
    return out;
}

PhaseGradients phase_gradients(const HybridWavefunction& psi, double hbar, double node_threshold) {
    const PhaseGrid& g = psi.grid;
    require_continuum(g);
    PhaseGradients out{abs2(psi.psi), {}, {}, {}, RField(hybrid_shape(g)), MaskField(hybrid_shape(g))};
    const double threshold = absolute_threshold(out.D, node_threshold);
    require(threshold > 0.0, ErrorKind::Runtime, "degenerate state: psi vanishes everywhere");
    const CField lap = second_derivative(psi.psi, 2, g.Lx);
    out.Sq = imag_of_conj_product(psi.psi, derivative(psi.psi, 0, g.Lq));
    out.Sp = imag_of_conj_product(psi.psi, derivative(psi.psi, 1, g.Lp));
    out.Sx = imag_of_conj_product(psi.psi, derivative(psi.psi, 2, g.Lx));
    for (std::size_t k = 0; k < out.D.size(); ++k) {
        const double D = out.D[k];
        if (D < threshold) {
            out.Sq[k] = out.Sp[k] = out.Sx[k] = 0.0;
            continue;
        }
        out.mask[k] = 1;
        out.Sq[k] *= hbar / D;
        out.Sp[k] *= hbar / D;
        out.Sx[k] *= hbar / D;
        out.quantum_curvature[k] =
            (std::conj(psi.psi[k]) * lap[k]).real() / D + out.Sx[k] * out.Sx[k] / (hbar * hbar);
    }
    return out;
}

HybridVelocity velocity_field(const HybridWavefunction& psi, const HybridHamiltonian& H, double node_threshold) {
    const auto& h = H.separable();
    const VectorField X = hamiltonian_vector_field(H);
    HybridVelocity v{X.q, X.p, RField(hybrid_shape(h.grid))};
    if (h.quantum_kinetic) {
        const PhaseGradients pg = phase_gradients(psi, h.params.hbar, node_threshold);
        for (std::size_t k = 0; k < v.x.size(); ++k) v.x[k] = pg.Sx[k] / h.params.m;
    }
    return v;
}

RField hybrid_lagrangian(const HybridWavefunction& psi, const HybridHamiltonian& H, double node_threshold) {
    const auto& h = H.separable();
    RField L = interaction_lagrangian(H);
    if (!h.quantum_kinetic) return L;
    const PhaseGradients pg = phase_gradients(psi, h.params.hbar, node_threshold);
    const double m = h.params.m, hbar = h.params.hbar;
    for (std::size_t k = 0; k < L.size(); ++k)
        L[k] += pg.Sx[k] * pg.Sx[k] / (2.0 * m) + hbar * hbar / (2.0 * m) * pg.quantum_curvature[k];
    return L;
}

HybridCurrents hybrid_currents(const HybridWavefunction& psi, const HybridHamiltonian& H, double node_threshold) {
    const auto& h = H.separable();
    const PhaseGrid& g = h.grid;
    const double hbar = h.params.hbar, m = h.params.m;
    const RField joint = joint_distribution(psi, hbar);
    const VectorField X = hamiltonian_vector_field(H);
    HybridCurrents c{RField(hybrid_shape(g)), RField(hybrid_shape(g)), RField(hybrid_shape(g))};
    for (std::size_t k = 0; k < joint.size(); ++k) {
        c.Cq[k] = joint[k] * X.q[k];
        c.Cp[k] = joint[k] * X.p[k];
    }
    if (!h.quantum_kinetic) return c;

    const PhaseGradients pg = phase_gradients(psi, hbar, node_threshold);
    // j = D S_x = hbar Im(conj(psi) d_x psi) is smooth through nodes
    RField j = imag_of_conj_product(psi.psi, derivative(psi.psi, 2, g.Lx));
    for (auto& v : j) v *= hbar;
    const RField pj = pointwise(g, [&](auto i, auto jj, auto k) { return g.p(jj) * j(i, jj, k); });
    const RField dp_pj = derivative(pj, 1, g.Lp);
    const RField jq = derivative(j, 0, g.Lq), jp = derivative(j, 1, g.Lp);
    RField R(hybrid_shape(g));
    for (std::size_t k = 0; k < R.size(); ++k) R[k] = std::abs(psi.psi[k]);
    const RField Rx = derivative(R, 2, g.Lx);
    const RField Rq = derivative(R, 0, g.Lq), Rp = derivative(R, 1, g.Lp);
    const RField Rxq = derivative(Rx, 0, g.Lq), Rxp = derivative(Rx, 1, g.Lp);
    for (std::size_t k = 0; k < j.size(); ++k) {
        const double bracket_jS = jq[k] * pg.Sp[k] - jp[k] * pg.Sq[k];
        const double bracket_R = Rq[k] * Rxp[k] - Rp[k] * Rxq[k];
        c.Q[k] = (j[k] + dp_pj[k] + bracket_jS) / m - hbar * hbar / m * bracket_R;
    }
    return c;
}

MadelungResiduals madelung_residuals(std::span<const HybridWavefunction> snaps, double delta,
                                     const HybridHamiltonian& H, double node_threshold) {
    const auto& h = H.separable();
    const PhaseGrid& g = h.grid;
    require(snaps[0].grid == g, ErrorKind::Shape, "snapshots and Hamiltonian live on different grids");
    const Stencil st = make_stencil(snaps, delta);
    const double hbar = h.params.hbar, m = h.params.m, M = h.params.M;
    const bool kinetic = h.quantum_kinetic;

    RField dtS(hybrid_shape(g)), dtD(hybrid_shape(g));
    for (std::size_t k = 0; k < dtS.size(); ++k) {
        dtS[k] = hbar * std::arg(st.after->psi[k] * std::conj(st.before->psi[k])) / st.span;
        dtD[k] = (std::norm(st.after->psi[k]) - std::norm(st.before->psi[k])) / st.span;
    }
    const RField LI = interaction_lagrangian(H);

    const RField spatial_S = centred(st, [&](const HybridWavefunction& s) {
        const PhaseGradients pg = phase_gradients(s, hbar, node_threshold);
        return pointwise(g, [&](auto i, auto j, auto k) {
            const double bracket = h.dVdq(i, j, k) * pg.Sp(i, j, k) - g.p(j) / M * pg.Sq(i, j, k);
            double v = -LI(i, j, k) - bracket;
            if (kinetic)
                v += pg.Sx(i, j, k) * pg.Sx(i, j, k) / (2.0 * m) -
                     hbar * hbar / (2.0 * m) * pg.quantum_curvature(i, j, k);
            return v;
        });
    });
    const RField spatial_D = centred(st, [&](const HybridWavefunction& s) {
        const RField D = abs2(s.psi);
        const RField Dq = derivative(D, 0, g.Lq), Dp = derivative(D, 1, g.Lp);
        RField flux = imag_of_conj_product(s.psi, derivative(s.psi, 2, g.Lx));
        for (auto& v : flux) v *= hbar / m;
        const RField div = derivative(flux, 2, g.Lx);
        return pointwise(g, [&](auto i, auto j, auto k) {
            const double bracket = h.dVdq(i, j, k) * Dp(i, j, k) - g.p(j) / M * Dq(i, j, k);
            return (kinetic ? div(i, j, k) : 0.0) - bracket;
        });
    });
    const RField Dc = centred(st, [](const HybridWavefunction& s) { return abs2(s.psi); });
    const MaskField mask = mask_union(st, hbar, node_threshold);

    RField rS(hybrid_shape(g)), rD(hybrid_shape(g));
    for (std::size_t k = 0; k < rS.size(); ++k) {
        rS[k] = dtS[k] + spatial_S[k];
        rD[k] = dtD[k] + spatial_D[k];
    }
    return {finish(g, std::move(rS), Dc, mask), finish(g, std::move(rD), Dc, mask)};
}

ResidualField continuity_residual(std::span<const HybridWavefunction> snaps, double delta, const HybridHamiltonian& H,
                                  double node_threshold) {
    const auto& h = H.separable();
    const PhaseGrid& g = h.grid;
    require(snaps[0].grid == g, ErrorKind::Shape, "snapshots and Hamiltonian live on different grids");
    const Stencil st = make_stencil(snaps, delta);
    const double hbar = h.params.hbar;
    const RField Ja = joint_distribution(*st.after, hbar), Jb = joint_distribution(*st.before, hbar);
    const RField div = centred(st, [&](const HybridWavefunction& s) {
        const HybridCurrents c = hybrid_currents(s, H, node_threshold);
        const RField a = derivative(c.Cq, 0, g.Lq), b = derivative(c.Cp, 1, g.Lp), q = derivative(c.Q, 2, g.Lx);
        RField out(hybrid_shape(g));
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = a[k] + b[k] + q[k];
        return out;
    });
    RField r(hybrid_shape(g));
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = (Ja[k] - Jb[k]) / st.span + div[k];
    const RField Dc = centred(st, [](const HybridWavefunction& s) { return abs2(s.psi); });
    return finish(g, std::move(r), Dc, mask_union(st, hbar, node_threshold));
}

double quantum_marginal_residual(std::span<const HybridWavefunction> snaps, double delta, const HybridHamiltonian& H) {
    const auto& h = H.separable();
    const PhaseGrid& g = h.grid;
    const Stencil st = make_stencil(snaps, delta);
    const auto marginal = [&](const RField& f) {
        const auto per = integrate_phase(g, f);
        RField out({1, 1, g.nx});
        for (std::size_t k = 0; k < g.nx; ++k) out(0, 0, k) = per[k];
        return out;
    };
    const RField ra = marginal(abs2(st.after->psi)), rb = marginal(abs2(st.before->psi));
    const RField flux = centred(st, [&](const HybridWavefunction& s) {
        RField j = imag_of_conj_product(s.psi, derivative(s.psi, 2, g.Lx));
        for (auto& v : j) v *= h.params.hbar / h.params.m;
        return h.quantum_kinetic ? marginal(j) : RField({1, 1, g.nx});
    });
    const RField div = derivative(flux, 2, g.Lx);
    double worst = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < g.nx; ++k) {
        worst = std::max(worst, std::abs((ra[k] - rb[k]) / st.span + div[k]));
        scale = std::max(scale, std::abs(ra[k]));
    }
    return worst / scale;
}

// --- interpolation -------------------------------------------------------------

PeriodicInterpolator::PeriodicInterpolator(const PhaseGrid& grid, int order) : grid_(grid), order_(order) {
    require_continuum(grid);
    require(order >= 2 && order <= 16 && order % 2 == 0, ErrorKind::Validation,
            "interpolation order must be even and in [2, 16]");
}

PeriodicInterpolator::Stencil PeriodicInterpolator::stencil(double coord, double origin, double h,
                                                            std::size_t n) const {
    const double u = (coord - origin) / h;
    const double base = std::floor(u);
    const double frac = u - base;
    const int half = order_ / 2;
    Stencil s{};
    const long nn = static_cast<long>(n);
    for (int a = 0; a < order_; ++a) {
        const int node = a - half + 1;  // nodes -half+1 .. half
        double w = 1.0;
        for (int b = 0; b < order_; ++b) {
            if (b == a) continue;
            const int other = b - half + 1;
            w *= (frac - other) / static_cast<double>(node - other);
        }
        const long idx = static_cast<long>(base) + node;
        s.index[static_cast<std::size_t>(a)] = static_cast<std::size_t>(((idx % nn) + nn) % nn);
        s.weight[static_cast<std::size_t>(a)] = w;
    }
    return s;
}

template <class F, class T>
T PeriodicInterpolator::eval(const F& f, double q, double p, double x) const {
    const Stencil sq = stencil(q, -0.5 * grid_.Lq, grid_.hq(), grid_.nq);
    const Stencil sp = stencil(p, -0.5 * grid_.Lp, grid_.hp(), grid_.np);
    const Stencil sx = stencil(x, -0.5 * grid_.Lx, grid_.hx(), grid_.nx);
    const auto n = static_cast<std::size_t>(order_);
    T acc{};
    for (std::size_t a = 0; a < n; ++a) {
        T acc_p{};
        for (std::size_t b = 0; b < n; ++b) {
            T acc_x{};
            for (std::size_t c = 0; c < n; ++c) acc_x += sx.weight[c] * f(sq.index[a], sp.index[b], sx.index[c]);
            acc_p += sp.weight[b] * acc_x;
        }
        acc += sq.weight[a] * acc_p;
    }
    return acc;
}

double PeriodicInterpolator::operator()(const RField& f, double q, double p, double x) const {
    return eval<RField, double>(f, q, p, x);
}

cplx PeriodicInterpolator::operator()(const CField& f, double q, double p, double x) const {
    return eval<CField, cplx>(f, q, p, x);
}

bool PeriodicInterpolator::resolved(const MaskField& mask, double q, double p, double x) const {
    const auto nearest = [](double c, double origin, double h, std::size_t n) {
        const long idx = std::lround((c - origin) / h);
        const long nn = static_cast<long>(n);
        return static_cast<std::size_t>(((idx % nn) + nn) % nn);
    };
    return mask(nearest(q, -0.5 * grid_.Lq, grid_.hq(), grid_.nq), nearest(p, -0.5 * grid_.Lp, grid_.hp(), grid_.np),
                nearest(x, -0.5 * grid_.Lx, grid_.hx(), grid_.nx)) != 0;
}

// --- trajectories ------------------------------------------------------------

TrajectoryEnsemble make_loop(std::array<double, 3> c, std::array<double, 3> r, std::size_t count) {
    require(count >= 8 && count % 2 == 0, ErrorKind::Validation, "a loop needs an even number (>= 8) of points");
    TrajectoryEnsemble loop;
    for (std::size_t n = 0; n < count; ++n) {
        const double s = 2.0 * M_PI * static_cast<double>(n) / static_cast<double>(count);
        loop.points.push_back({c[0] + r[0] * std::cos(s), c[1] + r[1] * std::sin(s), c[2] + r[2] * std::sin(s)});
    }
    loop.flagged.assign(count, 0);
    return loop;
}

VelocitySnapshot velocity_snapshot(const HybridWavefunction& psi, const HybridHamiltonian& H, double t,
                                   double node_threshold) {
    return {t, velocity_field(psi, H, node_threshold), phase_gradients(psi, H.params().hbar, node_threshold).mask};
}

void advect_trajectories(TrajectoryEnsemble& ens, const VelocitySnapshot& a, const VelocitySnapshot& b,
                         const PeriodicInterpolator& interp) {
    const double dt = b.t - a.t;
    require(dt > 0.0, ErrorKind::Validation, "velocity snapshots must be increasing in time");
    using P = std::array<double, 3>;
    const auto velocity = [&](const P& z, double theta) {
        P v{};
        const HybridVelocity* fields[2] = {&a.v, &b.v};
        for (int s = 0; s < 2; ++s) {
            const double w = s == 0 ? 1.0 - theta : theta;
            if (w == 0.0) continue;
            v[0] += w * interp(fields[s]->q, z[0], z[1], z[2]);
            v[1] += w * interp(fields[s]->p, z[0], z[1], z[2]);
            v[2] += w * interp(fields[s]->x, z[0], z[1], z[2]);
        }
        return v;
    };
    const auto axpy = [](const P& z, double c, const P& k) { return P{z[0] + c * k[0], z[1] + c * k[1], z[2] + c * k[2]}; };
    for (std::size_t n = 0; n < ens.size(); ++n) {
        if (ens.flagged[n]) continue;
        P& z = ens.points[n];
        if (!interp.resolved(a.mask, z[0], z[1], z[2])) {
            ens.flagged[n] = 1;
            continue;
        }
        const P k1 = velocity(z, 0.0);
        const P k2 = velocity(axpy(z, 0.5 * dt, k1), 0.5);
        const P k3 = velocity(axpy(z, 0.5 * dt, k2), 0.5);
        const P k4 = velocity(axpy(z, dt, k3), 1.0);
        for (int c = 0; c < 3; ++c) z[static_cast<std::size_t>(c)] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
}

namespace {

// Spectral derivative with respect to the loop parameter s in [0, 2 pi) of
// one coordinate of a closed loop.
std::vector<double> loop_derivative(const TrajectoryEnsemble& loop, int coord) {
    const std::size_t n = loop.size();
    RField f({n, 1, 1});
    for (std::size_t k = 0; k < n; ++k) f(k, 0, 0) = loop.points[k][static_cast<std::size_t>(coord)];
    const RField d = derivative(f, 0, 2.0 * M_PI);
    return {d.begin(), d.end()};
}

}  // namespace

double loop_action(const TrajectoryEnsemble& loop) {
    const std::vector<double> dq = loop_derivative(loop, 0);
    KahanSum s;
    for (std::size_t k = 0; k < loop.size(); ++k) s.add(loop.points[k][1] * dq[k]);
    return s.value() * 2.0 * M_PI / static_cast<double>(loop.size());
}

double loop_potential_rate(const TrajectoryEnsemble& loop, const HybridHamiltonian& H, const PeriodicInterpolator& interp) {
    const auto& h = H.separable();
    const std::vector<double> dx = loop_derivative(loop, 2);
    KahanSum s;
    for (std::size_t k = 0; k < loop.size(); ++k) {
        const auto& z = loop.points[k];
        s.add(interp(h.dVdx, z[0], z[1], z[2]) * dx[k]);
    }
    return s.value() * 2.0 * M_PI / static_cast<double>(loop.size());
}

LagrangianTracker::LagrangianTracker(const HybridHamiltonian& H, TrajectoryEnsemble loop, TrajectoryEnsemble tracers,
                                     double node_threshold, int order)
    : H_(H), threshold_(node_threshold), interp_(H.grid(), order), loop_(std::move(loop)), tracers_(std::move(tracers)) {
    H_.separable();
    if (loop_.flagged.size() != loop_.size()) loop_.flagged.assign(loop_.size(), 0);
    if (tracers_.flagged.size() != tracers_.size()) tracers_.flagged.assign(tracers_.size(), 0);
}

void LagrangianTracker::record_loop(double t) {
    if (loop_.size() == 0) return;
    history_.emplace_back(t, loop_action(loop_));
    rhs_history_.push_back(loop_potential_rate(loop_, H_, interp_));
    if (history_.size() > 3) {
        history_.erase(history_.begin());
        rhs_history_.erase(rhs_history_.begin());
    }
    if (history_.size() == 3) {
        const auto& [t0, i0] = history_[0];
        const auto& [t1, i1] = history_[1];
        const auto& [t2, i2] = history_[2];
        samples_.push_back({t1, i1, (i2 - i0) / (t2 - t0), rhs_history_[1]});
    }
}

void LagrangianTracker::observe(const HybridWavefunction& psi, double t) {
    VelocitySnapshot snap = velocity_snapshot(psi, H_, t, threshold_);
    const RField L = hybrid_lagrangian(psi, H_, threshold_);
    if (started_) {
        advect_trajectories(loop_, last_, snap, interp_);
        advect_trajectories(tracers_, last_, snap, interp_);
    }
    const double hbar = H_.params().hbar;
    const std::size_t n = tracers_.size();
    if (!started_) {
        last_value_.assign(n, cplx{});
        phase_.assign(n, 0.0);
        action_.assign(n, 0.0);
        last_lagrangian_.assign(n, 0.0);
    }
    const double dt = started_ ? t - last_.t : 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (tracers_.flagged[k]) continue;
        const auto& z = tracers_.points[k];
        const cplx value = interp_(psi.psi, z[0], z[1], z[2]);
        const double lag = interp_(L, z[0], z[1], z[2]);
        if (started_) {
            phase_[k] += hbar * std::arg(value * std::conj(last_value_[k]));
            action_[k] += 0.5 * dt * (lag + last_lagrangian_[k]);
        }
        last_value_[k] = value;
        last_lagrangian_[k] = lag;
    }
    last_ = std::move(snap);
    started_ = true;
    record_loop(t);
}

std::vector<double> LagrangianTracker::phase_transport_error() const {
    std::vector<double> out(phase_.size(), 0.0);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::abs(phase_[k] - action_[k]);
    return out;
}

}  // namespace hkvh
