#include "hybridkvh/liouvillian.hpp"

#include <cmath>
#include <initializer_list>
#include <tuple>

namespace hkvh {

HybridWavefunction HybridWavefunction::zeros(const PhaseGrid& grid) {
    grid.validate();
    return {grid, CField(hybrid_shape(grid))};
}

double HybridWavefunction::norm2() const {
    KahanSum s;
    for (const cplx& v : psi) s.add(std::norm(v));
    return s.value() * grid.cell_weight();
}

void HybridWavefunction::normalize() {
    const double n = std::sqrt(norm2());
    require(n > 0.0 && std::isfinite(n), ErrorKind::Runtime, "cannot normalise a zero or non-finite state");
    for (auto& v : psi) v /= n;
}

cplx inner(const HybridWavefunction& a, const HybridWavefunction& b) {
    require(a.psi.shape() == b.psi.shape(), ErrorKind::Shape, "inner product of mismatched states");
    KahanSum re, im;
    for (std::size_t n = 0; n < a.psi.size(); ++n) {
        const cplx v = std::conj(a.psi[n]) * b.psi[n];
        re.add(v.real());
        im.add(v.imag());
    }
    const double w = a.grid.cell_weight();
    return {re.value() * w, im.value() * w};
}

double distance(const HybridWavefunction& a, const HybridWavefunction& b) {
    require(a.psi.shape() == b.psi.shape(), ErrorKind::Shape, "distance between mismatched states");
    KahanSum s;
    for (std::size_t n = 0; n < a.psi.size(); ++n) s.add(std::norm(a.psi[n] - b.psi[n]));
    return std::sqrt(s.value() * a.grid.cell_weight());
}

namespace {

// Pointwise M(z) v(z) for an n*n matrix field and an n-component field.
CField matvec(const CField& M, const CField& v, std::size_t n) {
    const Shape s = v.shape();
    CField out(s);
    for (std::size_t i = 0; i < s.n0; ++i)
        for (std::size_t j = 0; j < s.n1; ++j)
            for (std::size_t a = 0; a < n; ++a) {
                cplx acc = 0.0;
                for (std::size_t b = 0; b < n; ++b) acc += M(i, j, a * n + b) * v(i, j, b);
                out(i, j, a) = acc;
            }
    return out;
}

// 1/2 (A D psi + D(A psi)), or A D psi when A is constant along the axis.
CField skew_term(const CField& A, const CField& psi, std::size_t n, int axis, double length, bool plain) {
    CField out = matvec(A, derivative(psi, axis, length), n);
    if (plain) return out;
    const CField second = derivative(matvec(A, psi, n), axis, length);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = 0.5 * (out[k] + second[k]);
    return out;
}

HybridWavefunction apply_separable(const SeparableHamiltonian& h, const HybridWavefunction& psi) {
    const PhaseGrid& g = h.grid;
    const double hbar = h.params.hbar;
    const CField dq = derivative(psi.psi, 0, g.Lq);
    const CField dp = derivative(psi.psi, 1, g.Lp);
    CField lap;
    if (h.quantum_kinetic) lap = second_derivative(psi.psi, 2, g.Lx);
    const double kin = hbar * hbar / (2.0 * h.params.m);
    const cplx ih{0.0, hbar};

    HybridWavefunction out = HybridWavefunction::zeros(g);
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            const double p = g.p(j);
            const double pm = p / h.params.M;
            for (std::size_t k = 0; k < g.nx; ++k) {
                const double LI = 0.5 * p * pm - h.V(i, j, k);
                cplx v = -LI * psi.psi(i, j, k) + ih * (h.dVdq(i, j, k) * dp(i, j, k) - pm * dq(i, j, k));
                if (h.quantum_kinetic) v -= kin * lap(i, j, k);
                out.psi(i, j, k) = v;
            }
        }
    return out;
}

HybridWavefunction apply_matrix(const MatrixHamiltonian& h, const HybridWavefunction& psi) {
    const PhaseGrid& g = h.grid;
    const std::size_t n = h.levels();
    const CField a = skew_term(h.Hq, psi.psi, n, 1, g.Lp, h.hq_independent_of_p);
    const CField b = skew_term(h.Hp, psi.psi, n, 0, g.Lq, h.hp_independent_of_q);
    const CField lh = matvec(h.H, psi.psi, n);
    const CField lhp = matvec(h.Hp, psi.psi, n);
    const cplx ih{0.0, h.params.hbar};

    HybridWavefunction out = HybridWavefunction::zeros(g);
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            const double p = g.p(j);
            for (std::size_t c = 0; c < n; ++c)
                out.psi(i, j, c) = ih * (a(i, j, c) - b(i, j, c)) - (p * lhp(i, j, c) - lh(i, j, c));
        }
    return out;
}

}  // namespace

HybridWavefunction apply_liouvillian(const HybridHamiltonian& H, const HybridWavefunction& psi) {
    require(psi.grid == H.grid(), ErrorKind::Shape, "state and Hamiltonian live on different grids");
    require(psi.psi.shape() == hybrid_shape(psi.grid), ErrorKind::Shape, "state has the wrong shape");
    return H.is_separable() ? apply_separable(H.separable(), psi) : apply_matrix(H.matrix(), psi);
}

CMatrix materialize_liouvillian(const HybridHamiltonian& H) {
    const PhaseGrid& g = H.grid();
    const std::size_t N = g.size();
    require(N <= kMaxDenseDimension, ErrorKind::Unsupported,
            "dense Liouvillian limited to dimension " + std::to_string(kMaxDenseDimension));
    CMatrix L(static_cast<long>(N), static_cast<long>(N));
    HybridWavefunction e = HybridWavefunction::zeros(g);
    for (std::size_t col = 0; col < N; ++col) {
        e.psi[col] = 1.0;
        const HybridWavefunction out = apply_liouvillian(H, e);
        for (std::size_t row = 0; row < N; ++row) L(static_cast<long>(row), static_cast<long>(col)) = out.psi[row];
        e.psi[col] = 0.0;
    }
    return L;
}

namespace {

CField field_product(const CField& A, const CField& B, std::size_t n) {
    CField out(A.shape());
    for (std::size_t i = 0; i < A.shape().n0; ++i)
        for (std::size_t j = 0; j < A.shape().n1; ++j)
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b) {
                    cplx acc = 0.0;
                    for (std::size_t k = 0; k < n; ++k) acc += A(i, j, a * n + k) * B(i, j, k * n + b);
                    out(i, j, a * n + b) = acc;
                }
    return out;
}

// Sum of signed products sum_k s_k A_k B_k.
CField combine(std::initializer_list<std::tuple<double, const CField*, const CField*>> terms, std::size_t n) {
    CField out;
    for (const auto& [sign, A, B] : terms) {
        const CField t = field_product(*A, *B, n);
        if (out.size() == 0) out = CField(t.shape());
        for (std::size_t k = 0; k < t.size(); ++k) out[k] += sign * t[k];
    }
    return out;
}

}  // namespace

HybridHamiltonian symmetrized_bracket_symbol(const HybridHamiltonian& Hs, const HybridHamiltonian& Fs) {
    const auto& h = Hs.matrix();
    const auto& f = Fs.matrix();
    require(h.grid == f.grid, ErrorKind::Shape, "symbols live on different grids");
    const std::size_t n = h.levels();
    MatrixHamiltonian g{h.grid, h.params, {}, {}, {}, {}, {}, {}};
    // G = Hq Fp - Hp Fq - Fq Hp + Fp Hq
    g.H = combine({{1.0, &h.Hq, &f.Hp}, {-1.0, &h.Hp, &f.Hq}, {-1.0, &f.Hq, &h.Hp}, {1.0, &f.Hp, &h.Hq}}, n);
    g.Hq = combine({{1.0, &h.Hqq, &f.Hp},
                    {1.0, &h.Hq, &f.Hqp},
                    {-1.0, &h.Hqp, &f.Hq},
                    {-1.0, &h.Hp, &f.Hqq},
                    {-1.0, &f.Hqq, &h.Hp},
                    {-1.0, &f.Hq, &h.Hqp},
                    {1.0, &f.Hqp, &h.Hq},
                    {1.0, &f.Hp, &h.Hqq}},
                   n);
    g.Hp = combine({{1.0, &h.Hqp, &f.Hp},
                    {1.0, &h.Hq, &f.Hpp},
                    {-1.0, &h.Hpp, &f.Hq},
                    {-1.0, &h.Hp, &f.Hqp},
                    {-1.0, &f.Hqp, &h.Hp},
                    {-1.0, &f.Hq, &h.Hpp},
                    {1.0, &f.Hpp, &h.Hq},
                    {1.0, &f.Hp, &h.Hqp}},
                   n);
    g.Hqq = derivative(g.Hq, 0, g.grid.Lq);
    g.Hqp = derivative(g.Hq, 1, g.grid.Lp);
    g.Hpp = derivative(g.Hp, 1, g.grid.Lp);
    refresh_structure_flags(g);
    return HybridHamiltonian(std::move(g));
}

CMatrix partial_transpose(const CMatrix& m, std::size_t levels) {
    const long n = static_cast<long>(levels);
    require(m.rows() == m.cols() && m.rows() % n == 0, ErrorKind::Shape, "partial transpose needs a square block matrix");
    const long G = m.rows() / n;
    CMatrix out(m.rows(), m.cols());
    for (long g = 0; g < G; ++g)
        for (long gp = 0; gp < G; ++gp)
            for (long a = 0; a < n; ++a)
                for (long b = 0; b < n; ++b) out(g * n + a, gp * n + b) = m(g * n + b, gp * n + a);
    return out;
}

double commutator_identity_residual(const HybridHamiltonian& H, const HybridHamiltonian& F,
                                    const std::vector<HybridWavefunction>& test_states) {
    const std::size_t n = H.matrix().levels();
    const double hbar = H.params().hbar;
    const CMatrix Lh = materialize_liouvillian(H);
    const CMatrix Lf = materialize_liouvillian(F);
    const CMatrix Lhb = materialize_liouvillian(conjugate_symbol(H));
    const CMatrix Lfb = materialize_liouvillian(conjugate_symbol(F));
    const CMatrix Lg = materialize_liouvillian(symmetrized_bracket_symbol(H, F));
    const CMatrix R =
        (Lh * Lf - Lf * Lh) + partial_transpose(Lhb * Lfb - Lfb * Lhb, n) - cplx{0.0, hbar} * Lg;
    if (test_states.empty()) return R.cwiseAbs().maxCoeff();
    double worst = 0.0;
    for (const auto& s : test_states) {
        const CVector v = Eigen::Map<const CVector>(s.psi.data(), static_cast<long>(s.psi.size()));
        worst = std::max(worst, (R * v).norm() / v.norm());
    }
    return worst;
}

// --- point transformations ---------------------------------------------------

namespace {

long whole_cells(double amount, double h, const char* what) {
    const double cells = amount / h;
    const double r = std::round(cells);
    require(std::abs(cells - r) <= 1e-9 * std::max(1.0, std::abs(cells)), ErrorKind::Validation,
            std::string("non-commensurate ") + what + " translation: not a whole number of grid cells");
    return static_cast<long>(r);
}

std::size_t wrap(long i, std::size_t n) {
    const long m = static_cast<long>(n);
    return static_cast<std::size_t>(((i % m) + m) % m);
}

// Lift phase exp(i s phi(q) / hbar) with phi(q) = -b q.
cplx lift_phase(const PointTransform& T, const PhaseGrid& g, double hbar, std::size_t i) {
    const double b = static_cast<double>(T.cells_p) * g.hp();
    return std::polar(1.0, static_cast<double>(T.phase_sign) * (-b * g.q(i)) / hbar);
}

}  // namespace

PointTransform PointTransform::translation(const PhaseGrid& grid, double hbar, double a, double b) {
    PointTransform T;
    T.cells_q = whole_cells(a, grid.hq(), "q");
    T.cells_p = whole_cells(b, grid.hp(), "p");
    T.validate(grid, hbar);
    return T;
}

PointTransform PointTransform::quantum(const CMatrix& U) {
    PointTransform T;
    T.U = U;
    return T;
}

void PointTransform::validate(const PhaseGrid& grid, double hbar) const {
    require(phase_sign == 1 || phase_sign == -1, ErrorKind::Validation, "phase_sign must be +1 or -1");
    const double b = static_cast<double>(cells_p) * grid.hp();
    const double winding = b * grid.Lq / (2.0 * M_PI * hbar);
    require(std::abs(winding - std::round(winding)) <= 1e-9 * std::max(1.0, std::abs(winding)),
            ErrorKind::Validation,
            "non-commensurate p translation: the compensating phase is not periodic in q");
    if (U.size() != 0) {
        require(grid.mode == Mode::FiniteDim, ErrorKind::Unsupported, "a level unitary needs a finite_dim grid");
        require(static_cast<std::size_t>(U.rows()) == grid.nx && U.rows() == U.cols(), ErrorKind::Shape,
                "unitary has the wrong dimension");
        require((U.adjoint() * U - CMatrix::Identity(U.rows(), U.cols())).cwiseAbs().maxCoeff() < 1e-12,
                ErrorKind::Validation, "quantum transform is not unitary");
    }
    require(cells_x == 0 || grid.mode == Mode::Continuum, ErrorKind::Unsupported,
            "an x translation needs a continuum grid");
}

HybridWavefunction apply_point_transform(const PointTransform& T, const HybridWavefunction& psi, double hbar) {
    const PhaseGrid& g = psi.grid;
    T.validate(g, hbar);
    const std::size_t nc = g.nx;
    HybridWavefunction out = HybridWavefunction::zeros(g);
    CVector v(static_cast<long>(nc));
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            const std::size_t si = wrap(static_cast<long>(i) - T.cells_q, g.nq);
            const std::size_t sj = wrap(static_cast<long>(j) - T.cells_p, g.np);
            const cplx ph = lift_phase(T, g, hbar, si);
            for (std::size_t c = 0; c < nc; ++c)
                v(static_cast<long>(c)) = psi.psi(si, sj, wrap(static_cast<long>(c) - T.cells_x, nc));
            if (T.U.size() != 0) v = T.U * v;
            for (std::size_t c = 0; c < nc; ++c) out.psi(i, j, c) = ph * v(static_cast<long>(c));
        }
    return out;
}

HybridWavefunction apply_inverse_point_transform(const PointTransform& T, const HybridWavefunction& psi,
                                                 double hbar) {
    const PhaseGrid& g = psi.grid;
    T.validate(g, hbar);
    const std::size_t nc = g.nx;
    HybridWavefunction out = HybridWavefunction::zeros(g);
    CVector v(static_cast<long>(nc));
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            const std::size_t si = wrap(static_cast<long>(i) + T.cells_q, g.nq);
            const std::size_t sj = wrap(static_cast<long>(j) + T.cells_p, g.np);
            const cplx ph = std::conj(lift_phase(T, g, hbar, i));
            for (std::size_t c = 0; c < nc; ++c)
                v(static_cast<long>(c)) = psi.psi(si, sj, wrap(static_cast<long>(c) + T.cells_x, nc));
            if (T.U.size() != 0) v = T.U.adjoint() * v;
            for (std::size_t c = 0; c < nc; ++c) out.psi(i, j, c) = ph * v(static_cast<long>(c));
        }
    return out;
}

HybridHamiltonian transformed_symbol(const PointTransform& T, const HybridHamiltonian& A) {
    if (A.is_separable()) return translate_symbol(A, T.cells_q, T.cells_p, T.cells_x);
    const HybridHamiltonian conj = T.U.size() != 0 ? conjugate_by(A, T.U) : A;
    return translate_symbol(conj, T.cells_q, T.cells_p);
}

double liouvillian_equivariance_residual(const PointTransform& T, const HybridHamiltonian& A,
                                         const HybridWavefunction& psi) {
    const double hbar = A.params().hbar;
    const HybridWavefunction lhs =
        apply_inverse_point_transform(T, apply_liouvillian(A, apply_point_transform(T, psi, hbar)), hbar);
    const HybridWavefunction rhs = apply_liouvillian(transformed_symbol(T, A), psi);
    return distance(lhs, rhs) / std::sqrt(psi.norm2());
}

}  // namespace hkvh
