#include "hybridkvh/hybrid_model.hpp"

#include <algorithm>
#include <cmath>

namespace hkvh {

void ModelParams::validate() const {
    require(hbar > 0.0, ErrorKind::Validation, "hbar must be positive");
    require(m > 0.0, ErrorKind::Validation, "quantum mass m must be positive");
    require(M > 0.0, ErrorKind::Validation, "classical mass M must be positive");
    require(std::isfinite(lambda), ErrorKind::Validation, "lambda must be finite");
}

const SeparableHamiltonian& HybridHamiltonian::separable() const {
    const auto* h = std::get_if<SeparableHamiltonian>(&impl_);
    require(h != nullptr, ErrorKind::Unsupported, "operation requires the separable Hamiltonian variant");
    return *h;
}

const MatrixHamiltonian& HybridHamiltonian::matrix() const {
    const auto* h = std::get_if<MatrixHamiltonian>(&impl_);
    require(h != nullptr, ErrorKind::Unsupported, "operation requires the matrix-valued Hamiltonian variant");
    return *h;
}

const PhaseGrid& HybridHamiltonian::grid() const {
    return std::visit([](const auto& h) -> const PhaseGrid& { return h.grid; }, impl_);
}

const ModelParams& HybridHamiltonian::params() const {
    return std::visit([](const auto& h) -> const ModelParams& { return h.params; }, impl_);
}

namespace {

CField sample(const PhaseGrid& g, const MatrixFn& f) {
    const std::size_t n = g.nx;
    CField out(matrix_shape(g));
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            const CMatrix m = f(g.q(i), g.p(j));
            require(static_cast<std::size_t>(m.rows()) == n && static_cast<std::size_t>(m.cols()) == n,
                    ErrorKind::Shape, "matrix symbol has the wrong dimension");
            set_matrix_at(out, n, i, j, m);
        }
    return out;
}

// True when the field is bitwise constant along the given phase axis.
bool constant_along(const CField& f, int axis) {
    const Shape s = f.shape();
    for (std::size_t i = 0; i < s.n0; ++i)
        for (std::size_t j = 0; j < s.n1; ++j)
            for (std::size_t c = 0; c < s.n2; ++c) {
                const cplx ref = axis == 0 ? f(0, j, c) : f(i, 0, c);
                if (f(i, j, c) != ref) return false;
            }
    return true;
}

void check_hermitian(const PhaseGrid& g, const CField& H) {
    const std::size_t n = g.nx;
    double defect = 0.0;
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) defect = std::max(defect, hermiticity_defect(matrix_at(H, n, i, j)));
    require(defect <= 1e-13 * std::max(1.0, max_abs(H)), ErrorKind::Validation,
            "matrix Hamiltonian is not Hermitian (defect " + std::to_string(defect) + ")");
}

void finalize(MatrixHamiltonian& h) {
    h.hq_independent_of_p = constant_along(h.Hq, 1);
    h.hp_independent_of_q = constant_along(h.Hp, 0);
}

}  // namespace

void refresh_structure_flags(MatrixHamiltonian& h) { finalize(h); }

HybridHamiltonian HybridHamiltonian::from_function(const PhaseGrid& grid, const ModelParams& params,
                                                   const MatrixFn& H, const MatrixFn& Hq, const MatrixFn& Hp,
                                                   const MatrixFn& Hqq, const MatrixFn& Hqp,
                                                   const MatrixFn& Hpp) {
    grid.validate();
    params.validate();
    require(grid.mode == Mode::FiniteDim, ErrorKind::Unsupported,
            "matrix-valued Hamiltonians live on finite_dim grids");
    MatrixHamiltonian h{grid, params, {}, {}, {}, {}, {}, {}};
    h.H = sample(grid, H);
    check_hermitian(grid, h.H);
    h.Hq = Hq ? sample(grid, Hq) : derivative(h.H, 0, grid.Lq);
    h.Hp = Hp ? sample(grid, Hp) : derivative(h.H, 1, grid.Lp);
    h.Hqq = Hqq ? sample(grid, Hqq) : derivative(h.Hq, 0, grid.Lq);
    h.Hqp = Hqp ? sample(grid, Hqp) : derivative(h.Hq, 1, grid.Lp);
    h.Hpp = Hpp ? sample(grid, Hpp) : derivative(h.Hp, 1, grid.Lp);
    finalize(h);
    return HybridHamiltonian(std::move(h));
}

HybridHamiltonian HybridHamiltonian::scalar_times(const PhaseGrid& grid, const ModelParams& params,
                                                  const std::function<double(double, double)>& s,
                                                  const CMatrix& A) {
    return from_function(grid, params, [&](double q, double p) -> CMatrix { return s(q, p) * A; });
}

HybridHamiltonian HybridHamiltonian::separable_from(const PhaseGrid& grid, const ModelParams& params,
                                                    const std::function<double(double, double)>& V,
                                                    const std::function<double(double, double)>& dVdq,
                                                    const std::function<double(double, double)>& dVdx) {
    grid.validate();
    params.validate();
    require(grid.mode == Mode::Continuum, ErrorKind::Unsupported, "separable Hamiltonians need a continuum grid");
    SeparableHamiltonian h{grid, params, RField(hybrid_shape(grid)), RField(hybrid_shape(grid)),
                           RField(hybrid_shape(grid)), true};
    for (std::size_t i = 0; i < grid.nq; ++i)
        for (std::size_t j = 0; j < grid.np; ++j)
            for (std::size_t k = 0; k < grid.nx; ++k) {
                const double q = grid.q(i), x = grid.x(k);
                h.V(i, j, k) = V(q, x);
                h.dVdq(i, j, k) = dVdq(q, x);
                h.dVdx(i, j, k) = dVdx(q, x);
            }
    return HybridHamiltonian(std::move(h));
}

HybridHamiltonian conjugate_symbol(const HybridHamiltonian& H) {
    MatrixHamiltonian h = H.matrix();
    for (CField* f : {&h.H, &h.Hq, &h.Hp, &h.Hqq, &h.Hqp, &h.Hpp})
        for (auto& v : *f) v = std::conj(v);
    return HybridHamiltonian(std::move(h));
}

HybridHamiltonian conjugate_by(const HybridHamiltonian& H, const CMatrix& U) {
    MatrixHamiltonian h = H.matrix();
    const std::size_t n = h.levels();
    require(static_cast<std::size_t>(U.rows()) == n, ErrorKind::Shape, "unitary has the wrong dimension");
    for (CField* f : {&h.H, &h.Hq, &h.Hp, &h.Hqq, &h.Hqp, &h.Hpp})
        for (std::size_t i = 0; i < h.grid.nq; ++i)
            for (std::size_t j = 0; j < h.grid.np; ++j)
                set_matrix_at(*f, n, i, j, U.adjoint() * matrix_at(*f, n, i, j) * U);
    finalize(h);
    return HybridHamiltonian(std::move(h));
}

namespace {

template <class F>
F shift_cells(const F& f, long sq, long sp, long sc = 0) {
    const Shape s = f.shape();
    F out(s);
    const long nq = static_cast<long>(s.n0), np = static_cast<long>(s.n1), nc = static_cast<long>(s.n2);
    for (long i = 0; i < nq; ++i)
        for (long j = 0; j < np; ++j) {
            const auto si = static_cast<std::size_t>(((i + sq) % nq + nq) % nq);
            const auto sj = static_cast<std::size_t>(((j + sp) % np + np) % np);
            for (long c = 0; c < nc; ++c) {
                const auto scc = static_cast<std::size_t>(((c + sc) % nc + nc) % nc);
                out(static_cast<std::size_t>(i), static_cast<std::size_t>(j), static_cast<std::size_t>(c)) =
                    f(si, sj, scc);
            }
        }
    return out;
}

}  // namespace

HybridHamiltonian translate_symbol(const HybridHamiltonian& H, long cells_q, long cells_p, long cells_x) {
    if (H.is_separable()) {
        require(cells_p == 0, ErrorKind::Unsupported,
                "a p-translation of the separable form changes its kinetic term");
        SeparableHamiltonian h = H.separable();
        h.V = shift_cells(h.V, cells_q, cells_p, cells_x);
        h.dVdq = shift_cells(h.dVdq, cells_q, cells_p, cells_x);
        h.dVdx = shift_cells(h.dVdx, cells_q, cells_p, cells_x);
        return HybridHamiltonian(std::move(h));
    }
    require(cells_x == 0, ErrorKind::Unsupported, "x translation needs the separable form");
    MatrixHamiltonian h = H.matrix();
    for (CField* f : {&h.H, &h.Hq, &h.Hp, &h.Hqq, &h.Hqp, &h.Hpp}) *f = shift_cells(*f, cells_q, cells_p);
    finalize(h);
    return HybridHamiltonian(std::move(h));
}

// --- built-in potentials ----------------------------------------------------

double PotentialSpec::option(const std::string& key, double fallback) const {
    const auto it = options.find(key);
    return it == options.end() ? fallback : it->second;
}

const std::vector<std::string>& potential_names() {
    static const std::vector<std::string> names{"uncoupled", "pendulum_bilinear", "analytic_alpha"};
    return names;
}

namespace {

CMatrix hopping(std::size_t n) {
    CMatrix X = CMatrix::Zero(static_cast<long>(n), static_cast<long>(n));
    for (std::size_t a = 0; a + 1 < n; ++a) {
        X(static_cast<long>(a), static_cast<long>(a + 1)) = 1.0;
        X(static_cast<long>(a + 1), static_cast<long>(a)) = 1.0;
    }
    return X;
}

CMatrix level_splitting(std::size_t n, double delta) {
    CMatrix E = CMatrix::Zero(static_cast<long>(n), static_cast<long>(n));
    for (std::size_t a = 0; a < n; ++a)
        E(static_cast<long>(a), static_cast<long>(a)) = delta * (0.5 * static_cast<double>(n - 1) - static_cast<double>(a));
    return E;
}

// p^2/2M + (1 - cos q) + Q + lambda sin q C, with analytic derivatives.
HybridHamiltonian pendulum_matrix(const PhaseGrid& grid, const ModelParams& params, const CMatrix& Q,
                                  const CMatrix& C) {
    const long n = static_cast<long>(grid.nx);
    const CMatrix I = CMatrix::Identity(n, n);
    const double M = params.M, lambda = params.lambda;
    return HybridHamiltonian::from_function(
        grid, params,
        [=](double q, double p) -> CMatrix { return (p * p / (2.0 * M) + 1.0 - std::cos(q)) * I + Q + lambda * std::sin(q) * C; },
        [=](double q, double) -> CMatrix { return std::sin(q) * I + lambda * std::cos(q) * C; },
        [=](double, double p) -> CMatrix { return (p / M) * I; },
        [=](double q, double) -> CMatrix { return std::cos(q) * I - lambda * std::sin(q) * C; },
        [=](double, double) -> CMatrix { return CMatrix::Zero(n, n); },
        [=](double, double) -> CMatrix { return (1.0 / M) * I; });
}

}  // namespace

CMatrix alpha_matrix(std::size_t levels, const PotentialSpec& spec) {
    if (levels == 2) {
        return spec.option("alpha_0", 0.0) * pauli::identity() + spec.option("alpha_x", 1.0) * pauli::x() +
               spec.option("alpha_y", 0.0) * pauli::y() + spec.option("alpha_z", 0.0) * pauli::z();
    }
    return spec.option("alpha_x", 1.0) * hopping(levels) +
           spec.option("alpha_0", 0.0) * CMatrix::Identity(static_cast<long>(levels), static_cast<long>(levels));
}

HybridHamiltonian make_hamiltonian(const PhaseGrid& grid, const ModelParams& params, const PotentialSpec& spec) {
    const auto& names = potential_names();
    require(std::find(names.begin(), names.end(), spec.name) != names.end(), ErrorKind::Validation,
            "unknown potential '" + spec.name + "'");
    ModelParams p = params;
    if (spec.name == "uncoupled") p.lambda = 0.0;

    if (grid.mode == Mode::Continuum) {
        require(spec.name != "analytic_alpha", ErrorKind::Unsupported,
                "analytic_alpha needs a finite_dim grid");
        const double lambda = p.lambda;
        return HybridHamiltonian::separable_from(
            grid, p,
            [lambda](double q, double x) { return (1.0 - std::cos(q)) + (1.0 - std::cos(x)) + lambda * std::sin(q) * std::sin(x); },
            [lambda](double q, double x) { return std::sin(q) + lambda * std::cos(q) * std::sin(x); },
            [lambda](double q, double x) { return std::sin(x) + lambda * std::sin(q) * std::cos(x); });
    }

    const std::size_t n = grid.nx;
    if (spec.name == "analytic_alpha") {
        return pendulum_matrix(grid, p, CMatrix::Zero(static_cast<long>(n), static_cast<long>(n)), alpha_matrix(n, spec));
    }
    return pendulum_matrix(grid, p, level_splitting(n, spec.option("delta", 1.0)), hopping(n));
}

// --- derived symbols ---------------------------------------------------------

RField interaction_hamiltonian(const HybridHamiltonian& H) {
    const auto& h = H.separable();
    RField out(h.V.shape());
    for (std::size_t i = 0; i < h.grid.nq; ++i)
        for (std::size_t j = 0; j < h.grid.np; ++j) {
            const double p = h.grid.p(j);
            for (std::size_t k = 0; k < h.grid.nx; ++k) out(i, j, k) = p * p / (2.0 * h.params.M) + h.V(i, j, k);
        }
    return out;
}

RField interaction_lagrangian(const HybridHamiltonian& H) {
    const auto& h = H.separable();
    RField out(h.V.shape());
    for (std::size_t i = 0; i < h.grid.nq; ++i)
        for (std::size_t j = 0; j < h.grid.np; ++j) {
            const double p = h.grid.p(j);
            for (std::size_t k = 0; k < h.grid.nx; ++k) out(i, j, k) = p * p / (2.0 * h.params.M) - h.V(i, j, k);
        }
    return out;
}

CField hybrid_lagrangian_symbol(const HybridHamiltonian& H) {
    if (H.is_separable()) return to_complex(interaction_lagrangian(H));
    const auto& h = H.matrix();
    CField out(h.H.shape());
    for (std::size_t i = 0; i < h.grid.nq; ++i)
        for (std::size_t j = 0; j < h.grid.np; ++j) {
            const double p = h.grid.p(j);
            for (std::size_t c = 0; c < h.H.shape().n2; ++c) out(i, j, c) = p * h.Hp(i, j, c) - h.H(i, j, c);
        }
    return out;
}

VectorField hamiltonian_vector_field(const PhaseGrid& grid, const RField& h) {
    VectorField X{spectral_derivative(grid, h, Axis::P), spectral_derivative(grid, h, Axis::Q)};
    for (auto& v : X.p) v = -v;
    return X;
}

VectorField hamiltonian_vector_field(const HybridHamiltonian& H) {
    const auto& h = H.separable();
    VectorField X{RField(h.V.shape()), RField(h.V.shape())};
    for (std::size_t i = 0; i < h.grid.nq; ++i)
        for (std::size_t j = 0; j < h.grid.np; ++j)
            for (std::size_t k = 0; k < h.grid.nx; ++k) {
                X.q(i, j, k) = h.grid.p(j) / h.params.M;
                X.p(i, j, k) = -h.dVdq(i, j, k);
            }
    return X;
}

}  // namespace hkvh
