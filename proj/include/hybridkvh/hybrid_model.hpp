#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <variant>

#include "hybridkvh/linalg.hpp"
#include "hybridkvh/phase_grid.hpp"

namespace hkvh {

struct ModelParams {
    double hbar = 1.0;
    double m = 1.0;       // quantum mass
    double M = 1.0;       // classical mass
    double lambda = 0.0;  // coupling strength

    void validate() const;
};

// H = -(hbar^2/2m) Laplacian_x + p^2/2M + V(q, x) on a continuum grid.
// V and its derivatives are stored on the full hybrid shape.
struct SeparableHamiltonian {
    PhaseGrid grid;
    ModelParams params;
    RField V;
    RField dVdq;
    RField dVdx;
    // Switches the -(hbar^2/2m) Laplacian_x term off (the m -> infinity limit).
    bool quantum_kinetic = true;
};

// Hermitian-matrix-valued symbol H(z) on a finite_dim grid, stored as n*n
// components per phase-space point together with its first and second
// phase-space derivatives.
struct MatrixHamiltonian {
    PhaseGrid grid;
    ModelParams params;
    CField H, Hq, Hp;
    CField Hqq, Hqp, Hpp;
    // True when dH/dq does not vary along p (resp. dH/dp along q). The bracket
    // then reduces exactly to plain products with the derivatives of the state.
    bool hq_independent_of_p = false;
    bool hp_independent_of_q = false;

    std::size_t levels() const { return grid.nx; }
};

// Recomputes hq_independent_of_p and hp_independent_of_q from the stored fields.
void refresh_structure_flags(MatrixHamiltonian& h);

using MatrixFn = std::function<CMatrix(double q, double p)>;

class HybridHamiltonian {
public:
    HybridHamiltonian(SeparableHamiltonian h) : impl_(std::move(h)) {}
    HybridHamiltonian(MatrixHamiltonian h) : impl_(std::move(h)) {}

    bool is_separable() const { return std::holds_alternative<SeparableHamiltonian>(impl_); }
    const SeparableHamiltonian& separable() const;
    const MatrixHamiltonian& matrix() const;
    const PhaseGrid& grid() const;
    const ModelParams& params() const;

    // Matrix symbol from point functions. Empty derivative functions are
    // replaced by spectral derivatives of the sampled symbol (valid only for
    // symbols periodic in p).
    static HybridHamiltonian from_function(const PhaseGrid& grid, const ModelParams& params, const MatrixFn& H,
                                           const MatrixFn& Hq = {}, const MatrixFn& Hp = {},
                                           const MatrixFn& Hqq = {}, const MatrixFn& Hqp = {},
                                           const MatrixFn& Hpp = {});
    // s(q, p) * A with A a constant Hermitian matrix; derivatives are spectral.
    static HybridHamiltonian scalar_times(const PhaseGrid& grid, const ModelParams& params,
                                          const std::function<double(double, double)>& s, const CMatrix& A);

    // Separable form from V(q, x) and its analytic derivatives.
    static HybridHamiltonian separable_from(const PhaseGrid& grid, const ModelParams& params,
                                            const std::function<double(double, double)>& V,
                                            const std::function<double(double, double)>& dVdq,
                                            const std::function<double(double, double)>& dVdx);

private:
    std::variant<SeparableHamiltonian, MatrixHamiltonian> impl_;
};

// Entrywise complex conjugate of a matrix symbol.
HybridHamiltonian conjugate_symbol(const HybridHamiltonian& H);
// Pointwise U^dagger H(z) U for a constant unitary U.
HybridHamiltonian conjugate_by(const HybridHamiltonian& H, const CMatrix& U);
// Pullback by the translation eta(q, p) = (q + a, p + b) with a, b whole cells:
// (eta^* H)(z) = H(eta(z)), realised as a cyclic shift of every stored field.
// cells_x shifts V(q, x) along x (separable form only).
HybridHamiltonian translate_symbol(const HybridHamiltonian& H, long cells_q, long cells_p, long cells_x = 0);

// --- built-in potential library ----------------------------------------------

struct PotentialSpec {
    std::string name = "pendulum_bilinear";
    std::map<std::string, double> options;  // delta, alpha_0, alpha_x, alpha_y, alpha_z

    double option(const std::string& key, double fallback) const;
};

// Names accepted by make_hamiltonian.
const std::vector<std::string>& potential_names();

// uncoupled          : lambda forced to 0 in the pendulum_bilinear form
// pendulum_bilinear  : continuum V = (1-cos q) + (1-cos x) + lambda sin q sin x;
//                      finite_dim H = p^2/2M + (1-cos q) + diag(levels) + lambda sin q X,
//                      X the nearest-neighbour hopping matrix (sigma_x for n = 2)
// analytic_alpha     : finite_dim H = p^2/2M + (1-cos q) + lambda sin q alpha
HybridHamiltonian make_hamiltonian(const PhaseGrid& grid, const ModelParams& params, const PotentialSpec& spec);

// The alpha matrix used by analytic_alpha.
CMatrix alpha_matrix(std::size_t levels, const PotentialSpec& spec);

// --- derived symbols ------------------------------------------------------------

// H_I = p^2/2M + V(q, x).
RField interaction_hamiltonian(const HybridHamiltonian& H);
// L_I = p^2/2M - V(q, x).
RField interaction_lagrangian(const HybridHamiltonian& H);
// L_H = p dH/dp - H: the scalar L_I (separable, kinetic operator excluded) or
// the matrix field p Hp - H.
CField hybrid_lagrangian_symbol(const HybridHamiltonian& H);

struct VectorField {
    RField q;  // dq/dt component
    RField p;  // dp/dt component
};

// X_h = (dh/dp, -dh/dq) with spectral derivatives.
VectorField hamiltonian_vector_field(const PhaseGrid& grid, const RField& h);
// X_{H_I} with the analytic kinetic derivative p/M.
VectorField hamiltonian_vector_field(const HybridHamiltonian& H);

}  // namespace hkvh
