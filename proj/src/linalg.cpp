#include "hybridkvh/linalg.hpp"

#include <Eigen/Eigenvalues>

namespace hkvh {

namespace pauli {
CMatrix identity() { return CMatrix::Identity(2, 2); }

CMatrix x() {
    CMatrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

CMatrix y() {
    CMatrix m(2, 2);
    m << cplx{0.0, 0.0}, cplx{0.0, -1.0}, cplx{0.0, 1.0}, cplx{0.0, 0.0};
    return m;
}

CMatrix z() {
    CMatrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}
}  // namespace pauli

CMatrix unitary_exp(const CMatrix& hermitian, double theta) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian);
    const CVector phases = (cplx{0.0, theta} * es.eigenvalues().cast<cplx>()).array().exp().matrix();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

CMatrix matrix_at(const CField& f, std::size_t n, std::size_t i, std::size_t j) {
    CMatrix m(n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) m(a, b) = f(i, j, a * n + b);
    return m;
}

void set_matrix_at(CField& f, std::size_t n, std::size_t i, std::size_t j, const CMatrix& m) {
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) f(i, j, a * n + b) = m(a, b);
}

double min_eigenvalue(const CMatrix& hermitian) {
    const CMatrix sym = 0.5 * (hermitian + hermitian.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double hermiticity_defect(const CMatrix& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

}  // namespace hkvh
