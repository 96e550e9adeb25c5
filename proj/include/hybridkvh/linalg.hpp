#pragma once

#include <Eigen/Dense>

#include "hybridkvh/phase_grid.hpp"

namespace hkvh {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

namespace pauli {
CMatrix identity();
CMatrix x();
CMatrix y();
CMatrix z();
}  // namespace pauli

// exp(i * theta * A) for Hermitian A.
CMatrix unitary_exp(const CMatrix& hermitian, double theta);

// Matrix at grid point (i, j) of a matrix-valued field with n*n components.
CMatrix matrix_at(const CField& f, std::size_t n, std::size_t i, std::size_t j);
void set_matrix_at(CField& f, std::size_t n, std::size_t i, std::size_t j, const CMatrix& m);

// Smallest eigenvalue of a Hermitian matrix.
double min_eigenvalue(const CMatrix& hermitian);
// max |M - M^dagger| over all entries.
double hermiticity_defect(const CMatrix& m);

}  // namespace hkvh
