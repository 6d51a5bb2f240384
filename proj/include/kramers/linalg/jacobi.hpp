#pragma once

#include <Eigen/Dense>
#include <vector>

namespace kramers::linalg {

struct HermitianEigen {
  std::vector<double> values;  // ascending
  Eigen::MatrixXcd vectors;    // column k pairs with values[k]
  int sweeps = 0;
};

/// Cyclic Jacobi diagonalization of a Hermitian matrix. Each rotation first
/// removes the phase of the pivot element, then applies a real plane
/// rotation. Stops when the off-diagonal Frobenius norm drops below
/// `tolerance` times the matrix norm; throws NumericalError (with the
/// residual norm in the message) after `max_sweeps`.
HermitianEigen jacobi_eigen(const Eigen::MatrixXcd& matrix, double tolerance = 1e-12,
                            int max_sweeps = 64);

}  // namespace kramers::linalg
