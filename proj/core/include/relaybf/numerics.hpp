#pragma once

#include <Eigen/Dense>

namespace relaybf::numerics {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Condition numbers above this are treated as singular throughout.
inline constexpr double kConditionLimit = 1e12;

struct SvdResult {
  ComplexMatrix u;       // left singular vectors, unitary
  RealVector sigma;      // singular values, descending
  ComplexMatrix v;       // right singular vectors, m = u * diag(sigma) * v^H
};

struct EigResult {
  double value = 0.0;
  ComplexVector vector;  // unit Euclidean norm
};

struct PerronResult {
  double value = 0.0;
  RealVector vector;     // entrywise positive for irreducible input, unit norm
};

/// Full SVD of a dense complex matrix, singular values in descending order.
SvdResult svd(const ComplexMatrix& m);

/// Dominant generalized eigenpair of (c*h*h^H, rn) for Hermitian positive
/// definite rn. The rank-one numerator admits the closed form
/// w = rn^{-1} h, value = c * h^H rn^{-1} h.
EigResult dominant_gen_eigvec(const ComplexVector& h, double c,
                              const ComplexMatrix& rn);

/// Perron eigenpair of an entrywise nonnegative square matrix via power
/// iteration (all-ones start, value tolerance 1e-12, cap 10000 iterations).
PerronResult perron(const RealMatrix& l);

/// Largest eigenvalue magnitude.
double spectral_radius(const ComplexMatrix& m);
double spectral_radius(const RealMatrix& m);

/// Solves m x = b; throws IllConditionedError when the condition estimate
/// exceeds kConditionLimit.
ComplexVector solve_linear(const ComplexMatrix& m, const ComplexVector& b);
RealVector solve_linear(const RealMatrix& m, const RealVector& b);

}  // namespace relaybf::numerics
