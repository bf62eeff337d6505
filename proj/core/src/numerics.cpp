#include "relaybf/numerics.hpp"

#include <cmath>
#include <limits>

#include "relaybf/errors.hpp"

namespace relaybf::numerics {

namespace {

bool all_finite(const ComplexMatrix& m) {
  return m.array().isFinite().all();
}

}  // namespace

SvdResult svd(const ComplexMatrix& m) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw InvalidInputError("svd: empty matrix");
  }
  if (!all_finite(m)) {
    throw InvalidInputError("svd: non-finite entries");
  }
  Eigen::JacobiSVD<ComplexMatrix> dec(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return SvdResult{dec.matrixU(), dec.singularValues(), dec.matrixV()};
}

EigResult dominant_gen_eigvec(const ComplexVector& h, double c,
                              const ComplexMatrix& rn) {
  if (c <= 0.0) {
    throw InvalidInputError("dominant_gen_eigvec: nonpositive scale");
  }
  if (h.size() != rn.rows() || rn.rows() != rn.cols()) {
    throw InvalidInputError("dominant_gen_eigvec: dimension mismatch");
  }
  if (h.norm() == 0.0) {
    throw InvalidInputError("dominant_gen_eigvec: zero channel vector");
  }
  // Hermitian PD check doubles as the condition estimate.
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rn, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0.0 || hi / lo > kConditionLimit) {
    throw IllConditionedError("dominant_gen_eigvec: covariance not safely PD",
                              lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity());
  }
  Eigen::LLT<ComplexMatrix> llt(rn);
  ComplexVector w = llt.solve(h);
  const double value = c * (h.dot(w)).real();
  w.normalize();
  return EigResult{value, std::move(w)};
}

PerronResult perron(const RealMatrix& l) {
  if (l.rows() != l.cols() || l.rows() < 1) {
    throw InvalidInputError("perron: matrix must be square");
  }
  if (!l.array().isFinite().all() || (l.array() < 0.0).any()) {
    throw InvalidInputError("perron: entries must be finite and nonnegative");
  }
  const Eigen::Index n = l.rows();
  const double scale = l.cwiseAbs().rowwise().sum().maxCoeff();
  if (scale == 0.0) {
    return PerronResult{0.0, RealVector::Constant(n, 1.0 / std::sqrt(double(n)))};
  }
  // Small diagonal shift keeps the iteration convergent on periodic
  // (e.g. permutation-like) matrices without moving the eigenvector.
  const double shift = 0.05 * scale;
  RealVector x = RealVector::Ones(n);
  x.normalize();
  double theta = 0.0;
  bool converged = false;
  constexpr int kMaxIter = 10000;
  for (int it = 0; it < kMaxIter; ++it) {
    RealVector y = l * x + shift * x;
    const double norm = y.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw NumericFailureError("perron: iteration broke down");
    }
    y /= norm;
    const double theta_new = y.dot(l * y) + shift;
    const double resid = (l * y + shift * y - theta_new * y).lpNorm<Eigen::Infinity>();
    const bool value_ok = std::abs(theta_new - theta) <= 1e-12 * std::max(1.0, std::abs(theta_new));
    x = std::move(y);
    theta = theta_new;
    if (it > 0 && value_ok && resid <= 1e-12 * std::max(1.0, theta_new)) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NumericFailureError("perron: power iteration did not converge");
  }
  if (x.sum() < 0.0) x = -x;
  return PerronResult{theta - shift, std::move(x)};
}

double spectral_radius(const ComplexMatrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw InvalidInputError("spectral_radius: matrix must be square");
  }
  if (!all_finite(m)) {
    throw InvalidInputError("spectral_radius: non-finite entries");
  }
  Eigen::ComplexEigenSolver<ComplexMatrix> es(m, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_radius(const RealMatrix& m) {
  return spectral_radius(ComplexMatrix(m.cast<std::complex<double>>()));
}

ComplexVector solve_linear(const ComplexMatrix& m, const ComplexVector& b) {
  if (m.rows() != m.cols() || m.rows() != b.size()) {
    throw InvalidInputError("solve_linear: dimension mismatch");
  }
  if (!all_finite(m) || !b.array().isFinite().all()) {
    throw InvalidInputError("solve_linear: non-finite entries");
  }
  Eigen::PartialPivLU<ComplexMatrix> lu(m);
  const double rcond = lu.rcond();
  if (!(rcond > 1.0 / kConditionLimit)) {
    throw IllConditionedError("solve_linear: matrix is singular to working precision",
                              rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity());
  }
  return lu.solve(b);
}

RealVector solve_linear(const RealMatrix& m, const RealVector& b) {
  ComplexVector x = solve_linear(ComplexMatrix(m.cast<std::complex<double>>()),
                                 ComplexVector(b.cast<std::complex<double>>()));
  return x.real();
}

}  // namespace relaybf::numerics
