#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace madkit {

/// One analytical orthonormal basis function g_{N,n}(u) = P_{N,n}(u) * (1+u^2)^{-(N+3/2)},
/// where P_{N,n} is the degree-n orthogonal polynomial for the weight (1+u^2)^{-2N-3}.
/// The monomial coefficients of P_{N,n}/c are exact integers (computed in arbitrary
/// precision, converted to double once); `norm` is the positive normalization c_{N,n}.
struct MobfPolynomial {
  int N = 0;  ///< family order; valid degrees are 0..2N
  int n = 0;  ///< polynomial degree
  double norm = 0.0;                ///< c_{N,n} > 0, with c^2 an exact rational times 1/pi
  std::vector<double> coeff;        ///< coeff[m] * u^m, m = 0..n; integer-valued; alternating parity
  std::vector<long long> rodrigues; ///< the d_{N,n,k} expansion terms, k = 0..n/2 (exact when they fit)
};

/// Exact construction of P_{N,n}. Throws std::domain_error when n is outside 0..2N
/// (the weight has finite moments only up to degree 4N+4) or N outside 1..8.
MobfPolynomial mobf_polynomial(int N, int n);

/// g_{N,n}(u), Horner evaluation of the expanded polynomial.
double mobf_eval(const MobfPolynomial& p, double u);
double mobf_eval(int N, int n, double u);

/// Same function through the ultraspherical route:
///   g_{N,n}(u) = c_{N,n} (-1)^n n! (1+u^2)^{(n-3)/2 - N} C_n^{(2N-n+3)}(u/sqrt(1+u^2)),
/// with C_n by its standard three-term recurrence. Kept as an independent
/// cross-check of the expanded form, not used on hot paths.
double mobf_eval_gegenbauer(int N, int n, double u);

/// Coefficient of u^n in c*P_{N,n}; equals c_{N,n} (-1)^n n! binom(4N+5-n, n).
double mobf_dominant_coefficient(int N, int n);

/// Squared normalization c_{N,n}^2 (useful for exactness tests).
double mobf_norm_squared(int N, int n);

enum class BasisKind {
  RawF,    ///< rows sample u^n (1+u^2)^{-(N+3/2)}
  MobfG,   ///< rows sample the analytical orthonormal functions g_{N,n}
  RawFgs,  ///< Gram-Schmidt of RawF rows, signs fixed to the analytical convention
  MobfGgs, ///< Gram-Schmidt re-orthonormalization of MobfG rows
};

std::string to_string(BasisKind kind);

/// Sampled basis on the regular grid u_k = -R/2 + k R/(K-1). Rows always carry
/// the sqrt(R/(K-1)) scale so Euclidean inner products approximate the
/// continuous ones (Riemann sum); `row_scaled` records that contract.
struct SampledBasisMatrix {
  BasisKind kind = BasisKind::MobfG;
  int N = 0;
  int K = 0;
  double R = 0.0;
  bool row_scaled = true;
  Eigen::MatrixXd rows;  ///< (2N+1) x K
};

/// The grid u_k itself.
Eigen::VectorXd sample_grid(int K, double R);

/// Build a sampled basis. Throws std::invalid_argument when K <= 2N+1 (rank).
SampledBasisMatrix sample_basis(BasisKind kind, int N, int K, double R);

/// Frobenius deviation of the Gram matrix from identity over sqrt(#rows).
double orthonormality_error(const Eigen::MatrixXd& rows);
double orthonormality_error(const SampledBasisMatrix& basis);

/// Modified Gram-Schmidt over rows, one re-orthogonalization pass, rows kept in
/// order (row i stays inside the span of input rows 0..i). Throws
/// std::runtime_error on rank deficiency.
Eigen::MatrixXd gram_schmidt(const Eigen::MatrixXd& rows);

}  // namespace madkit
