#pragma once

#include "madkit/field.hpp"
#include "madkit/mobf.hpp"
#include "madkit/performance.hpp"

#include <Eigen/Dense>

#include <variant>

namespace madkit {

/// One d x K sensor record, possibly tagged with the simulated ground truth
/// (-1 unknown, 0 noise only, 1 source present).
struct Observation {
  Eigen::MatrixXd x;
  int truth = -1;
};

struct WhiteNoise {
  double sigma2 = 1.0;
};

/// Separable covariance: spatial (d x d) kron temporal (K x K), both SPD.
struct KroneckerNoise {
  Eigen::MatrixXd spatial;
  Eigen::MatrixXd temporal;
};

/// Unstructured dK x dK SPD covariance of vec(x^T) (channels stacked).
struct FullNoise {
  Eigen::MatrixXd covariance;
};

using NoiseModel = std::variant<WhiteNoise, KroneckerNoise, FullNoise>;

enum class Decision { H0, H1 };

/// Law parameters of the scaled energy statistic for an order-M receiver.
struct ReceiverStatistics {
  int nu = 0;         ///< d(2M+1)
  double lambda = 0;  ///< projected signal energy / sigma^2
  int M = 0;
  int d = 0;

  ChiSquaredSpec chi2() const { return {nu, lambda}; }
};

/// F+ = F^T (F F^T)^-1. Throws std::runtime_error when the Gram matrix
/// condition number exceeds 1e12 (raw polynomial bases degrade quickly with
/// order).
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& F);

/// Maximum-likelihood coefficients under white noise. Orthonormal(ized)
/// basis kinds use A = x G^T; the raw F basis goes through the
/// pseudo-inverse.
Eigen::MatrixXd estimate_coefficients(const Observation& obs,
                                      const SampledBasisMatrix& basis);

/// ||A||_F^2 for coefficients in an orthonormal basis.
double energy_statistic(const Eigen::MatrixXd& a_hat);

/// Energy of the reconstructed projection: ||A||_F^2 on orthonormal kinds,
/// Tr(A F F^T A^T) on the raw basis.
double energy_statistic(const Eigen::MatrixXd& a_hat, const SampledBasisMatrix& basis);

/// estimate + energy in one step; the GLRT statistic of the observation.
double detection_statistic(const Observation& obs, const SampledBasisMatrix& basis);

/// H1 iff statistic > eta; ties stay H0 so runs are deterministic.
Decision decide(double statistic, double eta);

/// Exact law of the scaled statistic for a noise-free signal s:
/// nu = d(2M+1), lambda = ||s G_M^T||_F^2 / sigma^2.
ReceiverStatistics receiver_stats(const SampledSignal& s, int M, double sigma2);

/// Factorization route for the whitening transform; the detection statistic
/// is invariant to the choice.
enum class WhitenRoute { Cholesky, SymmetricEigen };

/// Observation and basis mapped to an equivalent white-noise problem.
/// After non-white whitening the basis rows are no longer orthonormal, so the
/// downstream statistic must use the pseudo-inverse path; convention: treat
/// `x` as d' x K' with `basis_rows` sampled the same way. For the full model
/// d' = 1 and K' = dK (channels stacked).
struct WhitenedProblem {
  Eigen::MatrixXd x;
  Eigen::MatrixXd basis_rows;
};

WhitenedProblem whiten(const Observation& obs, const NoiseModel& model,
                       const SampledBasisMatrix& basis,
                       WhitenRoute route = WhitenRoute::Cholesky);

/// GLRT statistic of a whitened problem (pseudo-inverse projection energy).
double detection_statistic(const WhitenedProblem& problem);

/// Orthonormal basis of the orthogonal complement of the order-(M-m) space
/// inside the order-M space, sampled on the (K, R) grid; 2m rows. Built by
/// Gram-Schmidt of the stacked bases, keeping the rows the smaller space does
/// not already explain.
Eigen::MatrixXd complement_basis(int M, int m, int K, double R);

}  // namespace madkit
