#include "madkit/detector.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace madkit {

namespace {

constexpr double kConditionLimit = 1e12;

Eigen::MatrixXd inverse_spd_guarded(const Eigen::MatrixXd& gram, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error(std::string(what) + ": eigendecomposition failed");
  const auto& ev = eig.eigenvalues();
  if (!(ev.minCoeff() > 0.0) || ev.maxCoeff() / ev.minCoeff() > kConditionLimit)
    throw std::runtime_error(std::string(what) + ": matrix is ill-conditioned");
  return eig.eigenvectors() * ev.cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

bool orthonormal_kind(BasisKind kind) { return kind != BasisKind::RawF; }

Eigen::LLT<Eigen::MatrixXd> cholesky_spd(const Eigen::MatrixXd& cov, const char* what) {
  if (cov.rows() != cov.cols() || !cov.isApprox(cov.transpose(), 1e-12))
    throw std::invalid_argument(std::string(what) + ": covariance must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(std::string(what) + ": covariance is not positive definite");
  return llt;
}

/// W with W Sigma W^T = I: inverse Cholesky factor or the symmetric
/// inverse square root, per route.
Eigen::MatrixXd whitening_matrix(const Eigen::MatrixXd& cov, WhitenRoute route,
                                 const char* what) {
  const auto n = cov.rows();
  if (route == WhitenRoute::Cholesky) {
    const auto llt = cholesky_spd(cov, what);
    return llt.matrixL().solve(Eigen::MatrixXd::Identity(n, n));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0))
    throw std::invalid_argument(std::string(what) + ": covariance is not positive definite");
  return eig.eigenvectors() *
         eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

/// vec(x^T): channel-major stacking, row 0's K samples first.
Eigen::VectorXd stack_channels(const Eigen::MatrixXd& x) {
  Eigen::VectorXd v(x.size());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    v.segment(i * x.cols(), x.cols()) = x.row(i).transpose();
  return v;
}

}  // namespace

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& F) {
  if (F.rows() > F.cols())
    throw std::invalid_argument("pseudo_inverse: basis must have full row rank (more columns)");
  const Eigen::MatrixXd gram = F * F.transpose();
  return F.transpose() * inverse_spd_guarded(gram, "pseudo_inverse");
}

Eigen::MatrixXd estimate_coefficients(const Observation& obs,
                                      const SampledBasisMatrix& basis) {
  if (obs.x.cols() != basis.rows.cols())
    throw std::invalid_argument("estimate_coefficients: sample-count mismatch");
  if (orthonormal_kind(basis.kind)) return obs.x * basis.rows.transpose();
  return obs.x * pseudo_inverse(basis.rows);
}

double energy_statistic(const Eigen::MatrixXd& a_hat) { return a_hat.squaredNorm(); }

double energy_statistic(const Eigen::MatrixXd& a_hat, const SampledBasisMatrix& basis) {
  if (orthonormal_kind(basis.kind)) return a_hat.squaredNorm();
  return (a_hat * basis.rows).squaredNorm();
}

double detection_statistic(const Observation& obs, const SampledBasisMatrix& basis) {
  return energy_statistic(estimate_coefficients(obs, basis), basis);
}

Decision decide(double statistic, double eta) {
  return statistic > eta ? Decision::H1 : Decision::H0;
}

ReceiverStatistics receiver_stats(const SampledSignal& s, int M, double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("receiver_stats: sigma^2 must be positive");
  const SampledBasisMatrix g =
      sample_basis(BasisKind::MobfGgs, M, s.geometry.K, s.geometry.R);
  ReceiverStatistics st;
  st.M = M;
  st.d = s.geometry.d();
  st.nu = st.d * (2 * M + 1);
  st.lambda = (s.values * g.rows.transpose()).squaredNorm() / sigma2;
  return st;
}

WhitenedProblem whiten(const Observation& obs, const NoiseModel& model,
                       const SampledBasisMatrix& basis, WhitenRoute route) {
  WhitenedProblem out;
  if (const auto* white = std::get_if<WhiteNoise>(&model)) {
    if (!(white->sigma2 > 0.0))
      throw std::invalid_argument("whiten: sigma^2 must be positive");
    out.x = obs.x / std::sqrt(white->sigma2);
    out.basis_rows = basis.rows;
    return out;
  }
  if (const auto* kron = std::get_if<KroneckerNoise>(&model)) {
    if (kron->spatial.rows() != obs.x.rows() || kron->temporal.rows() != obs.x.cols())
      throw std::invalid_argument("whiten: covariance shapes do not match the observation");
    const Eigen::MatrixXd ws = whitening_matrix(kron->spatial, route, "whiten(spatial)");
    const Eigen::MatrixXd wt = whitening_matrix(kron->temporal, route, "whiten(temporal)");
    // temporal whitening acts on sample index: x W_t^T keeps E[n W_t^T (.)] = I
    out.x = ws * obs.x * wt.transpose();
    out.basis_rows = basis.rows * wt.transpose();
    return out;
  }
  const auto& full = std::get<FullNoise>(model);
  const auto dK = obs.x.size();
  if (full.covariance.rows() != dK)
    throw std::invalid_argument("whiten: covariance must be dK x dK");
  const Eigen::MatrixXd w = whitening_matrix(full.covariance, route, "whiten(full)");
  const auto d = obs.x.rows();
  const auto m = basis.rows.rows();
  // signal model vec(x^T) = (I_d kron F^T) vec(A^T); whitened basis rows are
  // the columns of W (I_d kron F^T)
  Eigen::MatrixXd stacked(dK, d * m);
  stacked.setZero();
  for (Eigen::Index i = 0; i < d; ++i)
    stacked.block(i * basis.rows.cols(), i * m, basis.rows.cols(), m) =
        basis.rows.transpose();
  out.x = (w * stack_channels(obs.x)).transpose();  // 1 x dK
  out.basis_rows = (w * stacked).transpose();       // dm x dK
  return out;
}

double detection_statistic(const WhitenedProblem& problem) {
  const Eigen::MatrixXd coeff = problem.x * pseudo_inverse(problem.basis_rows);
  return (coeff * problem.basis_rows).squaredNorm();
}

Eigen::MatrixXd complement_basis(int M, int m, int K, double R) {
  if (m < 1 || m >= M) throw std::invalid_argument("complement_basis: need 1 <= m < M");
  const SampledBasisMatrix small = sample_basis(BasisKind::MobfGgs, M - m, K, R);
  const SampledBasisMatrix big = sample_basis(BasisKind::MobfGgs, M, K, R);

  const int keep_target = 2 * m;
  Eigen::MatrixXd out(keep_target, K);
  int kept = 0;

  Eigen::MatrixXd accepted(small.rows.rows() + keep_target, K);
  accepted.topRows(small.rows.rows()) = small.rows;
  int n_acc = static_cast<int>(small.rows.rows());

  for (Eigen::Index r = 0; r < big.rows.rows(); ++r) {
    Eigen::RowVectorXd v = big.rows.row(r);
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < n_acc; ++j) v -= v.dot(accepted.row(j)) * accepted.row(j);
    const double res = v.norm();
    if (res < 1e-8) continue;  // already inside the accepted span
    v /= res;
    if (kept == keep_target)
      throw std::runtime_error("complement_basis: more independent rows than expected");
    out.row(kept++) = v;
    accepted.row(n_acc++) = v;
  }
  if (kept != keep_target)
    throw std::runtime_error("complement_basis: complement dimension mismatch");
  return out;
}

}  // namespace madkit
