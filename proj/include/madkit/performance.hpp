#pragma once

#include <Eigen/Dense>

#include <vector>

namespace madkit {

/// Law of the (scaled) energy statistic: chi-squared with nu degrees of
/// freedom and noncentrality lambda (0 = central).
struct ChiSquaredSpec {
  int nu = 1;
  double lambda = 0.0;
};

/// Survival function F-bar(x) = P[X > x]. Noncentral values are computed by a
/// Poisson-weighted mixture of central survival functions, summed outward from
/// the dominant weight with an absolute truncation error below 1e-14.
/// Throws std::domain_error for x < 0.
double chi2_ccdf(const ChiSquaredSpec& spec, double x);

/// Distribution function P[X <= x]; same mixture scheme. x < 0 returns 0.
double chi2_cdf(const ChiSquaredSpec& spec, double x);

/// Density; same mixture scheme. x < 0 returns 0.
double chi2_pdf(const ChiSquaredSpec& spec, double x);

/// Solves chi2_ccdf(spec, x) = p for x by bracketed bisection plus a Newton
/// polish (residual driven to ~1e-12). Throws std::domain_error unless
/// p lies in (0,1).
double chi2_ccdf_inverse(const ChiSquaredSpec& spec, double p);

/// Detection threshold for a target false-alarm rate: the (1-pfa) quantile of
/// the central chi-squared with nu dof. The statistic is compared in
/// sigma^2-scaled units.
double threshold_for_pfa(int nu, double pfa);

struct RocPoint {
  double pfa;
  double pd;
  double threshold;  ///< generating scaled threshold
};

/// Receiver operating characteristic with its area. pd(pfa) is nondecreasing
/// and concave; endpoints (0,0) and (1,1) are always present.
struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// Log-spaced false-alarm grid, 10^lo..10^hi, n points.
std::vector<double> log_pfa_grid(double lo_exp, double hi_exp, int n);

/// Analytic ROC of the energy receiver with law `spec` under the target
/// hypothesis. The AUC is integrated by trapezoid on an internal refined grid
/// (log-spaced near 0 merged with a uniform grid, ~4000 points).
RocCurve roc(const ChiSquaredSpec& spec, const std::vector<double>& pfa_grid);

/// Area under the analytic ROC only.
double roc_auc(const ChiSquaredSpec& spec);

/// Critical energy fraction: the alpha at which the order-(N-1) receiver,
/// fed the fraction alpha of the full noncentrality lambda_N, matches the
/// order-N receiver's detection probability at the given false-alarm rate.
/// Returns 0 or 1 when the comparison does not change sign inside (0,1).
/// Bisection to 1e-6.
double critical_alpha(int N, int d, double pfa, double lambda_N);

/// Best receiver order over a grid of energy splits, for a 3rd-order source.
/// x axis: dipolar fraction alpha3'; y axis: quadrupolar increment
/// alpha3 - alpha3'. Cell value is the argmax over M in {1,2,3} of the
/// detection probability (ties toward the smaller order); cells with
/// alpha3' + increment > 1 are infeasible and hold 0.
struct OptimalOrderMap {
  Eigen::VectorXd alpha_dipole;     ///< x axis values
  Eigen::VectorXd alpha_increment;  ///< y axis values
  Eigen::MatrixXi order;            ///< order(i,j) for y_i, x_j
};

OptimalOrderMap optimal_order_map(double pfa, double snr_db, int d, int K, int cells);

/// SNR deterioration of the reduced-order receiver:
/// SNR_{N-1}/SNR_N = alpha_N (2N+1)/(2N-1).
double snr_ratio(int N, double alpha_N);

}  // namespace madkit
