#pragma once

#include "madkit/detector.hpp"

#include <functional>
#include <optional>
#include <string>

namespace madkit {

/// Penalized-energy criterion C(M) = ||A_M||^2/sigma^2 - c(M).
struct CriterionSpec {
  std::string name;
  std::function<double(int)> penalty;  ///< M -> c(M), strictly increasing
  int max_order = 4;
};

/// c(M) = 4dM.
CriterionSpec aic_criterion(int d, int max_order = 4);
/// c(M) = 2dM ln(dK).
CriterionSpec bic_criterion(int d, int K, int max_order = 4);

/// Restriction of the selection problem to the pair {M-m, M}.
/// Sign convention: the order-M choice wins when the complement-space energy
/// exceeds delta_c, an event ruled by a chi-squared with `dofs` degrees of
/// freedom and noncentrality k * delta_lambda under hypothesis k.
struct BinaryChoiceModel {
  int M = 2;
  int m = 1;
  double delta_c = 0.0;       ///< c(M) - c(M-m)
  double delta_lambda = 0.0;  ///< lambda_M - lambda_{M-m}
  int dofs = 0;               ///< 2dm
};

BinaryChoiceModel binary_choice(const CriterionSpec& spec, int d, int M, int m,
                                double lambda_M, double lambda_M_minus_m);

/// C(M) for one observation; the basis carries the order.
double criterion_value(const Observation& obs, const SampledBasisMatrix& basis_M,
                       const CriterionSpec& spec, double sigma2);

/// argmax_{M = 1..max_order} C(M); ties go to the smaller order. R is the
/// grid width the observation was sampled with.
int select_order(const Observation& obs, const CriterionSpec& spec, double sigma2,
                 double R);

/// Pr[M_c = M | H_k] in the binary-restricted setting, k in {0, 1}.
double selection_probability(const BinaryChoiceModel& model, int hypothesis);

/// Critical energy fraction of the criterion: the alpha at which the binary
/// choice between orders N-1 and N is an even bet, i.e. delta_c is the median
/// of chi2_{2d}((1-alpha) lambda_N). Empty when the median condition has no
/// root in [0,1]. Bisection to 1e-6.
std::optional<double> criterion_critical_alpha(int N, int d, double lambda_N,
                                               const CriterionSpec& spec);

/// First-moment proxy of the above: (1 - (delta_c - 2d)/lambda_N), floored
/// at 0.
double average_critical_alpha(int N, int d, double lambda_N,
                              const CriterionSpec& spec);

struct OperatingPoint {
  double pfa = 0.0;
  double pd = 0.0;
};

/// Exact operating point of the receiver that first runs the binary order
/// choice {N-m, N} and then thresholds the energy of the selected projection
/// at theta (sigma^2-scaled). The detection side mixes the two receivers'
/// laws with a coupling integral (adaptive quadrature, abs tol 1e-8); the
/// false-alarm side is the same expression with central laws.
OperatingPoint selected_order_performance(int N, int m, double alpha_N,
                                          double lambda_N, const CriterionSpec& spec,
                                          int d, double theta);

/// Same, but driven by a target false-alarm rate: solves pfa_C(theta) = pfa
/// for theta first (bisection), then reports the resulting pair.
OperatingPoint selected_order_performance_at_pfa(int N, int m, double alpha_N,
                                                 double lambda_N,
                                                 const CriterionSpec& spec, int d,
                                                 double pfa);

}  // namespace madkit
