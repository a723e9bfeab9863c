#include "madkit/order_selection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace madkit {

namespace {

/// F-bar extended to the whole line: below the support everything survives.
double ccdf_ext(const ChiSquaredSpec& spec, double x) {
  return x <= 0.0 ? 1.0 : chi2_ccdf(spec, x);
}

// 15-point Gauss-Kronrod pair on [-1, 1]; abscissae symmetric about 0.
constexpr double kKronrodX[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
constexpr double kKronrodW[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double kGaussW[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <class F>
void gauss_kronrod(const F& f, double a, double b, double& value, double& error) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double fv[15];
  for (int i = 0; i < 7; ++i) {
    fv[i] = f(c - h * kKronrodX[i]);
    fv[14 - i] = f(c + h * kKronrodX[i]);
  }
  fv[7] = f(c);
  double kr = 0.0;
  for (int i = 0; i < 8; ++i)
    kr += kKronrodW[i] * (i == 7 ? fv[7] : fv[i] + fv[14 - i]);
  double gs = 0.0;
  for (int i = 0; i < 4; ++i) {
    const int j = 2 * i + 1;  // Gauss nodes sit at the odd Kronrod indices
    gs += kGaussW[i] * (j == 7 ? fv[7] : fv[j] + fv[14 - j]);
  }
  value = h * kr;
  error = std::abs(h * (kr - gs));
}

template <class F>
double integrate_adaptive(const F& f, double a, double b, double abs_tol) {
  struct Panel {
    double a, b, value, error;
  };
  double value, error;
  gauss_kronrod(f, a, b, value, error);
  std::vector<Panel> panels{{a, b, value, error}};
  double total_err = error;
  int splits = 0;
  while (total_err > abs_tol && splits < 2000) {
    // split the worst panel
    size_t worst = 0;
    for (size_t i = 1; i < panels.size(); ++i)
      if (panels[i].error > panels[worst].error) worst = i;
    const Panel p = panels[worst];
    const double mid = 0.5 * (p.a + p.b);
    Panel left, right;
    left.a = p.a;
    left.b = mid;
    right.a = mid;
    right.b = p.b;
    gauss_kronrod(f, left.a, left.b, left.value, left.error);
    gauss_kronrod(f, right.a, right.b, right.value, right.error);
    panels[worst] = left;
    panels.push_back(right);
    total_err += left.error + right.error - p.error;
    ++splits;
  }
  double sum = 0.0;
  for (const auto& p : panels) sum += p.value;
  return sum;
}

void check_criterion(const CriterionSpec& spec) {
  if (!spec.penalty) throw std::invalid_argument("criterion: missing penalty function");
  if (spec.max_order < 1) throw std::invalid_argument("criterion: max_order must be >= 1");
}

/// Shared evaluator for both operating-point coordinates: central laws for
/// the false-alarm side (noncentralities zeroed), noncentral for detection.
double mixed_ccdf(int nu_small, double lam_small, int nu_big, double lam_big,
                  int dofs, double dlam, double delta_c, double theta) {
  const ChiSquaredSpec gap{dofs, dlam};
  const ChiSquaredSpec small{nu_small, lam_small};
  const ChiSquaredSpec big{nu_big, lam_big};

  const double keep_small = chi2_cdf(gap, delta_c);   // gap stays under the penalty
  const double keep_big = 1.0 - keep_small;

  double value = keep_small * ccdf_ext(small, theta) + keep_big * ccdf_ext(big, theta - delta_c);

  const double upper = theta - delta_c;
  if (upper > 0.0) {
    auto integrand = [&](double u) {
      return (ccdf_ext(gap, theta - u) - keep_big * ccdf_ext(gap, upper - u)) *
             chi2_pdf(small, u);
    };
    value += integrate_adaptive(integrand, 0.0, upper, 1e-8);
  }
  return value;
}

}  // namespace

CriterionSpec aic_criterion(int d, int max_order) {
  return {"aic", [d](int M) { return 4.0 * d * M; }, max_order};
}

CriterionSpec bic_criterion(int d, int K, int max_order) {
  const double log_n = std::log(static_cast<double>(d) * K);
  return {"bic", [d, log_n](int M) { return 2.0 * d * M * log_n; }, max_order};
}

BinaryChoiceModel binary_choice(const CriterionSpec& spec, int d, int M, int m,
                                double lambda_M, double lambda_M_minus_m) {
  check_criterion(spec);
  if (m < 1 || m >= M) throw std::invalid_argument("binary_choice: need 1 <= m < M");
  if (lambda_M < lambda_M_minus_m)
    throw std::invalid_argument("binary_choice: projected energy cannot shrink with order");
  BinaryChoiceModel model;
  model.M = M;
  model.m = m;
  model.delta_c = spec.penalty(M) - spec.penalty(M - m);
  model.delta_lambda = lambda_M - lambda_M_minus_m;
  model.dofs = 2 * d * m;
  if (!(model.delta_c > 0.0))
    throw std::invalid_argument("binary_choice: penalty must increase with order");
  return model;
}

double criterion_value(const Observation& obs, const SampledBasisMatrix& basis_M,
                       const CriterionSpec& spec, double sigma2) {
  check_criterion(spec);
  if (!(sigma2 > 0.0)) throw std::invalid_argument("criterion: sigma^2 must be positive");
  return detection_statistic(obs, basis_M) / sigma2 - spec.penalty(basis_M.N);
}

int select_order(const Observation& obs, const CriterionSpec& spec, double sigma2,
                 double R) {
  check_criterion(spec);
  int best = 1;
  double best_value = 0.0;
  for (int M = 1; M <= spec.max_order; ++M) {
    const SampledBasisMatrix basis =
        sample_basis(BasisKind::MobfGgs, M, static_cast<int>(obs.x.cols()), R);
    const double value = criterion_value(obs, basis, spec, sigma2);
    if (M == 1 || value > best_value) {
      best_value = value;
      best = M;
    }
  }
  return best;
}

double selection_probability(const BinaryChoiceModel& model, int hypothesis) {
  if (hypothesis != 0 && hypothesis != 1)
    throw std::invalid_argument("selection_probability: hypothesis must be 0 or 1");
  const ChiSquaredSpec gap{model.dofs, hypothesis * model.delta_lambda};
  return chi2_ccdf(gap, model.delta_c);
}

std::optional<double> criterion_critical_alpha(int N, int d, double lambda_N,
                                               const CriterionSpec& spec) {
  check_criterion(spec);
  if (!(lambda_N > 0.0))
    throw std::invalid_argument("criterion_critical_alpha: lambda must be positive");
  const double delta_c = spec.penalty(N) - spec.penalty(N - 1);
  const int dofs = 2 * d;

  auto excess = [&](double alpha) {
    return chi2_ccdf({dofs, (1.0 - alpha) * lambda_N}, delta_c) - 0.5;
  };
  // decreasing in alpha; root exists iff the signs bracket
  if (excess(0.0) < 0.0 || excess(1.0) > 0.0) return std::nullopt;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double average_critical_alpha(int N, int d, double lambda_N,
                              const CriterionSpec& spec) {
  check_criterion(spec);
  if (!(lambda_N > 0.0))
    throw std::invalid_argument("average_critical_alpha: lambda must be positive");
  const double delta_c = spec.penalty(N) - spec.penalty(N - 1);
  return std::max(0.0, 1.0 - (delta_c - 2.0 * d) / lambda_N);
}

OperatingPoint selected_order_performance(int N, int m, double alpha_N,
                                          double lambda_N, const CriterionSpec& spec,
                                          int d, double theta) {
  check_criterion(spec);
  if (m < 1 || m >= N)
    throw std::invalid_argument("selected_order_performance: need 1 <= m < N");
  if (!(alpha_N >= 0.0) || !(alpha_N <= 1.0))
    throw std::invalid_argument("selected_order_performance: alpha must lie in [0,1]");

  const int nu_small = d * (2 * (N - m) + 1);
  const int nu_big = d * (2 * N + 1);
  const double lam_small = alpha_N * lambda_N;
  const double dlam = lambda_N - lam_small;
  const double delta_c = spec.penalty(N) - spec.penalty(N - m);
  const int dofs = 2 * d * m;

  OperatingPoint point;
  point.pfa = mixed_ccdf(nu_small, 0.0, nu_big, 0.0, dofs, 0.0, delta_c, theta);
  point.pd = mixed_ccdf(nu_small, lam_small, nu_big, lambda_N, dofs, dlam, delta_c, theta);
  return point;
}

OperatingPoint selected_order_performance_at_pfa(int N, int m, double alpha_N,
                                                 double lambda_N,
                                                 const CriterionSpec& spec, int d,
                                                 double pfa) {
  if (!(pfa > 0.0) || !(pfa < 1.0))
    throw std::invalid_argument("selected_order_performance: pfa must lie in (0,1)");
  // pfa_C is decreasing in theta; bracket wide then bisect
  auto pfa_at = [&](double theta) {
    return selected_order_performance(N, m, alpha_N, lambda_N, spec, d, theta).pfa;
  };
  double lo = 0.0, hi = d * (2 * N + 1) + spec.penalty(N) + 100.0;
  while (pfa_at(hi) > pfa) hi *= 2.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (pfa_at(mid) > pfa ? lo : hi) = mid;
  }
  return selected_order_performance(N, m, alpha_N, lambda_N, spec, d, 0.5 * (lo + hi));
}

}  // namespace madkit
