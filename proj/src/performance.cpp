#include "madkit/performance.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace madkit {

namespace {

void check_spec(const ChiSquaredSpec& s) {
  if (s.nu < 1) throw std::domain_error("chi2: dof must be >= 1");
  if (!(s.lambda >= 0.0) || !std::isfinite(s.lambda))
    throw std::domain_error("chi2: noncentrality must be finite and >= 0");
}

// Central seeds F-bar_{nu+2k}(x) = Q(nu/2 + k, x/2); the only place a library
// incomplete gamma enters. Mixture neighbors come from the one-step
// recurrences below.
double gamma_q_seed(double a, double q) { return boost::math::gamma_q(a, q); }
double gamma_p_seed(double a, double q) { return boost::math::gamma_p(a, q); }

// x^{a-1} e^{-x} / Gamma(a) evaluated without the exponent cancellation that
// plagues exp(log...) for large arguments.
double gamma_pdf_core(double a, double x) {
  return boost::math::gamma_p_derivative(a, x);
}

enum class Kernel { Ccdf, Cdf, Pdf };

/// Poisson mixture sum_k e^{-h} h^k / k! * T_k(q) where T is the central
/// ccdf/cdf/pdf at dof nu+2k, summed outward from the modal weight k0 =
/// floor(h) so that lambda ~ 1e4 cannot underflow the k=0 start. The
/// increment t_k = q^{nu/2+k} e^{-q} / Gamma(nu/2+k+1) advances all three
/// kernels: Fbar_{k+1} = Fbar_k + t_k, F_{k+1} = F_k - t_k, f_k = t_k *
/// (nu/2+k) / (2q) ... handled via its own one-step ratio.
double poisson_mixture(Kernel kernel, double nu, double lambda, double x) {
  const double h = 0.5 * lambda;
  const double q = 0.5 * x;
  const double a0_base = 0.5 * nu;

  auto central = [&](double a) {
    switch (kernel) {
      case Kernel::Ccdf: return gamma_q_seed(a, q);
      case Kernel::Cdf: return gamma_p_seed(a, q);
      case Kernel::Pdf:  // f_{2a}(x) = q^{a-1} e^{-q} / (2 Gamma(a))
        return 0.5 * gamma_pdf_core(a, q);
    }
    return 0.0;
  };

  if (h == 0.0) return central(a0_base);

  const long long k0 = static_cast<long long>(std::floor(h));
  const double a0 = a0_base + static_cast<double>(k0);

  // Poisson weight w_k = e^{-h} h^k / k! and ccdf/cdf increment
  // t_k = q^{a} e^{-q} / Gamma(a+1): both are gamma-density values, seeded
  // through the cancellation-free kernel.
  const double w0 = gamma_pdf_core(static_cast<double>(k0) + 1.0, h);
  const double t0 = gamma_pdf_core(a0 + 1.0, q);
  const double v0 = central(a0);

  double sum = w0 * v0, comp = 0.0;  // Kahan-compensated accumulation
  auto accumulate = [&](double term) {
    const double y = term - comp;
    const double s = sum + y;
    comp = (s - sum) - y;
    sum = s;
  };

  // fresh anchors, used every 64 steps to stop recurrence drift
  auto poisson_w = [&](long long k) {
    return gamma_pdf_core(static_cast<double>(k) + 1.0, h);
  };
  auto increment_t = [&](double a) { return gamma_pdf_core(a + 1.0, q); };

  // upward: weights decay since k+1 > h beyond the mode
  {
    double w = w0, t = t0, v = v0;
    for (long long k = k0 + 1;; ++k) {
      const double a = a0_base + static_cast<double>(k);
      if ((k - k0) % 64 == 0) {
        w = poisson_w(k);
        t = increment_t(a);
        v = central(a);
      } else {
        w *= h / static_cast<double>(k);
        switch (kernel) {
          case Kernel::Ccdf: v += t; break;
          case Kernel::Cdf: v = std::max(0.0, v - t); break;
          case Kernel::Pdf: v *= q / (a - 1.0); break;
        }
        t *= q / a;
      }
      accumulate(w * v);
      const double r = h / static_cast<double>(k + 1);
      if (w * std::max(v, 1.0) * r / (1.0 - r) < 1e-15) break;
      if (k - k0 > 100000) break;  // unreachable for sane inputs
    }
  }

  // downward: weights decay since k <= h below the mode
  {
    double w = w0, t = t0, v = v0;
    for (long long k = k0 - 1; k >= 0; --k) {
      const double a = a0_base + static_cast<double>(k);
      if ((k0 - k) % 64 == 0) {
        w = poisson_w(k);
        t = increment_t(a);
        v = central(a);
      } else {
        w *= static_cast<double>(k + 1) / h;
        const double t_down = t * (a + 1.0) / q;  // t_k from t_{k+1}
        switch (kernel) {
          case Kernel::Ccdf: v = std::max(0.0, v - t_down); break;
          case Kernel::Cdf: v = std::min(1.0, v + t_down); break;
          case Kernel::Pdf: v *= a / q; break;
        }
        t = t_down;
      }
      accumulate(w * v);
      if (w < 1e-18) break;
      if (kernel == Kernel::Ccdf && v == 0.0) break;
    }
  }

  return sum;
}

}  // namespace

double chi2_ccdf(const ChiSquaredSpec& spec, double x) {
  check_spec(spec);
  if (x < 0.0) throw std::domain_error("chi2_ccdf: argument must be >= 0");
  if (x == 0.0) return 1.0;
  return std::min(1.0, poisson_mixture(Kernel::Ccdf, spec.nu, spec.lambda, x));
}

double chi2_cdf(const ChiSquaredSpec& spec, double x) {
  check_spec(spec);
  if (x <= 0.0) return 0.0;
  return std::min(1.0, poisson_mixture(Kernel::Cdf, spec.nu, spec.lambda, x));
}

double chi2_pdf(const ChiSquaredSpec& spec, double x) {
  check_spec(spec);
  if (x < 0.0) return 0.0;
  if (x == 0.0) {
    if (spec.nu > 2) return 0.0;
    if (spec.nu == 2) return 0.5 * std::exp(-0.5 * spec.lambda);
    return std::numeric_limits<double>::infinity();
  }
  return poisson_mixture(Kernel::Pdf, spec.nu, spec.lambda, x);
}

double chi2_ccdf_inverse(const ChiSquaredSpec& spec, double p) {
  check_spec(spec);
  if (!(p > 0.0) || !(p < 1.0))
    throw std::domain_error("chi2_ccdf_inverse: probability must lie in (0,1)");

  // bracket: ccdf(0)=1 > p; expand hi past the mean + many sigmas
  double lo = 0.0;
  const double mean = spec.nu + spec.lambda;
  const double sd = std::sqrt(2.0 * (spec.nu + 2.0 * spec.lambda));
  double hi = mean + 10.0 * sd;
  while (chi2_ccdf(spec, hi) > p) hi *= 2.0;

  for (int it = 0; it < 90 && (hi - lo) > 1e-14 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (chi2_ccdf(spec, mid) > p ? lo : hi) = mid;
  }

  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 4; ++it) {
    const double f = chi2_ccdf(spec, x) - p;
    const double d = chi2_pdf(spec, x);
    if (!(d > 0.0)) break;
    const double step = f / d;
    const double next = x + step;
    if (!(next > lo) || !(next < hi)) break;
    x = next;
    if (std::abs(step) < 1e-13 * std::max(1.0, x)) break;
  }
  return x;
}

double threshold_for_pfa(int nu, double pfa) {
  return chi2_ccdf_inverse({nu, 0.0}, pfa);
}

std::vector<double> log_pfa_grid(double lo_exp, double hi_exp, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i)
    g[i] = std::pow(10.0, lo_exp + (hi_exp - lo_exp) * i / (n - 1));
  return g;
}

namespace {

RocPoint roc_point(const ChiSquaredSpec& spec, double pfa) {
  const double thr = threshold_for_pfa(spec.nu, pfa);
  return {pfa, chi2_ccdf(spec, thr), thr};
}

}  // namespace

double roc_auc(const ChiSquaredSpec& spec) {
  // log-spaced points resolve the small-pfa knee; the uniform part covers the
  // bulk. Trapezoid over the merged grid.
  std::vector<double> grid = log_pfa_grid(-12.0, 0.0, 2400);
  grid.pop_back();  // 1.0 re-added below
  for (int i = 1; i < 1600; ++i) grid.push_back(i / 1600.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  double auc = 0.0, prev_pfa = 0.0, prev_pd = 0.0;
  for (double pfa : grid) {
    if (pfa <= 0.0 || pfa >= 1.0) continue;
    const double pd = chi2_ccdf(spec, threshold_for_pfa(spec.nu, pfa));
    auc += 0.5 * (pd + prev_pd) * (pfa - prev_pfa);
    prev_pfa = pfa;
    prev_pd = pd;
  }
  auc += 0.5 * (1.0 + prev_pd) * (1.0 - prev_pfa);
  return auc;
}

RocCurve roc(const ChiSquaredSpec& spec, const std::vector<double>& pfa_grid) {
  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  for (double pfa : pfa_grid) {
    if (!(pfa > 0.0) || !(pfa < 1.0))
      throw std::domain_error("roc: false-alarm grid must lie inside (0,1)");
    curve.points.push_back(roc_point(spec, pfa));
  }
  curve.points.push_back({1.0, 1.0, 0.0});
  std::sort(curve.points.begin(), curve.points.end(),
            [](const RocPoint& a, const RocPoint& b) { return a.pfa < b.pfa; });
  curve.auc = roc_auc(spec);
  return curve;
}

double critical_alpha(int N, int d, double pfa, double lambda_N) {
  if (N < 2) throw std::domain_error("critical_alpha: need N >= 2");
  if (!(pfa > 0.0) || !(pfa < 1.0))
    throw std::domain_error("critical_alpha: false-alarm rate must lie in (0,1)");
  if (!(lambda_N > 0.0)) throw std::domain_error("critical_alpha: lambda must be positive");

  const int nu_full = d * (2 * N + 1);
  const int nu_red = d * (2 * N - 1);
  const double thr_full = threshold_for_pfa(nu_full, pfa);
  const double thr_red = threshold_for_pfa(nu_red, pfa);
  const double pd_full = chi2_ccdf({nu_full, lambda_N}, thr_full);

  auto gap = [&](double alpha) {
    return chi2_ccdf({nu_red, alpha * lambda_N}, thr_red) - pd_full;
  };

  double lo = 0.0, hi = 1.0;
  if (gap(0.0) > 0.0) return 0.0;
  if (gap(1.0) < 0.0) return 1.0;
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

OptimalOrderMap optimal_order_map(double pfa, double snr_db, int d, int K, int cells) {
  if (cells < 2) throw std::domain_error("optimal_order_map: need at least 2 cells per axis");
  const double lambda3 = d * K * std::pow(10.0, snr_db / 10.0);

  double thr[3];
  int nu[3];
  for (int M = 1; M <= 3; ++M) {
    nu[M - 1] = d * (2 * M + 1);
    thr[M - 1] = threshold_for_pfa(nu[M - 1], pfa);
  }

  OptimalOrderMap map;
  map.alpha_dipole = Eigen::VectorXd::LinSpaced(cells, 0.0, 1.0);
  map.alpha_increment = Eigen::VectorXd::LinSpaced(cells, 0.0, 1.0);
  map.order.setZero(cells, cells);

  for (int i = 0; i < cells; ++i) {
    for (int j = 0; j < cells; ++j) {
      const double a1 = map.alpha_dipole[j];
      const double a2 = a1 + map.alpha_increment[i];
      if (a2 > 1.0 + 1e-12) continue;  // infeasible split stays 0
      const double lam[3] = {a1 * lambda3, a2 * lambda3, lambda3};
      int best = 1;
      double best_pd = chi2_ccdf({nu[0], lam[0]}, thr[0]);
      for (int M = 2; M <= 3; ++M) {
        const double pd = chi2_ccdf({nu[M - 1], lam[M - 1]}, thr[M - 1]);
        if (pd > best_pd) {
          best_pd = pd;
          best = M;
        }
      }
      map.order(i, j) = best;
    }
  }
  return map;
}

double snr_ratio(int N, double alpha_N) {
  return alpha_N * (2.0 * N + 1.0) / (2.0 * N - 1.0);
}

}  // namespace madkit
