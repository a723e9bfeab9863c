#include "madkit/performance.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

using namespace madkit;

namespace {

// reference survival values, scipy.stats 1.11 (chi2 / ncx2), 16 digits
struct KernelPin {
  int nu;
  double lambda;
  double x;
  double sf;
};

const std::vector<KernelPin> kSurvivalPins = {
    {3, 0.0, 2.7, 0.4402272943602312},
    {1, 0.5, 0.2, 0.7267113388727673},
    {27, 0.0, 12.0, 0.9942944465133368},
    {9, 1e-3, 8.0, 0.5342357896083794},
    {6, 4.797, 12.0, 0.3579654149827416},
    {15, 500.0, 400.0, 0.9964451502615234},
    {3, 8000.0, 8100.0, 0.2924865658824391},
    {50, 9500.0, 9700.0, 0.220480081835114},
};

double mc_ccdf(int nu, double lambda, double x, int n, std::mt19937_64& gen) {
  std::normal_distribution<double> z;
  std::gamma_distribution<double> rest(nu > 1 ? 0.5 * (nu - 1) : 1.0, 2.0);
  const double shift = std::sqrt(lambda);
  long long hits = 0;
  for (int i = 0; i < n; ++i) {
    const double head = z(gen) + shift;
    double v = head * head;
    if (nu > 1) v += rest(gen);
    if (v > x) ++hits;
  }
  return static_cast<double>(hits) / n;
}

const double kLambdaRef = 3.0 * 1001 * std::pow(10.0, -2.2);  // received energy at -22 dB

}  // namespace

TEST_CASE("survival function against library pins") {
  for (const auto& pin : kSurvivalPins) {
    const ChiSquaredSpec spec{pin.nu, pin.lambda};
    CHECK(chi2_ccdf(spec, pin.x) == doctest::Approx(pin.sf).epsilon(5e-13));
    CHECK(chi2_cdf(spec, pin.x) == doctest::Approx(1.0 - pin.sf).epsilon(5e-13));
  }
}

TEST_CASE("density against library pins") {
  CHECK(chi2_pdf({3, 0.0}, 2.7) == doctest::Approx(0.1699395239489702).epsilon(1e-12));
  CHECK(chi2_pdf({1, 0.5}, 0.2) == doctest::Approx(0.6603195849438595).epsilon(1e-12));
  CHECK(chi2_pdf({3, 8000.0}, 8100.0) ==
        doctest::Approx(0.001909402095658618).epsilon(1e-12));
  CHECK(chi2_pdf({50, 9500.0}, 9700.0) ==
        doctest::Approx(0.001506981935016444).epsilon(1e-12));
}

TEST_CASE("boundary values at x = 0") {
  CHECK(chi2_ccdf({2, 0.0}, 0.0) == 1.0);
  CHECK(chi2_cdf({2, 0.0}, 0.0) == 0.0);
  CHECK(chi2_pdf({2, 0.0}, 0.0) == 0.5);
  CHECK(chi2_pdf({3, 1.0}, 0.0) == 0.0);
  CHECK(std::isinf(chi2_pdf({1, 0.0}, 0.0)));
}

TEST_CASE("cdf and ccdf are complementary") {
  for (const auto& pin : kSurvivalPins)
    CHECK(std::abs(chi2_cdf({pin.nu, pin.lambda}, pin.x) +
                   chi2_ccdf({pin.nu, pin.lambda}, pin.x) - 1.0) < 2e-13);
}

TEST_CASE("survival recurrence in the degrees of freedom") {
  // Fbar_{a+2}(t) = Fbar_a(t) + (t/2)^{a/2} e^{-t/2} / Gamma(a/2 + 1)
  for (int a = 1; a <= 40; a += (a < 12 ? 1 : 7))
    for (double t : {0.3, 2.7, 9.0, 25.0, 60.0}) {
      const double term =
          std::exp(0.5 * a * std::log(0.5 * t) - 0.5 * t - std::lgamma(0.5 * a + 1.0));
      const double lhs = chi2_ccdf({a + 2, 0.0}, t);
      const double rhs = chi2_ccdf({a, 0.0}, t) + term;
      CHECK(std::abs(lhs - rhs) <= 1e-14);
    }
}

TEST_CASE("noncentral survival against a sampling oracle") {
  std::mt19937_64 gen(2026);
  const int n = 1'000'000;
  for (const auto& [nu, lambda, x] : {std::tuple{3, 8.0, 10.0}, {12, 30.0, 45.0}, {1, 2.5, 4.0}}) {
    const double p = chi2_ccdf({nu, lambda}, x);
    const double est = mc_ccdf(nu, lambda, x, n, gen);
    const double se = std::sqrt(est * (1.0 - est) / n);
    CHECK(std::abs(est - p) < 4.0 * se + 1e-12);
  }
}

TEST_CASE("threshold pins and inverse round trip") {
  CHECK(threshold_for_pfa(27, 1e-2) == doctest::Approx(46.96294212475145).epsilon(1e-10));
  CHECK(threshold_for_pfa(9, 1e-3) == doctest::Approx(27.87716487125657).epsilon(1e-10));
  CHECK(threshold_for_pfa(15, 0.5) == doctest::Approx(14.33885951095665).epsilon(1e-10));
  CHECK(threshold_for_pfa(3, 1e-6) == doctest::Approx(30.6648497062136).epsilon(1e-10));

  for (const ChiSquaredSpec spec :
       {ChiSquaredSpec{1, 0.0}, {3, 8000.0}, {27, kLambdaRef}, {50, 9500.0}})
    for (double p : {1e-8, 1e-3, 0.3, 0.9, 1.0 - 1e-6}) {
      const double x = chi2_ccdf_inverse(spec, p);
      const double back = chi2_ccdf(spec, x);
      const double tol = (p >= 1e-3 ? 1e-9 : 1e-7) * p + 1e-14;
      CHECK(std::abs(back - p) <= tol);
    }
}

TEST_CASE("analytic ROC areas") {
  CHECK(roc_auc({3, 0.0}) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(roc_auc({7, 5.0}) == doctest::Approx(0.771029214512).epsilon(5e-6));
  CHECK(roc_auc({27, kLambdaRef}) == doctest::Approx(0.92516910).epsilon(5e-6));
}

TEST_CASE("ROC curves are monotone and concave") {
  for (const ChiSquaredSpec spec :
       {ChiSquaredSpec{9, 3.0}, {15, kLambdaRef}, {27, 120.0}, {1, 0.7}}) {
    std::vector<double> grid(301);
    for (size_t i = 0; i < grid.size(); ++i)
      grid[i] = 1e-4 + (1.0 - 2e-4) * static_cast<double>(i) / (grid.size() - 1);
    const RocCurve curve = roc(spec, grid);
    REQUIRE(curve.points.size() == grid.size() + 2);
    CHECK(curve.points.front().pfa == 0.0);
    CHECK(curve.points.front().pd == 0.0);
    CHECK(curve.points.back().pfa == 1.0);
    CHECK(curve.points.back().pd == 1.0);
    for (size_t i = 1; i + 2 < curve.points.size(); ++i) {
      CHECK(curve.points[i + 1].pd >= curve.points[i].pd - 1e-12);
      CHECK(curve.points[i + 1].threshold <= curve.points[i].threshold);
    }
    for (size_t i = 2; i + 2 < curve.points.size(); ++i) {
      const double second = curve.points[i + 1].pd - 2.0 * curve.points[i].pd +
                            curve.points[i - 1].pd;
      CHECK(second <= 1e-9);
    }
  }
}

TEST_CASE("detection probability ordering in lambda and in dof") {
  const double thr15 = threshold_for_pfa(15, 1e-2);
  double prev = 0.0;
  for (double lambda : {0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0}) {
    const double pd = chi2_ccdf({15, lambda}, thr15);
    CHECK(pd > prev);
    prev = pd;
  }
  // at equal captured energy, extra receiver dimensions only dilute
  prev = 1.0;
  for (int nu : {9, 15, 21, 27}) {
    const double pd = chi2_ccdf({nu, kLambdaRef}, threshold_for_pfa(nu, 1e-2));
    CHECK(pd < prev);
    prev = pd;
  }
}

TEST_CASE("critical energy fraction of the reduced receiver") {
  const double alpha = critical_alpha(2, 3, 1e-2, kLambdaRef);
  CHECK(alpha == doctest::Approx(0.8304155522).epsilon(5e-6));

  // defining property: at alpha the reduced receiver matches the full one
  const double pd_full = chi2_ccdf({15, kLambdaRef}, threshold_for_pfa(15, 1e-2));
  CHECK(pd_full == doctest::Approx(0.5976211547).epsilon(1e-9));
  const double pd_red =
      chi2_ccdf({9, alpha * kLambdaRef}, threshold_for_pfa(9, 1e-2));
  CHECK(std::abs(pd_red - pd_full) < 1e-5);

  // as detection saturates the fewer-dof advantage fades, so the reduced
  // receiver needs a larger share of the energy to keep up (10x lambda and
  // beyond is unusable here: both receivers hit pd = 1 - O(eps) and the
  // crossing equation dissolves into rounding noise)
  CHECK(critical_alpha(2, 3, 1e-2, 3.0 * kLambdaRef) > alpha);
  // and far below saturation the dof saving dominates
  CHECK(critical_alpha(2, 3, 1e-2, 0.1 * kLambdaRef) < alpha);
}

TEST_CASE("optimal order map structure") {
  const OptimalOrderMap map = optimal_order_map(1e-2, -22.0, 3, 1001, 11);
  REQUIRE(map.order.rows() == 11);
  REQUIRE(map.order.cols() == 11);
  CHECK(map.alpha_dipole[0] == 0.0);
  CHECK(map.alpha_dipole[10] == 1.0);

  CHECK(map.order(0, 0) == 3);    // all energy above quadrupole order
  CHECK(map.order(0, 10) == 1);   // pure dipolar energy
  CHECK(map.order(10, 0) == 2);   // pure quadrupolar energy
  CHECK(map.order(10, 10) == 0);  // infeasible split

  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      const bool feasible = map.alpha_dipole[j] + map.alpha_increment[i] <= 1.0 + 1e-12;
      if (feasible) {
        CHECK(map.order(i, j) >= 1);
        CHECK(map.order(i, j) <= 3);
      } else {
        CHECK(map.order(i, j) == 0);
      }
    }
}

TEST_CASE("reduced-receiver SNR ratio") {
  CHECK(snr_ratio(2, 0.6) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(snr_ratio(3, 5.0 / 7.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(snr_ratio(2, 0.9) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("domain validation") {
  CHECK_THROWS_AS(chi2_ccdf({0, 0.0}, 1.0), std::domain_error);
  CHECK_THROWS_AS(chi2_ccdf({3, -1.0}, 1.0), std::domain_error);
  CHECK_THROWS_AS(chi2_ccdf({3, 0.0}, -0.1), std::domain_error);
  CHECK_THROWS_AS(chi2_ccdf_inverse({3, 0.0}, 0.0), std::domain_error);
  CHECK_THROWS_AS(chi2_ccdf_inverse({3, 0.0}, 1.0), std::domain_error);
  CHECK_THROWS_AS(roc({3, 0.0}, {0.5, 1.0}), std::domain_error);
  CHECK_THROWS_AS(critical_alpha(1, 3, 1e-2, 10.0), std::domain_error);
  CHECK_THROWS_AS(critical_alpha(2, 3, 0.0, 10.0), std::domain_error);
  CHECK_THROWS_AS(critical_alpha(2, 3, 1e-2, 0.0), std::domain_error);
  CHECK_THROWS_AS(optimal_order_map(1e-2, -22.0, 3, 1001, 1), std::domain_error);
}
