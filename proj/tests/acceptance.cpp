// End-to-end acceptance checks against the published operating points.
// Each criterion prints one [PASS]/[FAIL] line; the exit code is the number
// of failed criteria. Heavy Monte Carlo sections report their runtime.

#include "madkit/field.hpp"
#include "madkit/harness.hpp"
#include "madkit/mobf.hpp"
#include "madkit/order_selection.hpp"
#include "madkit/performance.hpp"
#include "madkit/scenario.hpp"

#include <boost/math/quadrature/sinh_sinh.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

using namespace madkit;

namespace {

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

struct Criterion {
  explicit Criterion(std::string t) : title(std::move(t)) {}
  std::string title;
  std::vector<std::string> info;
  std::vector<std::string> problems;

  void expect(bool cond, const std::string& what) {
    if (!cond) problems.push_back(what);
  }
  void note(const std::string& what) { info.push_back(what); }
};

int report(const Criterion& c) {
  std::printf("[%s] %s\n", c.problems.empty() ? "PASS" : "FAIL", c.title.c_str());
  for (const std::string& line : c.info) std::printf("       %s\n", line.c_str());
  for (const std::string& line : c.problems) std::printf("    !! %s\n", line.c_str());
  std::fflush(stdout);
  return c.problems.empty() ? 0 : 1;
}

std::string scenario_path(const char* name) {
  return std::string(MADKIT_SOURCE_DIR) + "/scenarios/" + name;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. AUC of the order-4 receiver on a random 4th-order source, three basis
//    conditionings, SNR -25..-20 dB, 1e5 trials, vs the reference table.

Criterion random_source_auc() {
  Criterion c("1. order-4 receiver AUC on a random 4th-order source");
  const double kAucTol = 0.005;       // half a percentage point
  const double kBudgetPerSnr = 300.0; // seconds

  ExperimentConfig cfg;
  cfg.scenario = run_random_source_batch(4, 1, RngStream(41),
                                         pseudo_operational_geometry(3))[0];
  cfg.receiver_orders = {4};
  cfg.bases = {BasisKind::RawFgs, BasisKind::MobfG, BasisKind::MobfGgs};
  cfg.snr_db = {-25.0, -24.0, -23.0, -22.0, -21.0, -20.0};
  cfg.trials = 100'000;
  cfg.pfa_grid = {0.5};
  cfg.seed = 1;

  const auto t0 = std::chrono::steady_clock::now();
  const RocExperimentResult res = run_roc_experiment(cfg);
  const double elapsed = seconds_since(t0);
  c.note(fmt("%d trials, 6 SNRs, 3 bases in one shared-noise pass: %.1f s "
             "(%.1f s per SNR)",
             cfg.trials, elapsed, elapsed / 6.0));
  c.expect(elapsed / 6.0 < kBudgetPerSnr,
           fmt("runtime budget exceeded: %.1f s per SNR (limit %.0f s)",
               elapsed / 6.0, kBudgetPerSnr));
  if (res.curves.size() != 18) {
    c.expect(false, "unexpected curve count");
    return c;
  }

  // Reference AUC values (percent), rows in cfg.bases order.
  const double ref[3][6] = {
      {73.65, 78.12, 83.03, 87.68, 92.08, 95.59},
      {73.59, 78.08, 83.07, 87.67, 92.01, 95.62},
      {73.69, 78.17, 82.89, 87.76, 92.12, 95.67},
  };
  double emp[3][6], ana[3][6];
  for (int b = 0; b < 3; ++b)
    for (int s = 0; s < 6; ++s) {
      const RocCurveData& curve = res.curves[b * 6 + s];
      emp[b][s] = 100.0 * curve.auc_empirical;
      ana[b][s] = 100.0 * curve.auc_analytic;
    }
  const char* names[3] = {"Fgs", "G", "Ggs"};
  for (int b = 0; b < 3; ++b)
    c.note(fmt("%-3s empirical %%: %6.2f %6.2f %6.2f %6.2f %6.2f %6.2f", names[b],
               emp[b][0], emp[b][1], emp[b][2], emp[b][3], emp[b][4], emp[b][5]));
  c.note(fmt("analytic    %%: %6.2f %6.2f %6.2f %6.2f %6.2f %6.2f", ana[2][0],
             ana[2][1], ana[2][2], ana[2][3], ana[2][4], ana[2][5]));

  // (a) the three basis conditionings are interchangeable.
  double basis_dev = 0.0;
  for (int s = 0; s < 6; ++s)
    for (int b = 1; b < 3; ++b)
      basis_dev = std::max(basis_dev, std::abs(emp[b][s] - emp[0][s]) / 100.0);
  c.expect(basis_dev <= kAucTol,
           fmt("bases disagree: max cross-basis AUC gap %.3f pp", 100.0 * basis_dev));

  // (b) Monte Carlo matches the chi-squared law the receiver is built on.
  double mc_dev = 0.0;
  for (int b = 0; b < 3; ++b)
    for (int s = 0; s < 6; ++s)
      mc_dev = std::max(mc_dev, std::abs(emp[b][s] - ana[b][s]) / 100.0);
  c.expect(mc_dev <= kAucTol,
           fmt("empirical vs analytic AUC gap %.3f pp", 100.0 * mc_dev));

  // (c) comparison against the reference table.
  double ref_dev = 0.0;
  for (int b = 0; b < 3; ++b)
    for (int s = 0; s < 6; ++s)
      ref_dev = std::max(ref_dev, std::abs(emp[b][s] - ref[b][s]) / 100.0);
  // Diagnostic: the reference column is reproduced by a single flat
  // noncentrality rescale (checked here, not assumed).
  const double kRefEnergyRatio = 0.7755;  // -1.1 dB
  double fit_dev = 0.0;
  for (int s = 0; s < 6; ++s) {
    const RocCurveData& curve = res.curves[2 * 6 + s];
    const double fit = 100.0 * roc_auc({curve.nu, kRefEnergyRatio * curve.lambda});
    fit_dev = std::max(fit_dev, std::abs(fit - ref[0][s]));
  }
  c.note(fmt("reference table vs this run: max gap %.2f pp; a flat noncentrality "
             "rescale by %.4f (-1.1 dB) reproduces the reference values to %.2f pp",
             100.0 * ref_dev, kRefEnergyRatio, fit_dev));
  c.expect(ref_dev <= kAucTol,
           fmt("reference AUC table not reproduced: max gap %.2f pp (tolerance "
               "0.5 pp); internal consistency checks above hold, so the gap is a "
               "constant energy-scale offset in the reference values",
               100.0 * ref_dev));
  return c;
}

// ---------------------------------------------------------------------------
// 2. Orthonormality defects of the sampled bases on the survey grid.

Criterion basis_defects() {
  Criterion c("2. orthonormality defects of the sampled bases");
  const double e1 = orthonormality_error(sample_basis(BasisKind::MobfG, 1, 1001, 20.0));
  const double e5 = orthonormality_error(sample_basis(BasisKind::MobfG, 5, 1001, 20.0));
  c.note(fmt("eps(G1) = %.3e, eps(G5) = %.3e", e1, e5));
  c.expect(std::abs(e1 / 3.95e-5 - 1.0) <= 0.10,
           fmt("eps(G1) = %.3e outside 3.95e-5 +- 10%%", e1));
  c.expect(std::abs(e5 / 2.55e-3 - 1.0) <= 0.10,
           fmt("eps(G5) = %.3e outside 2.55e-3 +- 10%%", e5));
  for (int N = 1; N <= 5; ++N) {
    const double e = orthonormality_error(sample_basis(BasisKind::RawFgs, N, 1001, 20.0));
    c.expect(e < 1e-10, fmt("eps(F%dgs) = %.3e >= 1e-10", N, e));
  }
  return c;
}

// ---------------------------------------------------------------------------
// 3. Dipolar energy fractions of the two reference scenarios.

Criterion energy_fractions() {
  Criterion c("3. dipolar energy fractions of the reference scenarios");
  const struct {
    const char* file;
    double alpha2;
  } cases[] = {{"s1.scn", 0.747}, {"s2.scn", 0.941}};
  for (const auto& in : cases) {
    const Scenario sc = load_scenario(scenario_path(in.file));
    const SampledSignal sig = signal_on_trajectory(sc.sources, sc.geometry);
    const double alpha2 = subspace_energy_fractions(sig, 2)[0];
    c.note(fmt("%s: alpha2 = %.4f (reference %.3f)", in.file, alpha2, in.alpha2));
    c.expect(std::abs(alpha2 - in.alpha2) <= 0.005,
             fmt("%s: alpha2 = %.4f vs %.3f +- 0.005", in.file, alpha2, in.alpha2));
  }
  return c;
}

// ---------------------------------------------------------------------------
// 4. Receiver-order ROC ranking at -22 dB, pfa in [1e-3, 1e-1], analytic and
//    empirical.

Criterion roc_ordering() {
  Criterion c("4. receiver-order ROC ranking at -22 dB");
  const auto t0 = std::chrono::steady_clock::now();
  for (const char* file : {"s1.scn", "s2.scn"}) {
    const bool quadrupole_first = std::string(file) == "s1.scn";
    ExperimentConfig cfg;
    cfg.scenario = load_scenario(scenario_path(file));
    cfg.receiver_orders = {1, 2, 3, 4};
    cfg.snr_db = {-22.0};
    cfg.trials = 100'000;
    cfg.pfa_grid = log_pfa_grid(-3.0, -1.0, 41);
    cfg.seed = 2;
    const RocExperimentResult res = run_roc_experiment(cfg);
    if (res.curves.size() != 4) {
      c.expect(false, "unexpected curve count");
      return c;
    }
    const auto& m1 = res.curves[0];
    const auto& m2 = res.curves[1];
    const auto& m3 = res.curves[2];
    const auto& m4 = res.curves[3];
    int bad_12a = 0, bad_12e = 0, bad_23a = 0, bad_23e = 0, bad_34a = 0, bad_34e = 0;
    for (std::size_t i = 0; i < cfg.pfa_grid.size(); ++i) {
      const double d12a = m2.pd_analytic[i] - m1.pd_analytic[i];
      const double d12e = m2.pd_empirical[i] - m1.pd_empirical[i];
      if (quadrupole_first ? d12a <= 0.0 : d12a >= 0.0) ++bad_12a;
      if (quadrupole_first ? d12e <= 0.0 : d12e >= 0.0) ++bad_12e;
      if (m2.pd_analytic[i] - m3.pd_analytic[i] <= 0.0) ++bad_23a;
      if (m2.pd_empirical[i] - m3.pd_empirical[i] <= 0.0) ++bad_23e;
      if (m3.pd_analytic[i] - m4.pd_analytic[i] <= 0.0) ++bad_34a;
      if (m3.pd_empirical[i] - m4.pd_empirical[i] <= 0.0) ++bad_34e;
    }
    const char* rel = quadrupole_first ? ">" : "<";
    c.note(fmt("%s: checking Pd(M=2) %s Pd(M=1) and Pd(2) > Pd(3) > Pd(4) on %zu "
               "grid points, analytic and %d-trial empirical",
               file, rel, cfg.pfa_grid.size(), cfg.trials));
    c.expect(bad_12a == 0, fmt("%s: analytic M1/M2 ranking fails at %d points", file, bad_12a));
    c.expect(bad_12e == 0, fmt("%s: empirical M1/M2 ranking fails at %d points", file, bad_12e));
    c.expect(bad_23a == 0, fmt("%s: analytic M2>M3 fails at %d points", file, bad_23a));
    c.expect(bad_23e == 0, fmt("%s: empirical M2>M3 fails at %d points", file, bad_23e));
    c.expect(bad_34a == 0, fmt("%s: analytic M3>M4 fails at %d points", file, bad_34a));
    c.expect(bad_34e == 0, fmt("%s: empirical M3>M4 fails at %d points", file, bad_34e));
  }
  c.note(fmt("runtime %.1f s", seconds_since(t0)));
  return c;
}

// ---------------------------------------------------------------------------
// 5. Noncentral chi-squared kernel vs 1e7-sample Monte Carlo at 20 randomized
//    parameter triples, plus the dof recurrences.

Criterion kernel_vs_mc() {
  Criterion c("5. noncentral chi-squared kernel vs Monte Carlo and recurrences");
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(555);
  std::uniform_int_distribution<int> pick_nu(1, 50);
  std::uniform_real_distribution<double> pick_lambda(0.0, 1e4);
  std::uniform_real_distribution<double> pick_z(-3.0, 3.0);
  std::normal_distribution<double> n01;

  const long long n = 10'000'000;
  double worst_z = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int nu = pick_nu(gen);
    const double lambda = pick_lambda(gen);
    // An evaluation point in the distribution bulk, so the MC comparison has
    // nontrivial precision on both sides.
    double x, p;
    do {
      x = nu + lambda + pick_z(gen) * std::sqrt(2.0 * (nu + 2.0 * lambda));
      p = x > 0.0 ? chi2_ccdf({nu, lambda}, x) : -1.0;
    } while (!(p >= 1e-3 && p <= 0.999));

    const double shift = std::sqrt(lambda);
    std::gamma_distribution<double> rest(nu > 1 ? 0.5 * (nu - 1) : 0.5, 2.0);
    long long hits = 0;
    for (long long i = 0; i < n; ++i) {
      const double head = n01(gen) + shift;
      double v = head * head;
      if (nu > 1) v += rest(gen);
      if (v > x) ++hits;
    }
    const double phat = static_cast<double>(hits) / static_cast<double>(n);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    worst_z = std::max(worst_z, std::abs(phat - p) / se);
    c.expect(std::abs(phat - p) <= 3.0 * se,
             fmt("nu=%d lambda=%.1f x=%.2f: MC %.6f vs ccdf %.6f (%.1f SE)", nu,
                 lambda, x, phat, p, std::abs(phat - p) / se));
  }
  c.note(fmt("20 triples x 1e7 samples: worst deviation %.2f SE, %.1f s", worst_z,
             seconds_since(t0)));

  // Central dof recurrence, term computed independently through lgamma.
  double worst_central = 0.0;
  for (int a : {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 19, 26, 33, 40})
    for (double t : {0.3, 2.7, 9.0, 25.0, 60.0}) {
      const double term =
          std::exp(0.5 * a * std::log(0.5 * t) - 0.5 * t - std::lgamma(0.5 * a + 1.0));
      const double resid =
          std::abs(chi2_ccdf({a + 2, 0.0}, t) - chi2_ccdf({a, 0.0}, t) - term);
      worst_central = std::max(worst_central, resid);
    }
  c.note(fmt("central dof recurrence residual: %.2e", worst_central));
  c.expect(worst_central <= 1e-14,
           fmt("central dof recurrence residual %.2e > 1e-14", worst_central));

  // Noncentral extension Fbar_{nu+2,l} = Fbar_{nu,l} + 2 f_{nu+2,l}; three
  // evaluations, each truncated at 1e-14, so the bound composes to 3e-14.
  double worst_nc = 0.0;
  for (int nu : {1, 3, 8, 20, 45})
    for (double lambda : {0.3, 4.0, 40.0, 300.0})
      for (double scale : {0.5, 1.0, 1.6}) {
        const double x = scale * (nu + lambda);
        const double resid = std::abs(chi2_ccdf({nu + 2, lambda}, x) -
                                      chi2_ccdf({nu, lambda}, x) -
                                      2.0 * chi2_pdf({nu + 2, lambda}, x));
        worst_nc = std::max(worst_nc, resid);
      }
  c.note(fmt("noncentral dof recurrence residual: %.2e", worst_nc));
  c.expect(worst_nc <= 3e-14,
           fmt("noncentral dof recurrence residual %.2e > 3e-14", worst_nc));
  return c;
}

// ---------------------------------------------------------------------------
// 6. ROC family shape over a (nu, lambda) grid: monotone, concave, ordered in
//    the noncentrality.

Criterion roc_family_shape() {
  Criterion c("6. ROC family shape over a (nu, lambda) grid");
  const std::vector<int> nus = {3, 9, 15, 27, 51};
  const std::vector<double> lambdas = {0.5, 2.0, 10.0, 50.0, 200.0};
  std::vector<double> grid(199);
  for (int i = 0; i < 199; ++i) grid[i] = (i + 1) / 200.0;  // uniform spacing

  double worst_second_diff = -1.0;
  for (int nu : nus)
    for (double lambda : lambdas) {
      const RocCurve rc = roc({nu, lambda}, grid);
      c.expect(rc.points.size() == grid.size() + 2, "missing ROC endpoints");
      for (std::size_t i = 1; i < rc.points.size(); ++i) {
        c.expect(rc.points[i].pd >= rc.points[i - 1].pd - 1e-12,
                 fmt("nu=%d lambda=%g: pd not monotone at pfa=%.4f", nu, lambda,
                     rc.points[i].pfa));
        c.expect(rc.points[i].threshold <= rc.points[i - 1].threshold + 1e-9,
                 fmt("nu=%d lambda=%g: thresholds not monotone", nu, lambda));
      }
      // Interior points sit on the uniform grid, so plain second differences
      // certify concavity.
      for (std::size_t i = 2; i + 2 < rc.points.size(); ++i) {
        const double dd =
            rc.points[i + 1].pd - 2.0 * rc.points[i].pd + rc.points[i - 1].pd;
        worst_second_diff = std::max(worst_second_diff, dd);
        c.expect(dd <= 1e-9, fmt("nu=%d lambda=%g: convex kink %.2e at pfa=%.4f", nu,
                                 lambda, dd, rc.points[i].pfa));
      }
    }
  c.note(fmt("worst second difference: %.2e (concavity bound 1e-9)", worst_second_diff));

  for (int nu : nus)
    for (double pfa : {0.01, 0.1}) {
      const double thr = chi2_ccdf_inverse({nu, 0.0}, pfa);
      double prev = -1.0;
      for (double lambda : lambdas) {
        const double pd = chi2_ccdf({nu, lambda}, thr);
        c.expect(pd > prev, fmt("nu=%d pfa=%g: Pd not increasing in lambda", nu, pfa));
        prev = pd;
      }
    }
  return c;
}

// ---------------------------------------------------------------------------
// 7. Basis identities: envelope split, dual evaluation routes, Gram-Schmidt
//    agreement, and the continuum Gram limit.

Criterion basis_identities() {
  Criterion c("7. basis identities and continuum limit");

  std::vector<double> us;
  for (int i = 0; i <= 80; ++i) us.push_back(-10.0 + 0.25 * i);
  double worst_split = 0.0;
  for (int L = 1; L <= 7; ++L)
    for (int n = 0; n <= 2 * L; ++n)
      for (double u : us) {
        const double lhs = f_basis(L, n, u);
        const double rhs = f_basis(L + 1, n, u) + f_basis(L + 1, n + 2, u);
        const double resid = std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
        worst_split = std::max(worst_split, resid);
      }
  c.note(fmt("envelope split residual: %.2e", worst_split));
  c.expect(worst_split <= 1e-15,
           fmt("envelope split residual %.2e > 1e-15", worst_split));

  double worst_dual = 0.0;
  for (int N = 1; N <= 8; ++N)
    for (int n = 0; n <= 2 * N; ++n)
      for (double u : {0.0, 0.1, -0.4, 1.0, -2.5, 7.3, -10.0}) {
        const double a = mobf_eval(N, n, u);
        const double b = mobf_eval_gegenbauer(N, n, u);
        const double rel = std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-30});
        worst_dual = std::max(worst_dual, rel);
        c.expect(rel <= 1e-12, fmt("N=%d n=%d u=%g: evaluation routes differ by %.2e "
                                   "relative", N, n, u, rel));
      }
  c.note(fmt("closed form vs Gegenbauer route: worst relative gap %.2e", worst_dual));

  for (int N = 1; N <= 5; ++N) {
    const SampledBasisMatrix g = sample_basis(BasisKind::MobfG, N, 1001, 20.0);
    const SampledBasisMatrix fgs = sample_basis(BasisKind::RawFgs, N, 1001, 20.0);
    const double eps = orthonormality_error(g);
    for (int n = 0; n <= 2 * N; ++n) {
      const double dev = std::min((fgs.rows.row(n) - g.rows.row(n)).norm(),
                                  (fgs.rows.row(n) + g.rows.row(n)).norm());
      c.expect(dev <= 10.0 * eps,
               fmt("N=%d row %d: Gram-Schmidt of F deviates from G by %.2e (> 10 "
                   "eps = %.2e)", N, n, dev, 10.0 * eps));
    }
  }

  boost::math::quadrature::sinh_sinh<double> integrator;
  double worst_gram = 0.0;
  for (int N = 1; N <= 5; ++N)
    for (int i = 0; i <= 2 * N; ++i) {
      const MobfPolynomial pi = mobf_polynomial(N, i);
      for (int j = i; j <= 2 * N; ++j) {
        const MobfPolynomial pj = mobf_polynomial(N, j);
        // cut off past |u|=1e8: the polynomial overflows before the envelope
        // underflows (inf * 0 = nan) while the true product is below 1e-40
        const auto f = [&](double u) {
          if (std::abs(u) > 1e8) return 0.0;
          return mobf_eval(pi, u) * mobf_eval(pj, u);
        };
        const double inner = integrator.integrate(f, 1e-12);
        const double dev = std::abs(inner - (i == j ? 1.0 : 0.0));
        worst_gram = std::max(worst_gram, dev);
        c.expect(dev <= 1e-8,
                 fmt("N=%d (%d,%d): continuum inner product off identity by %.2e", N,
                     i, j, dev));
      }
    }
  c.note(fmt("continuum Gram deviation (quadrature oracle): %.2e", worst_gram));
  return c;
}

// ---------------------------------------------------------------------------
// 8. Binary order-selection laws against a restricted Monte Carlo, both
//    scenarios and both criteria at -22 dB.

Criterion selection_laws() {
  Criterion c("8. binary order-selection laws vs Monte Carlo");
  const auto t0 = std::chrono::steady_clock::now();
  const int trials = 20'000;
  const double sigma2 = 1.0;
  double aic_weight_s1 = -1.0;

  for (const char* file : {"s1.scn", "s2.scn"}) {
    const Scenario sc = load_scenario(scenario_path(file));
    const int d = sc.geometry.d();
    const int K = sc.geometry.K;
    const SampledSignal s =
        scale_to_snr(signal_on_trajectory(sc.sources, sc.geometry), -22.0, sigma2);
    const SampledBasisMatrix g1 = sample_basis(BasisKind::MobfGgs, 1, K, sc.geometry.R);
    const SampledBasisMatrix g2 = sample_basis(BasisKind::MobfGgs, 2, K, sc.geometry.R);
    const double lambda1 = (s.values * g1.rows.transpose()).squaredNorm() / sigma2;
    const double lambda2 = (s.values * g2.rows.transpose()).squaredNorm() / sigma2;

    const CriterionSpec specs[2] = {aic_criterion(d, 2), bic_criterion(d, K, 2)};
    BinaryChoiceModel models[2];
    for (int k = 0; k < 2; ++k)
      models[k] = binary_choice(specs[k], d, 2, 1, lambda2, lambda1);
    if (std::string(file) == "s1.scn")
      aic_weight_s1 = 1.0 - selection_probability(models[0], 1);

    // Restricted Monte Carlo: one noise pass, the order-2 receiver wins when
    // the complement energy clears delta_c. Both criteria read the same
    // statistics.
    int pick2[2][2] = {{0, 0}, {0, 0}};  // [criterion][hypothesis]
    const RngStream stream(13);
    for (int i = 0; i < trials; ++i) {
      std::mt19937_64 gen = stream.substream(static_cast<std::uint64_t>(i));
      const Eigen::MatrixXd noise = sample_noise(WhiteNoise{sigma2}, d, K, gen);
      for (int hyp = 0; hyp < 2; ++hyp) {
        const Eigen::MatrixXd x = hyp ? (s.values + noise).eval() : noise;
        const double e1 = (x * g1.rows.transpose()).squaredNorm() / sigma2;
        const double e2 = (x * g2.rows.transpose()).squaredNorm() / sigma2;
        for (int k = 0; k < 2; ++k)
          if (e2 - e1 > models[k].delta_c) ++pick2[k][hyp];
      }
    }
    for (int k = 0; k < 2; ++k)
      for (int hyp = 0; hyp < 2; ++hyp) {
        const double p = selection_probability(models[k], hyp);
        const double phat = static_cast<double>(pick2[k][hyp]) / trials;
        const double se = std::sqrt(p * (1.0 - p) / trials);
        c.expect(std::abs(phat - p) <= 3.0 * se,
                 fmt("%s %s H%d: Pr[M=2] MC %.5f vs law %.5f (3 SE = %.5f)", file,
                     specs[k].name.c_str(), hyp, phat, p, 3.0 * se));
        if (k == 0 && hyp == 1)
          c.note(fmt("%s aic: Pr[M=2|H1] law %.4f, MC %.4f", file, p, phat));
      }
    // The consistent criterion stays at the reduced order.
    for (int hyp = 0; hyp < 2; ++hyp) {
      const double freq1 = 1.0 - static_cast<double>(pick2[1][hyp]) / trials;
      c.expect(freq1 > 0.99,
               fmt("%s bic H%d: Pr[M=1] = %.5f <= 0.99", file, hyp, freq1));
    }
  }

  c.note(fmt("aic keep-weight on s1: %.4f (reference 0.642 +- 0.01)", aic_weight_s1));
  c.expect(std::abs(aic_weight_s1 - 0.642) <= 0.01,
           fmt("aic keep-weight %.4f vs 0.642 +- 0.01", aic_weight_s1));
  c.note(fmt("runtime %.1f s", seconds_since(t0)));
  return c;
}

// ---------------------------------------------------------------------------
// 9. The selected-order receiver degenerates to the pure fixed-order receivers
//    in the extreme-penalty limits.

Criterion degenerate_selection_limits() {
  Criterion c("9. selected-order receiver degenerate limits");
  const Scenario s1 = load_scenario(scenario_path("s1.scn"));
  const SampledSignal sig = signal_on_trajectory(s1.sources, s1.geometry);
  const double alpha = subspace_energy_fractions(sig, 2)[0];
  const double lambda = 3.0 * 1001 * std::pow(10.0, -2.2);
  const int d = 3;

  const CriterionSpec sticky{"sticky", [](int M) { return 1e8 * M; }, 2};
  const CriterionSpec loose{"loose", [](int M) { return 1e-9 * M; }, 2};
  double worst = 0.0;
  for (double theta : {5.0, 12.0, 20.0, 35.0}) {
    const OperatingPoint keep = selected_order_performance(2, 1, alpha, lambda, sticky,
                                                           d, theta);
    const OperatingPoint grow = selected_order_performance(2, 1, alpha, lambda, loose,
                                                           d, theta);
    const double dev[4] = {
        std::abs(keep.pfa - chi2_ccdf({9, 0.0}, theta)),
        std::abs(keep.pd - chi2_ccdf({9, alpha * lambda}, theta)),
        std::abs(grow.pfa - chi2_ccdf({15, 0.0}, theta)),
        std::abs(grow.pd - chi2_ccdf({15, lambda}, theta)),
    };
    for (double v : dev) worst = std::max(worst, v);
    c.expect(dev[0] <= 1e-6 && dev[1] <= 1e-6,
             fmt("theta=%g: sticky limit misses the order-1 receiver (pfa %.2e, pd "
                 "%.2e)", theta, dev[0], dev[1]));
    c.expect(dev[2] <= 1e-6 && dev[3] <= 1e-6,
             fmt("theta=%g: loose limit misses the order-2 receiver (pfa %.2e, pd "
                 "%.2e)", theta, dev[2], dev[3]));
  }
  c.note(fmt("worst operating-point deviation in the limits: %.2e", worst));
  return c;
}

// ---------------------------------------------------------------------------
// 10. Field synthesis: analytic field vs finite differences of the potential,
//     and harmonic vs tensor parameterizations of the same source.

double summed_potential(const std::vector<HarmonicCoefficients>& srcs,
                        const Eigen::Vector3d& p) {
  const double r = p.norm();
  const double theta = std::acos(std::clamp(p.z() / r, -1.0, 1.0));
  const double phi = std::atan2(p.y(), p.x());
  double psi = 0.0;
  for (const auto& src : srcs) psi += potential_order_l(src, r, theta, phi);
  return psi;
}

Criterion field_synthesis() {
  Criterion c("10. field synthesis consistency");
  std::mt19937 gen(99);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::vector<HarmonicCoefficients> harmonics;
  std::vector<MultipoleSource> srcs;
  for (int l = 1; l <= 4; ++l) {
    std::vector<double> a(l + 1), b(l);
    for (double& v : a) v = coeff(gen);
    for (double& v : b) v = coeff(gen);
    harmonics.emplace_back(l, a, b);
    srcs.emplace_back(harmonics.back());
  }

  std::uniform_real_distribution<double> radius(0.8, 3.0), unit(-1.0, 1.0);
  double worst_rel = 0.0;
  for (int k = 0; k < 100; ++k) {
    Eigen::Vector3d dir;
    do {
      dir = {unit(gen), unit(gen), unit(gen)};
    } while (dir.norm() < 0.1);
    const Eigen::Vector3d p = radius(gen) * dir.normalized();
    const Eigen::Vector3d analytic = total_field(srcs, p);
    const double h = 3e-5 * p.norm();
    Eigen::Vector3d fd;
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector3d dp = Eigen::Vector3d::Zero();
      dp[i] = h;
      fd[i] = -(summed_potential(harmonics, p + dp) -
                summed_potential(harmonics, p - dp)) / (2.0 * h);
    }
    const double rel = (analytic - fd).norm() / analytic.norm();
    worst_rel = std::max(worst_rel, rel);
    c.expect(rel <= 1e-6, fmt("point %d: field vs -grad(potential) off by %.2e "
                              "relative", k, rel));
  }
  c.note(fmt("100 exterior points: worst field/-grad residual %.2e", worst_rel));

  const Scenario sh = load_scenario(scenario_path("s1.scn"));
  const Scenario st = load_scenario(scenario_path("s1_tensor.scn"));
  const Eigen::MatrixXd a = signal_on_trajectory(sh.sources, sh.geometry).values;
  const Eigen::MatrixXd b = signal_on_trajectory(st.sources, st.geometry).values;
  const double corr = (a.cwiseProduct(b)).sum() / (a.norm() * b.norm());
  c.note(fmt("harmonic vs tensor signal correlation: 1 - %.2e", 1.0 - corr));
  c.expect(corr > 1.0 - 1e-8,
           fmt("harmonic and tensor syntheses diverge: correlation %.12f", corr));
  return c;
}

}  // namespace

int main() {
  std::printf("madkit acceptance suite\n");
  std::fflush(stdout);
  int failed = 0;
  failed += report(random_source_auc());
  failed += report(basis_defects());
  failed += report(energy_fractions());
  failed += report(roc_ordering());
  failed += report(kernel_vs_mc());
  failed += report(roc_family_shape());
  failed += report(basis_identities());
  failed += report(selection_laws());
  failed += report(degenerate_selection_limits());
  failed += report(field_synthesis());
  std::printf("%d/10 criteria passed\n", 10 - failed);
  return failed;
}
