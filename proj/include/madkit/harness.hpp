#pragma once

#include "madkit/detector.hpp"
#include "madkit/order_selection.hpp"
#include "madkit/performance.hpp"
#include "madkit/scenario.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace madkit {

/// Counter-based substream supplier. Trial i's generator is a pure function
/// of (master seed, i), so its draws do not depend on scheduling, worker
/// count, or which other trials ran first.
class RngStream {
 public:
  explicit RngStream(std::uint64_t master_seed) : master_(master_seed) {}
  std::uint64_t master() const { return master_; }
  std::mt19937_64 substream(std::uint64_t index) const;

 private:
  std::uint64_t master_;
};

/// Default survey pass: V = 85 m/s, D = 100 m, K = 1001, R = 20, t0 = 0,
/// beta = 0, Pi = first d rows of the identity.
TrajectoryGeometry pseudo_operational_geometry(int d = 3);

/// One Monte Carlo detection experiment: a scenario observed through a set of
/// receivers at a list of SNRs.
struct ExperimentConfig {
  Scenario scenario;
  std::vector<int> receiver_orders{1, 2, 3, 4};
  std::vector<BasisKind> bases{BasisKind::MobfGgs};
  NoiseModel noise = WhiteNoise{1.0};
  std::vector<double> snr_db{-22.0};
  int trials = 10'000;
  std::vector<double> pfa_grid;  ///< empty = log-spaced 1e-3..1, 61 points
  std::uint64_t seed = 1;
  int workers = 0;  ///< 0 = hardware concurrency
  std::string out_dir;  ///< empty = keep results in memory only
};

/// Rescale a sampled signal so that ||c s||_F^2 = d K sigma^2 10^(snr_db/10).
SampledSignal scale_to_snr(const SampledSignal& s, double snr_db, double sigma2);

/// One d x K noise draw from the model. The generator is consumed in a fixed
/// order, so equal seeds give equal matrices.
Eigen::MatrixXd sample_noise(const NoiseModel& model, int d, int K,
                             std::mt19937_64& gen);

/// Mann-Whitney estimate of P[T1 > T0] (ties count half).
double empirical_auc(std::vector<double> h0, std::vector<double> h1);

/// Detection frequencies at rank-statistic thresholds: for each target pfa,
/// the threshold is the matching H0 order statistic and pd the fraction of H1
/// statistics above it.
std::vector<double> empirical_pd(std::vector<double> h0, std::vector<double> h1,
                                 const std::vector<double>& pfa_grid);

/// One receiver x SNR slice of an experiment: analytic law and curve next to
/// the Monte Carlo one.
struct RocCurveData {
  int order = 1;
  BasisKind kind = BasisKind::MobfGgs;
  double snr_db = 0.0;
  int nu = 0;             ///< statistic dof in the whitened domain
  double lambda = 0.0;    ///< noncentrality of the scaled statistic
  std::vector<double> pfa;
  std::vector<double> pd_analytic;
  std::vector<double> pd_empirical;
  double auc_analytic = 0.0;
  double auc_empirical = 0.0;
};

struct RocExperimentResult {
  std::vector<RocCurveData> curves;
  std::vector<std::string> files;  ///< CSVs + manifest, when out_dir was set
};

/// Runs cfg.trials independent noise draws, shares them across all receivers
/// and SNRs (statistics are projections, so per-trial projections are reused
/// across the SNR list), and reports empirical next to analytic ROCs/AUCs.
/// Results are bitwise-identical for any worker count. With out_dir set,
/// writes one CSV per curve plus a JSON manifest carrying the config and a
/// content id.
RocExperimentResult run_roc_experiment(const ExperimentConfig& cfg);

/// Frequencies of the selected order under both hypotheses.
struct SelectionExperiment {
  Eigen::MatrixXd frequency;  ///< (max_order x 2): row M-1, col k = Pr[M_c=M|H_k]
  int trials = 0;
};

/// Monte Carlo order-selection histogram for a scenario at one SNR under
/// white noise. Deterministic for a fixed stream, any worker count.
SelectionExperiment run_selection_experiment(const Scenario& sc,
                                             const CriterionSpec& spec,
                                             double snr_db, double sigma2,
                                             int trials, const RngStream& stream,
                                             int workers = 0);

/// Random sources: per scenario, standard-normal harmonic coefficients for
/// every order 1..L and beta uniform on [-pi/2, pi/2]; geometry taken from
/// `geometry` otherwise.
std::vector<Scenario> run_random_source_batch(int L, int count,
                                              const RngStream& stream,
                                              const TrajectoryGeometry& geometry);

}  // namespace madkit
