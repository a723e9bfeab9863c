#include "madkit/harness.hpp"

#include "madkit/field.hpp"
#include "madkit/mobf.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <thread>
#include <variant>

namespace madkit {
namespace {

std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Fill in a fixed (row-major) order so a given generator state always yields
/// the same matrix.
Eigen::MatrixXd standard_normal(int rows, int cols, std::mt19937_64& gen) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::MatrixXd z(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) z(i, j) = n01(gen);
  return z;
}

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& cov, const char* what) {
  if (cov.rows() != cov.cols() || !cov.isApprox(cov.transpose(), 1e-12))
    throw std::invalid_argument(std::string(what) + ": covariance must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(std::string(what) + ": covariance is not positive definite");
  return llt.matrixL();
}

/// W with W Sigma W^T = I (inverse Cholesky factor).
Eigen::MatrixXd inverse_cholesky(const Eigen::MatrixXd& cov, const char* what) {
  return cholesky_factor(cov, what)
      .triangularView<Eigen::Lower>()
      .solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
}

int resolve_workers(int requested, int trials) {
  int w = requested;
  if (w <= 0) {
    unsigned hw = std::thread::hardware_concurrency();
    w = hw ? static_cast<int>(hw) : 4;
  }
  return std::clamp(w, 1, std::max(1, trials));
}

/// Runs fn(begin, end) over a partition of [0, trials). Slot-indexed output
/// keeps aggregates independent of the partition.
void parallel_trials(int trials, int workers,
                     const std::function<void(int, int)>& fn) {
  workers = resolve_workers(workers, trials);
  if (workers == 1) {
    fn(0, trials);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int chunk = (trials + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int begin = w * chunk;
    const int end = std::min(trials, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(fn, begin, end);
  }
  for (auto& t : pool) t.join();
}

}  // namespace

std::mt19937_64 RngStream::substream(std::uint64_t index) const {
  std::uint64_t state = master_ ^ (0xD1B54A32D192ED03ULL * (index + 1));
  const std::uint64_t a = splitmix64_next(state);
  const std::uint64_t b = splitmix64_next(state);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

TrajectoryGeometry pseudo_operational_geometry(int d) {
  if (d < 1 || d > 3)
    throw std::invalid_argument("pseudo_operational_geometry: d must be in {1,2,3}");
  return TrajectoryGeometry(85.0, 100.0, 0.0, 0.0,
                            Eigen::MatrixXd::Identity(3, 3).topRows(d), 1001, 20.0);
}

SampledSignal scale_to_snr(const SampledSignal& s, double snr_db, double sigma2) {
  if (!std::isfinite(snr_db)) throw std::invalid_argument("scale_to_snr: snr must be finite");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("scale_to_snr: sigma2 must be positive");
  const double energy = s.values.squaredNorm();
  if (!(energy > 0.0)) throw std::domain_error("scale_to_snr: zero signal");
  const double target = s.geometry.d() * s.geometry.K * sigma2 *
                        std::pow(10.0, snr_db / 10.0);
  SampledSignal out = s;
  out.values *= std::sqrt(target / energy);
  return out;
}

Eigen::MatrixXd sample_noise(const NoiseModel& model, int d, int K,
                             std::mt19937_64& gen) {
  if (d < 1 || K < 1) throw std::invalid_argument("sample_noise: bad dimensions");
  if (const auto* white = std::get_if<WhiteNoise>(&model)) {
    if (!(white->sigma2 > 0.0))
      throw std::invalid_argument("sample_noise: sigma2 must be positive");
    return std::sqrt(white->sigma2) * standard_normal(d, K, gen);
  }
  if (const auto* kron = std::get_if<KroneckerNoise>(&model)) {
    if (kron->spatial.rows() != d || kron->temporal.rows() != K)
      throw std::invalid_argument("sample_noise: covariance factor size mismatch");
    const Eigen::MatrixXd ls = cholesky_factor(kron->spatial, "sample_noise(spatial)");
    const Eigen::MatrixXd lt = cholesky_factor(kron->temporal, "sample_noise(temporal)");
    return ls * standard_normal(d, K, gen) * lt.transpose();
  }
  const auto& full = std::get<FullNoise>(model);
  if (full.covariance.rows() != static_cast<Eigen::Index>(d) * K)
    throw std::invalid_argument("sample_noise: covariance must be dK x dK");
  const Eigen::MatrixXd l = cholesky_factor(full.covariance, "sample_noise(full)");
  const Eigen::VectorXd w = l * standard_normal(d * K, 1, gen);
  Eigen::MatrixXd out(d, K);
  for (int i = 0; i < d; ++i) out.row(i) = w.segment(i * K, K).transpose();
  return out;
}

double empirical_auc(std::vector<double> h0, std::vector<double> h1) {
  if (h0.empty() || h1.empty())
    throw std::invalid_argument("empirical_auc: empty sample");
  struct Tagged {
    double value;
    int group;
  };
  std::vector<Tagged> all;
  all.reserve(h0.size() + h1.size());
  for (double v : h0) all.push_back({v, 0});
  for (double v : h1) all.push_back({v, 1});
  std::sort(all.begin(), all.end(),
            [](const Tagged& a, const Tagged& b) { return a.value < b.value; });
  // Mann-Whitney through average ranks; ties share their run's mean rank.
  double rank_sum1 = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    std::size_t ones = 0;
    while (j < all.size() && all[j].value == all[i].value) {
      ones += static_cast<std::size_t>(all[j].group);
      ++j;
    }
    const double avg_rank = 0.5 * static_cast<double>(i + j - 1) + 1.0;
    rank_sum1 += avg_rank * static_cast<double>(ones);
    i = j;
  }
  const double n0 = static_cast<double>(h0.size());
  const double n1 = static_cast<double>(h1.size());
  return (rank_sum1 - n1 * (n1 + 1.0) / 2.0) / (n0 * n1);
}

std::vector<double> empirical_pd(std::vector<double> h0, std::vector<double> h1,
                                 const std::vector<double>& pfa_grid) {
  if (h0.empty() || h1.empty())
    throw std::invalid_argument("empirical_pd: empty sample");
  std::sort(h0.begin(), h0.end());
  std::sort(h1.begin(), h1.end());
  std::vector<double> pd;
  pd.reserve(pfa_grid.size());
  const auto n0 = static_cast<std::ptrdiff_t>(h0.size());
  for (double p : pfa_grid) {
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("empirical_pd: pfa outside [0,1]");
    const auto exceed = std::clamp<std::ptrdiff_t>(
        static_cast<std::ptrdiff_t>(std::floor(p * static_cast<double>(n0))), 0, n0 - 1);
    const double threshold = h0[static_cast<std::size_t>(n0 - 1 - exceed)];
    const auto above = h1.end() - std::upper_bound(h1.begin(), h1.end(), threshold);
    pd.push_back(static_cast<double>(above) / static_cast<double>(h1.size()));
  }
  return pd;
}

namespace {

struct PreparedReceiver {
  int order = 1;
  BasisKind kind = BasisKind::MobfGgs;
  Eigen::MatrixXd proj;  ///< projection rows, whitened domain
  Eigen::MatrixXd ps;    ///< projected unit-scale signal
  double e_ss = 0.0;
  int nu = 0;
};

/// Maps observation-domain d x K matrices to the whitened domain where the
/// noise is iid standard normal.
std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> whitener(const NoiseModel& model,
                                                                int K) {
  if (const auto* white = std::get_if<WhiteNoise>(&model)) {
    const double inv_sigma = 1.0 / std::sqrt(white->sigma2);
    return [inv_sigma](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
      return inv_sigma * x;
    };
  }
  if (const auto* kron = std::get_if<KroneckerNoise>(&model)) {
    Eigen::MatrixXd ws = inverse_cholesky(kron->spatial, "roc(spatial)");
    Eigen::MatrixXd wt = inverse_cholesky(kron->temporal, "roc(temporal)");
    return [ws = std::move(ws), wt = std::move(wt)](const Eigen::MatrixXd& x) {
      return Eigen::MatrixXd(ws * x * wt.transpose());
    };
  }
  const auto& full = std::get<FullNoise>(model);
  Eigen::MatrixXd w = inverse_cholesky(full.covariance, "roc(full)");
  return [w = std::move(w), K](const Eigen::MatrixXd& x) {
    Eigen::VectorXd stacked(x.size());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      stacked.segment(i * K, K) = x.row(i).transpose();
    return Eigen::MatrixXd((w * stacked).transpose());
  };
}

/// Basis rows mapped to the whitened domain. Already-orthonormal(ish) kinds
/// pass through under white noise; every other route is re-orthonormalized so
/// the statistic is an exact projection energy.
Eigen::MatrixXd whitened_projection(const SampledBasisMatrix& basis,
                                    const NoiseModel& model, int d, int K) {
  if (std::holds_alternative<WhiteNoise>(model)) {
    if (basis.kind == BasisKind::RawF) return gram_schmidt(basis.rows);
    return basis.rows;
  }
  if (const auto* kron = std::get_if<KroneckerNoise>(&model)) {
    const Eigen::MatrixXd wt = inverse_cholesky(kron->temporal, "roc(temporal)");
    return gram_schmidt(basis.rows * wt.transpose());
  }
  const auto& full = std::get<FullNoise>(model);
  const Eigen::MatrixXd w = inverse_cholesky(full.covariance, "roc(full)");
  const auto m = basis.rows.rows();
  Eigen::MatrixXd stacked = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d) * K, d * m);
  for (int i = 0; i < d; ++i)
    stacked.block(static_cast<Eigen::Index>(i) * K, static_cast<Eigen::Index>(i) * m, K, m) =
        basis.rows.transpose();
  return gram_schmidt(Eigen::MatrixXd((w * stacked).transpose()));
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_curve_csv(const std::string& path, const RocCurveData& c) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "pfa,pd_analytic,pd_empirical\n";
  for (std::size_t i = 0; i < c.pfa.size(); ++i)
    out << format_double(c.pfa[i]) << ',' << format_double(c.pd_analytic[i]) << ','
        << format_double(c.pd_empirical[i]) << '\n';
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

std::uint64_t fnv1a64(const std::string& payload) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : payload) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

nlohmann::json describe_config(const ExperimentConfig& cfg, double sigma2) {
  nlohmann::json j;
  const auto& g = cfg.scenario.geometry;
  j["geometry"] = {{"V", g.V}, {"D", g.D},     {"t0", g.t0}, {"beta", g.beta},
                   {"K", g.K}, {"R", g.R},     {"d", g.d()}};
  nlohmann::json sources = nlohmann::json::array();
  for (const auto& src : cfg.scenario.sources) {
    nlohmann::json s;
    s["l"] = source_order(src);
    if (const auto* h = std::get_if<HarmonicCoefficients>(&src)) {
      s["form"] = "harmonic";
      s["a"] = h->a;
      s["b"] = h->b;
    } else {
      s["form"] = "tensor";
      s["components"] = std::get<MultipoleTensor>(src).components();
    }
    sources.push_back(std::move(s));
  }
  j["sources"] = std::move(sources);
  j["orders"] = cfg.receiver_orders;
  std::vector<std::string> kinds;
  for (BasisKind k : cfg.bases) kinds.push_back(to_string(k));
  j["bases"] = kinds;
  j["noise"] = std::holds_alternative<WhiteNoise>(cfg.noise)      ? "white"
               : std::holds_alternative<KroneckerNoise>(cfg.noise) ? "kronecker"
                                                                    : "full";
  j["sigma2"] = sigma2;
  j["snr_db"] = cfg.snr_db;
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  return j;
}

}  // namespace

RocExperimentResult run_roc_experiment(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("roc: trials must be >= 1");
  if (cfg.snr_db.empty()) throw std::invalid_argument("roc: empty snr list");
  for (double s : cfg.snr_db)
    if (!std::isfinite(s)) throw std::invalid_argument("roc: snr must be finite");
  if (cfg.receiver_orders.empty() || cfg.bases.empty())
    throw std::invalid_argument("roc: no receivers configured");
  const TrajectoryGeometry& geom = cfg.scenario.geometry;
  geom.validate();
  const int d = geom.d();
  const int K = geom.K;

  const SampledSignal raw = signal_on_trajectory(cfg.scenario.sources, geom);
  const double raw_energy = raw.values.squaredNorm();
  if (!(raw_energy > 0.0)) throw std::domain_error("roc: scenario signal is zero");

  const auto* white = std::get_if<WhiteNoise>(&cfg.noise);
  const double sigma2 = white ? white->sigma2 : 1.0;

  const auto to_white = whitener(cfg.noise, K);
  const Eigen::MatrixXd signal_w = to_white(raw.values);
  const auto channels = signal_w.rows();

  std::vector<PreparedReceiver> recs;
  for (int order : cfg.receiver_orders)
    for (BasisKind kind : cfg.bases) {
      PreparedReceiver r;
      r.order = order;
      r.kind = kind;
      r.proj = whitened_projection(sample_basis(kind, order, K, geom.R), cfg.noise, d, K);
      r.ps = signal_w * r.proj.transpose();
      r.e_ss = r.ps.squaredNorm();
      r.nu = static_cast<int>(channels * r.proj.rows());
      recs.push_back(std::move(r));
    }

  std::vector<double> grid = cfg.pfa_grid.empty() ? log_pfa_grid(-3.0, 0.0, 61)
                                                  : cfg.pfa_grid;
  for (double p : grid)
    if (!(p > 0.0 && p <= 1.0))
      throw std::invalid_argument("roc: pfa grid must lie in (0,1]");

  // Per-trial noise projections: t(c) = c^2 e_ss + 2 c e_sn + e_nn, so one
  // pass over the trials serves every SNR in the list.
  const int trials = cfg.trials;
  std::vector<std::vector<double>> e_nn(recs.size()), e_sn(recs.size());
  for (auto& v : e_nn) v.resize(trials);
  for (auto& v : e_sn) v.resize(trials);
  const RngStream stream(cfg.seed);
  parallel_trials(trials, cfg.workers, [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      std::mt19937_64 gen = stream.substream(static_cast<std::uint64_t>(i));
      const Eigen::MatrixXd noise_w = to_white(sample_noise(cfg.noise, d, K, gen));
      for (std::size_t r = 0; r < recs.size(); ++r) {
        const Eigen::MatrixXd pn = noise_w * recs[r].proj.transpose();
        e_nn[r][i] = pn.squaredNorm();
        e_sn[r][i] = recs[r].ps.cwiseProduct(pn).sum();
      }
    }
  });

  RocExperimentResult result;
  for (std::size_t r = 0; r < recs.size(); ++r) {
    for (double snr : cfg.snr_db) {
      const double c =
          std::sqrt(d * K * sigma2 * std::pow(10.0, snr / 10.0) / raw_energy);
      RocCurveData curve;
      curve.order = recs[r].order;
      curve.kind = recs[r].kind;
      curve.snr_db = snr;
      curve.nu = recs[r].nu;
      curve.lambda = c * c * recs[r].e_ss;
      curve.pfa = grid;
      const ChiSquaredSpec h0{curve.nu, 0.0};
      const ChiSquaredSpec h1{curve.nu, curve.lambda};
      curve.pd_analytic.reserve(grid.size());
      for (double p : grid)
        curve.pd_analytic.push_back(
            p >= 1.0 ? 1.0 : chi2_ccdf(h1, chi2_ccdf_inverse(h0, p)));
      curve.auc_analytic = roc_auc(h1);
      std::vector<double> t1(trials);
      for (int i = 0; i < trials; ++i)
        t1[i] = c * c * recs[r].e_ss + 2.0 * c * e_sn[r][i] + e_nn[r][i];
      curve.pd_empirical = empirical_pd(e_nn[r], t1, grid);
      curve.auc_empirical = empirical_auc(e_nn[r], t1);
      result.curves.push_back(std::move(curve));
    }
  }

  if (!cfg.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    nlohmann::json manifest = describe_config(cfg, sigma2);
    manifest["pfa_grid"] = grid;
    nlohmann::json jcurves = nlohmann::json::array();
    for (const RocCurveData& c : result.curves) {
      char name[128];
      std::snprintf(name, sizeof name, "roc_%s%d_%gdB.csv", to_string(c.kind).c_str(),
                    c.order, c.snr_db);
      const std::string path = (fs::path(cfg.out_dir) / name).string();
      write_curve_csv(path, c);
      result.files.push_back(path);
      jcurves.push_back({{"file", name},
                         {"order", c.order},
                         {"basis", to_string(c.kind)},
                         {"snr_db", c.snr_db},
                         {"nu", c.nu},
                         {"lambda", c.lambda},
                         {"auc_analytic", c.auc_analytic},
                         {"auc_empirical", c.auc_empirical}});
    }
    manifest["curves"] = std::move(jcurves);
    char content_id[32];
    std::snprintf(content_id, sizeof content_id, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(manifest.dump())));
    manifest["content_id"] = content_id;
    const std::string mpath = (fs::path(cfg.out_dir) / "roc_manifest.json").string();
    std::ofstream mout(mpath);
    if (!mout) throw std::runtime_error("cannot write " + mpath);
    mout << manifest.dump(2) << '\n';
    if (!mout.flush()) throw std::runtime_error("write failed: " + mpath);
    result.files.push_back(mpath);
  }
  return result;
}

SelectionExperiment run_selection_experiment(const Scenario& sc,
                                             const CriterionSpec& spec,
                                             double snr_db, double sigma2,
                                             int trials, const RngStream& stream,
                                             int workers) {
  if (trials < 1) throw std::invalid_argument("selection: trials must be >= 1");
  if (spec.max_order < 1) throw std::invalid_argument("selection: bad max_order");
  const TrajectoryGeometry& geom = sc.geometry;
  geom.validate();
  const int d = geom.d();
  const int K = geom.K;
  const SampledSignal s =
      scale_to_snr(signal_on_trajectory(sc.sources, geom), snr_db, sigma2);

  std::vector<SampledBasisMatrix> bases;
  for (int M = 1; M <= spec.max_order; ++M)
    bases.push_back(sample_basis(BasisKind::MobfGgs, M, K, geom.R));

  // Same argmax/tie rule as select_order, with the per-order bases hoisted
  // out of the trial loop.
  const auto pick = [&](const Eigen::MatrixXd& x) {
    Observation obs{x, -1};
    int best = 1;
    double best_value = 0.0;
    for (int M = 1; M <= spec.max_order; ++M) {
      const double value = criterion_value(obs, bases[M - 1], spec, sigma2);
      if (M == 1 || value > best_value) {
        best_value = value;
        best = M;
      }
    }
    return best;
  };

  std::vector<int> pick0(trials), pick1(trials);
  const NoiseModel model = WhiteNoise{sigma2};
  parallel_trials(trials, workers, [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      std::mt19937_64 gen = stream.substream(static_cast<std::uint64_t>(i));
      const Eigen::MatrixXd noise = sample_noise(model, d, K, gen);
      pick0[i] = pick(noise);
      pick1[i] = pick(s.values + noise);
    }
  });

  SelectionExperiment out;
  out.trials = trials;
  out.frequency = Eigen::MatrixXd::Zero(spec.max_order, 2);
  for (int i = 0; i < trials; ++i) {
    out.frequency(pick0[i] - 1, 0) += 1.0;
    out.frequency(pick1[i] - 1, 1) += 1.0;
  }
  out.frequency /= static_cast<double>(trials);
  return out;
}

std::vector<Scenario> run_random_source_batch(int L, int count,
                                              const RngStream& stream,
                                              const TrajectoryGeometry& geometry) {
  if (L < 1) throw std::invalid_argument("random_source_batch: L must be >= 1");
  if (count < 0) throw std::invalid_argument("random_source_batch: bad count");
  geometry.validate();
  std::vector<Scenario> out;
  out.reserve(count);
  for (int j = 0; j < count; ++j) {
    std::mt19937_64 gen = stream.substream(static_cast<std::uint64_t>(j));
    std::normal_distribution<double> n01(0.0, 1.0);
    Scenario sc;
    sc.geometry = geometry;
    for (int l = 1; l <= L; ++l) {
      std::vector<double> a(l + 1), b(l);
      for (double& v : a) v = n01(gen);
      for (double& v : b) v = n01(gen);
      sc.sources.emplace_back(HarmonicCoefficients(l, std::move(a), std::move(b)));
    }
    std::uniform_real_distribution<double> half_pi(-std::asin(1.0), std::asin(1.0));
    sc.geometry.beta = half_pi(gen);
    out.push_back(std::move(sc));
  }
  return out;
}

}  // namespace madkit
