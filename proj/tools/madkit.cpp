// madkit: command-line front end for basis inspection, signal synthesis,
// detection, ROC experiments, critical-alpha sweeps, order-zone maps, and
// order-selection simulations. All numeric output is CSV with '.' decimals.

#include "madkit/harness.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace madkit;
namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

BasisKind parse_kind(const std::string& s) {
  if (s == "F") return BasisKind::RawF;
  if (s == "G") return BasisKind::MobfG;
  if (s == "Fgs") return BasisKind::RawFgs;
  if (s == "Ggs") return BasisKind::MobfGgs;
  throw CLI::ValidationError("--kind", "unknown basis kind '" + s + "' (F, G, Fgs, Ggs)");
}

std::vector<double> parse_list(const std::string& csv, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size())
      throw CLI::ValidationError(what, "cannot parse '" + item + "' as a number");
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError(what, "empty list");
  return out;
}

std::vector<int> parse_int_list(const std::string& csv, const std::string& what) {
  std::vector<int> out;
  for (double v : parse_list(csv, what)) {
    if (v != std::floor(v)) throw CLI::ValidationError(what, "expected integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

/// Stream sink: path inside --out when given, else stdout.
class Sink {
 public:
  Sink(const std::string& out_dir, const std::string& filename) {
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      path_ = (fs::path(out_dir) / filename).string();
      file_.open(path_);
      if (!file_) throw std::runtime_error("cannot write " + path_);
    }
  }
  std::ostream& stream() { return path_.empty() ? std::cout : file_; }
  void finish() {
    if (path_.empty()) return;
    if (!file_.flush()) throw std::runtime_error("write failed: " + path_);
    std::cout << "wrote " << path_ << "\n";
  }

 private:
  std::string path_;
  std::ofstream file_;
};

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << fmt(m(i, j));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size())
        throw std::runtime_error(path + ": cannot parse cell '" + cell + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path + ": ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": empty matrix");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

int run_basis(const std::string& kind_str, int order, int K, double R,
              const std::string& out_dir) {
  const BasisKind kind = parse_kind(kind_str);
  const SampledBasisMatrix basis = sample_basis(kind, order, K, R);
  Sink sink(out_dir, "basis_" + kind_str + std::to_string(order) + ".csv");
  write_matrix_csv(sink.stream(), basis.rows);
  sink.finish();
  std::cout << "epsilon(" << kind_str << "_" << order
            << ") = " << fmt(orthonormality_error(basis)) << "\n";
  return 0;
}

int run_simulate(const std::string& config, std::optional<double> snr, double sigma2,
                 bool with_noise, std::uint64_t seed, const std::string& out_dir) {
  const Scenario sc = load_scenario(config);
  SampledSignal sig = signal_on_trajectory(sc.sources, sc.geometry);
  if (snr) sig = scale_to_snr(sig, *snr, sigma2);
  Eigen::MatrixXd values = sig.values;
  if (with_noise) {
    std::mt19937_64 gen = RngStream(seed).substream(0);
    values += sample_noise(WhiteNoise{sigma2}, sc.geometry.d(), sc.geometry.K, gen);
  }
  Sink sink(out_dir, with_noise ? "observation.csv" : "signal.csv");
  write_matrix_csv(sink.stream(), values);
  sink.finish();
  std::cout << "energy = " << fmt(values.squaredNorm()) << "\n";
  return 0;
}

int run_detect(const std::vector<std::string>& inputs, int order,
               const std::string& kind_str, double R, double sigma2,
               std::optional<double> eta, std::optional<double> pfa,
               const std::string& out_dir) {
  if (eta.has_value() == pfa.has_value())
    throw CLI::ValidationError("detect", "give exactly one of --eta or --pfa");
  const BasisKind kind = parse_kind(kind_str);
  Sink sink(out_dir, "detections.csv");
  sink.stream() << "file,statistic,scaled_statistic,scaled_threshold,decision\n";
  for (const std::string& path : inputs) {
    const Eigen::MatrixXd x = read_matrix_csv(path);
    const int d = static_cast<int>(x.rows());
    const SampledBasisMatrix basis =
        sample_basis(kind, order, static_cast<int>(x.cols()), R);
    const double t = detection_statistic(Observation{x, -1}, basis);
    const double scaled = t / sigma2;
    const double threshold =
        eta ? *eta : threshold_for_pfa(d * (2 * order + 1), *pfa);
    const Decision dec = decide(scaled, threshold);
    sink.stream() << path << ',' << fmt(t) << ',' << fmt(scaled) << ','
                  << fmt(threshold) << ',' << (dec == Decision::H1 ? "H1" : "H0")
                  << '\n';
  }
  sink.finish();
  return 0;
}

int run_roc_cmd(const std::string& config, const std::string& orders_csv,
                const std::string& kinds_csv, const std::string& snr_csv,
                double sigma2, int trials, std::uint64_t seed, int workers,
                const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.scenario = load_scenario(config);
  cfg.receiver_orders = parse_int_list(orders_csv, "--orders");
  cfg.bases.clear();
  std::stringstream ss(kinds_csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) cfg.bases.push_back(parse_kind(item));
  if (cfg.bases.empty()) throw CLI::ValidationError("--kinds", "empty list");
  cfg.noise = WhiteNoise{sigma2};
  cfg.snr_db = parse_list(snr_csv, "--snr");
  cfg.trials = trials;
  cfg.seed = seed;
  cfg.workers = workers;
  cfg.out_dir = out_dir;
  const RocExperimentResult res = run_roc_experiment(cfg);
  std::cout << "order,basis,snr_db,nu,lambda,auc_analytic,auc_empirical\n";
  for (const RocCurveData& c : res.curves)
    std::cout << c.order << ',' << to_string(c.kind) << ',' << fmt(c.snr_db) << ','
              << c.nu << ',' << fmt(c.lambda) << ',' << fmt(c.auc_analytic) << ','
              << fmt(c.auc_empirical) << '\n';
  for (const std::string& f : res.files) std::cout << "wrote " << f << "\n";
  return 0;
}

int run_critical_alpha(int N, int d, int K, double pfa, const std::string& snr_csv,
                       bool criteria, const std::string& out_dir) {
  const std::vector<double> snrs = parse_list(snr_csv, "--snr");
  Sink sink(out_dir, "critical_alpha.csv");
  std::ostream& out = sink.stream();
  out << "snr_db,lambda,alpha_c";
  if (criteria) out << ",alpha_aic,alpha_bar_aic,alpha_bic,alpha_bar_bic";
  out << '\n';
  const CriterionSpec aic = aic_criterion(d);
  const CriterionSpec bic = bic_criterion(d, K);
  for (double snr : snrs) {
    const double lambda = d * K * std::pow(10.0, snr / 10.0);
    out << fmt(snr) << ',' << fmt(lambda) << ','
        << fmt(critical_alpha(N, d, pfa, lambda));
    if (criteria) {
      const auto write_opt = [&out](std::optional<double> v) {
        out << ',';
        if (v) out << fmt(*v);
      };
      write_opt(criterion_critical_alpha(N, d, lambda, aic));
      out << ',' << fmt(average_critical_alpha(N, d, lambda, aic));
      write_opt(criterion_critical_alpha(N, d, lambda, bic));
      out << ',' << fmt(average_critical_alpha(N, d, lambda, bic));
    }
    out << '\n';
  }
  sink.finish();
  return 0;
}

int run_zones(double pfa, double snr, int d, int K, int cells,
              const std::string& out_dir) {
  const OptimalOrderMap map = optimal_order_map(pfa, snr, d, K, cells);
  Sink sink(out_dir, "zones.csv");
  std::ostream& out = sink.stream();
  out << "alpha_increment\\alpha_dipole";
  for (Eigen::Index j = 0; j < map.alpha_dipole.size(); ++j)
    out << ',' << fmt(map.alpha_dipole[j]);
  out << '\n';
  for (Eigen::Index i = 0; i < map.alpha_increment.size(); ++i) {
    out << fmt(map.alpha_increment[i]);
    for (Eigen::Index j = 0; j < map.alpha_dipole.size(); ++j)
      out << ',' << map.order(i, j);
    out << '\n';
  }
  sink.finish();
  return 0;
}

int run_select(const std::string& config, const std::string& criterion, double snr,
               double sigma2, int trials, std::uint64_t seed, int workers,
               const std::string& out_dir) {
  const Scenario sc = load_scenario(config);
  const int d = sc.geometry.d();
  CriterionSpec spec;
  if (criterion == "aic")
    spec = aic_criterion(d);
  else if (criterion == "bic")
    spec = bic_criterion(d, sc.geometry.K);
  else
    throw CLI::ValidationError("--criterion", "expected aic or bic");
  const SelectionExperiment res = run_selection_experiment(
      sc, spec, snr, sigma2, trials, RngStream(seed), workers);
  Sink sink(out_dir, "selection_" + criterion + ".csv");
  sink.stream() << "order,freq_h0,freq_h1\n";
  for (int M = 1; M <= spec.max_order; ++M)
    sink.stream() << M << ',' << fmt(res.frequency(M - 1, 0)) << ','
                  << fmt(res.frequency(M - 1, 1)) << '\n';
  sink.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multipolar magnetic-anomaly detection toolkit"};
  app.require_subcommand(1);

  std::string out_dir, config, kind = "Ggs", kinds = "Ggs", orders = "1,2,3,4";
  std::string snr_list = "-22", criterion = "aic";
  int order = 2, K = 1001, d = 3, cells = 101, trials = 10000, workers = 0;
  double R = 20.0, sigma2 = 1.0, pfa = 1e-2, snr = -22.0;
  std::uint64_t seed = 1;
  std::optional<double> snr_opt, eta_opt, pfa_opt;
  bool with_noise = false, criteria = false;
  std::vector<std::string> inputs;

  CLI::App* basis = app.add_subcommand("basis", "sample a basis matrix, report epsilon");
  basis->add_option("--kind", kind, "F | G | Fgs | Ggs")->capture_default_str();
  basis->add_option("--order", order, "receiver order N")->required();
  basis->add_option("--K", K, "samples")->capture_default_str();
  basis->add_option("--R", R, "window width")->capture_default_str();
  basis->add_option("--out", out_dir, "output directory");

  CLI::App* simulate = app.add_subcommand("simulate", "synthesize a scenario signal");
  simulate->add_option("--config", config, "scenario file")->required();
  simulate->add_option("--snr", snr_opt, "rescale to this SNR (dB)");
  simulate->add_option("--sigma2", sigma2, "noise variance")->capture_default_str();
  simulate->add_flag("--noise", with_noise, "add one white-noise draw");
  simulate->add_option("--seed", seed, "rng seed")->capture_default_str();
  simulate->add_option("--out", out_dir, "output directory");

  CLI::App* detect = app.add_subcommand("detect", "run the energy detector on CSVs");
  detect->add_option("inputs", inputs, "observation CSVs (d rows x K columns)")
      ->required()
      ->expected(-1);
  detect->add_option("--order", order, "receiver order M")->required();
  detect->add_option("--kind", kind, "F | G | Fgs | Ggs")->capture_default_str();
  detect->add_option("--R", R, "window width")->capture_default_str();
  detect->add_option("--sigma2", sigma2, "noise variance")->capture_default_str();
  detect->add_option("--eta", eta_opt, "scaled threshold");
  detect->add_option("--pfa", pfa_opt, "target false-alarm rate");
  detect->add_option("--out", out_dir, "output directory");

  CLI::App* roc = app.add_subcommand("roc", "Monte Carlo + analytic ROC experiment");
  roc->add_option("--config", config, "scenario file")->required();
  roc->add_option("--orders", orders, "receiver orders, comma separated")
      ->capture_default_str();
  roc->add_option("--kinds", kinds, "basis kinds, comma separated")->capture_default_str();
  roc->add_option("--snr", snr_list, "SNR list (dB), comma separated")
      ->capture_default_str();
  roc->add_option("--sigma2", sigma2, "noise variance")->capture_default_str();
  roc->add_option("--trials", trials, "Monte Carlo trials")->capture_default_str();
  roc->add_option("--seed", seed, "rng seed")->capture_default_str();
  roc->add_option("--workers", workers, "worker threads (0 = auto)")
      ->capture_default_str();
  roc->add_option("--out", out_dir, "output directory");

  CLI::App* calpha = app.add_subcommand("critical-alpha",
                                        "critical energy fractions vs SNR");
  calpha->add_option("--N", order, "signal order")->capture_default_str();
  calpha->add_option("--d", d, "channels")->capture_default_str();
  calpha->add_option("--K", K, "samples")->capture_default_str();
  calpha->add_option("--pfa", pfa, "false-alarm rate")->capture_default_str();
  calpha->add_option("--snr", snr_list, "SNR list (dB), comma separated")
      ->capture_default_str();
  calpha->add_flag("--criteria", criteria, "also AIC/BIC critical fractions");
  calpha->add_option("--out", out_dir, "output directory");

  CLI::App* zones = app.add_subcommand("zones", "optimal receiver order map");
  zones->add_option("--pfa", pfa, "false-alarm rate")->capture_default_str();
  zones->add_option("--snr", snr, "SNR (dB)")->capture_default_str();
  zones->add_option("--d", d, "channels")->capture_default_str();
  zones->add_option("--K", K, "samples")->capture_default_str();
  zones->add_option("--cells", cells, "grid cells per axis")->capture_default_str();
  zones->add_option("--out", out_dir, "output directory");

  CLI::App* select = app.add_subcommand("select", "Monte Carlo order selection");
  select->add_option("--config", config, "scenario file")->required();
  select->add_option("--criterion", criterion, "aic | bic")->capture_default_str();
  select->add_option("--snr", snr, "SNR (dB)")->capture_default_str();
  select->add_option("--sigma2", sigma2, "noise variance")->capture_default_str();
  select->add_option("--trials", trials, "Monte Carlo trials")->capture_default_str();
  select->add_option("--seed", seed, "rng seed")->capture_default_str();
  select->add_option("--workers", workers, "worker threads (0 = auto)")
      ->capture_default_str();
  select->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (basis->parsed()) return run_basis(kind, order, K, R, out_dir);
    if (simulate->parsed())
      return run_simulate(config, snr_opt, sigma2, with_noise, seed, out_dir);
    if (detect->parsed())
      return run_detect(inputs, order, kind, R, sigma2, eta_opt, pfa_opt, out_dir);
    if (roc->parsed())
      return run_roc_cmd(config, orders, kinds, snr_list, sigma2, trials, seed,
                         workers, out_dir);
    if (calpha->parsed())
      return run_critical_alpha(order, d, K, pfa, snr_list, criteria, out_dir);
    if (zones->parsed()) return run_zones(pfa, snr, d, K, cells, out_dir);
    if (select->parsed())
      return run_select(config, criterion, snr, sigma2, trials, seed, workers, out_dir);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
