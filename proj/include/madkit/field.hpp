#pragma once

#include <Eigen/Dense>

#include <string>
#include <variant>
#include <vector>

namespace madkit {

/// Spherical-harmonic description of a pure 2^l-polar source.
///
/// The scalar potential is
///   Psi(r, theta, phi) = pref * r^-(l+1) * sum_m (a_m cos m phi + b_m sin m phi) P_l^m(cos theta)
/// with plain (Condon-Shortley-free) associated Legendre functions.
struct HarmonicCoefficients {
  int l = 1;
  std::vector<double> a;  ///< m = 0..l
  std::vector<double> b;  ///< m = 1..l

  HarmonicCoefficients() : a(2, 0.0), b(1, 0.0) {}
  HarmonicCoefficients(int order, std::vector<double> a_in, std::vector<double> b_in);
};

/// Rank-l symmetric traceless tensor of multipole moments; 3^l components,
/// stored row-major (last index fastest).
class MultipoleTensor {
 public:
  MultipoleTensor(int order, std::vector<double> components);
  /// Convenience for quadrupoles: build from a 3x3 matrix.
  static MultipoleTensor quadrupole(const Eigen::Matrix3d& m);

  int order() const { return l_; }
  const std::vector<double>& components() const { return c_; }
  /// Component accessor by multi-index (idx.size() == order()).
  double at(const std::vector<int>& idx) const;

 private:
  int l_;
  std::vector<double> c_;
};

/// One source of a single multipole order, in either parameterization.
using MultipoleSource = std::variant<HarmonicCoefficients, MultipoleTensor>;

int source_order(const MultipoleSource& src);

/// Straight constant-speed pass: at reduced time u the sensor sits at
/// P(u) = (D u, -D sin beta, D cos beta) in source-centered coordinates.
struct TrajectoryGeometry {
  double V = 1.0;     ///< speed (m/s)
  double D = 1.0;     ///< closest-approach distance (m)
  double t0 = 0.0;    ///< closest-approach time (s)
  double beta = 0.0;  ///< angle of the O-CPA segment from vertical (rad)
  Eigen::MatrixXd Pi; ///< d x 3 sensing projection, d in {1,2,3}
  int K = 2;          ///< sample count
  double R = 1.0;     ///< unitless window width; u_k regular on [-R/2, R/2]

  TrajectoryGeometry() : Pi(Eigen::MatrixXd::Identity(3, 3)) {}
  TrajectoryGeometry(double V, double D, double t0, double beta,
                     Eigen::MatrixXd Pi, int K, double R);

  int d() const { return static_cast<int>(Pi.rows()); }
  Eigen::VectorXd grid() const;               ///< the K reduced times u_k
  Eigen::Vector3d point(double u) const;      ///< source-centered position at u
  void validate() const;                      ///< throws std::invalid_argument on bad fields
};

/// Multichannel signal sampled on a trajectory grid: d x K values.
struct SampledSignal {
  Eigen::MatrixXd values;
  TrajectoryGeometry geometry;
};

/// Scalar potential of a single order at spherical point (r, theta, phi).
/// mu0_over_4pi scales the output; pass physical_prefactor() for SI units.
double potential_order_l(const HarmonicCoefficients& src, double r, double theta,
                         double phi, double mu0_over_4pi = 1.0);

constexpr double physical_prefactor() { return 1e-7; }  // mu0/4pi in SI

/// B = -grad Psi for one order, evaluated analytically and returned in
/// Cartesian components. Poles theta in {0, pi} are handled by the
/// regularized m=1 limit.
Eigen::Vector3d field_from_harmonics(const HarmonicCoefficients& src,
                                     const Eigen::Vector3d& point,
                                     double mu0_over_4pi = 1.0);

/// M^(l) = (m^(l) contracted (l-1) times with u_r) / l!
Eigen::Vector3d radial_moment(const MultipoleTensor& t, const Eigen::Vector3d& r_vec);

/// B^(l)(P) = pref * [(2l+1)(r.M) r - l r^2 M] / r^(l+4)
Eigen::Vector3d field_from_tensor(const MultipoleTensor& t, const Eigen::Vector3d& point,
                                  double mu0_over_4pi = 1.0);

/// Sum of the per-order fields. Each order may appear at most once.
Eigen::Vector3d total_field(const std::vector<MultipoleSource>& srcs,
                            const Eigen::Vector3d& point, double mu0_over_4pi = 1.0);

/// Sample Pi * B(P(u_k)) over the trajectory grid.
SampledSignal signal_on_trajectory(const std::vector<MultipoleSource>& srcs,
                                   const TrajectoryGeometry& geom,
                                   double mu0_over_4pi = 1.0);

/// Raw signal-space basis function f_{L,n}(u) = u^n / (1+u^2)^(L+3/2).
double f_basis(int L, int n, double u);

/// Fraction of the signal's Frobenius energy captured by the order-j
/// multipolar subspace, for j = 1..maxOrder. Nondecreasing in j.
std::vector<double> subspace_energy_fractions(const SampledSignal& sig, int maxOrder);

}  // namespace madkit
