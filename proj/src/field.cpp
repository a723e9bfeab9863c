#include "madkit/field.hpp"
#include "madkit/mobf.hpp"

#include <cmath>
#include <stdexcept>

namespace madkit {

namespace {

int pow3(int l) {
  int r = 1;
  for (int i = 0; i < l; ++i) r *= 3;
  return r;
}

/// Plain associated Legendre P_l^m(x) factored as s^m W_{l,m}(x), s = sqrt(1-x^2).
/// Returns W and dW/dx, both polynomial in x and pole-safe.
struct LegendreW {
  double w;
  double dw;
};

LegendreW legendre_w(int l, int m, double x) {
  // W_{m,m} = (2m-1)!!
  double wmm = 1.0;
  for (int i = 3; i <= 2 * m - 1; i += 2) wmm *= i;
  if (l == m) return {wmm, 0.0};

  // W_{m+1,m} = (2m+1) x W_{m,m}
  double wprev = wmm, dwprev = 0.0;
  double w = (2 * m + 1) * x * wmm;
  double dw = (2 * m + 1) * wmm;
  for (int k = m + 2; k <= l; ++k) {
    const double a = 2.0 * k - 1.0, b = k + m - 1.0, c = k - m;
    const double wn = (a * x * w - b * wprev) / c;
    const double dwn = (a * (w + x * dw) - b * dwprev) / c;
    wprev = w;
    dwprev = dw;
    w = wn;
    dw = dwn;
  }
  return {w, dw};
}

struct SphericalTerms {
  double radial;     ///< sum_m (a cos + b sin) P_l^m          -> B_r
  double colatitude; ///< sum_m (a cos + b sin) dP_l^m/dtheta  -> B_theta
  double azimuthal;  ///< sum_m m (-a sin + b cos) P_l^m/sin   -> B_phi
};

SphericalTerms angular_sums(const HarmonicCoefficients& src, double x, double s,
                            double phi) {
  SphericalTerms t{0.0, 0.0, 0.0};
  const int l = src.l;
  for (int m = 0; m <= l; ++m) {
    const auto [w, dw] = legendre_w(l, m, x);
    const double ca = std::cos(m * phi), sa = std::sin(m * phi);
    const double amp = src.a[m] * ca + (m > 0 ? src.b[m - 1] * sa : 0.0);
    const double p = std::pow(s, m) * w;
    t.radial += amp * p;
    if (m == 0) {
      t.colatitude += amp * (-s * dw);
    } else {
      const double sm1 = std::pow(s, m - 1);
      t.colatitude += amp * (m * x * sm1 * w - sm1 * s * s * dw);
      t.azimuthal += m * (-src.a[m] * sa + src.b[m - 1] * ca) * sm1 * w;
    }
  }
  return t;
}

}  // namespace

HarmonicCoefficients::HarmonicCoefficients(int order, std::vector<double> a_in,
                                           std::vector<double> b_in)
    : l(order), a(std::move(a_in)), b(std::move(b_in)) {
  if (l < 1) throw std::invalid_argument("harmonics: order l must be >= 1");
  if (a.size() != static_cast<size_t>(l + 1) || b.size() != static_cast<size_t>(l))
    throw std::invalid_argument("harmonics: need l+1 cosine and l sine coefficients");
}

MultipoleTensor::MultipoleTensor(int order, std::vector<double> components)
    : l_(order), c_(std::move(components)) {
  if (l_ < 1) throw std::invalid_argument("tensor: order must be >= 1");
  if (c_.size() != static_cast<size_t>(pow3(l_)))
    throw std::invalid_argument("tensor: expected 3^l components");

  double scale = 0.0;
  for (double v : c_) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return;
  const double tol = 1e-12 * scale;

  const int total = pow3(l_);
  std::vector<int> idx(l_);
  for (int flat = 0; flat < total; ++flat) {
    int rem = flat;
    for (int j = l_ - 1; j >= 0; --j) {
      idx[j] = rem % 3;
      rem /= 3;
    }
    // symmetry under adjacent transpositions (they generate every permutation)
    for (int j = 0; j + 1 < l_; ++j) {
      int swapped = 0;
      for (int p = 0; p < l_; ++p) {
        const int comp = (p == j) ? idx[j + 1] : (p == j + 1) ? idx[j] : idx[p];
        swapped = swapped * 3 + comp;
      }
      if (std::abs(c_[flat] - c_[swapped]) > tol)
        throw std::invalid_argument("tensor: not symmetric under index permutation");
    }
  }

  // traceless: contraction over the first index pair (symmetry covers the rest)
  if (l_ >= 2) {
    const int rest = pow3(l_ - 2);
    for (int tail = 0; tail < rest; ++tail) {
      double tr = 0.0;
      for (int t = 0; t < 3; ++t) tr += c_[(t * 3 + t) * rest + tail];
      if (std::abs(tr) > tol)
        throw std::invalid_argument("tensor: contraction over an index pair is nonzero");
    }
  }
}

MultipoleTensor MultipoleTensor::quadrupole(const Eigen::Matrix3d& m) {
  std::vector<double> c(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c[i * 3 + j] = m(i, j);
  return MultipoleTensor(2, std::move(c));
}

double MultipoleTensor::at(const std::vector<int>& idx) const {
  if (idx.size() != static_cast<size_t>(l_))
    throw std::invalid_argument("tensor: index rank mismatch");
  int flat = 0;
  for (int i : idx) {
    if (i < 0 || i > 2) throw std::out_of_range("tensor: index component outside 0..2");
    flat = flat * 3 + i;
  }
  return c_[flat];
}

int source_order(const MultipoleSource& src) {
  return std::visit([](const auto& s) {
    if constexpr (std::is_same_v<std::decay_t<decltype(s)>, HarmonicCoefficients>)
      return s.l;
    else
      return s.order();
  }, src);
}

TrajectoryGeometry::TrajectoryGeometry(double V_, double D_, double t0_, double beta_,
                                       Eigen::MatrixXd Pi_, int K_, double R_)
    : V(V_), D(D_), t0(t0_), beta(beta_), Pi(std::move(Pi_)), K(K_), R(R_) {
  validate();
}

void TrajectoryGeometry::validate() const {
  if (!(D > 0.0)) throw std::invalid_argument("geometry: D must be positive");
  if (!(V > 0.0)) throw std::invalid_argument("geometry: V must be positive");
  if (K < 2) throw std::invalid_argument("geometry: need at least two samples");
  if (!(R > 0.0)) throw std::invalid_argument("geometry: window width must be positive");
  if (Pi.cols() != 3 || Pi.rows() < 1 || Pi.rows() > 3)
    throw std::invalid_argument("geometry: Pi must be d x 3 with d in 1..3");
}

Eigen::VectorXd TrajectoryGeometry::grid() const { return sample_grid(K, R); }

Eigen::Vector3d TrajectoryGeometry::point(double u) const {
  return {D * u, -D * std::sin(beta), D * std::cos(beta)};
}

double potential_order_l(const HarmonicCoefficients& src, double r, double theta,
                         double phi, double mu0_over_4pi) {
  if (!(r > 0.0)) throw std::domain_error("potential: r must be positive");
  const double x = std::cos(theta), s = std::sin(theta);
  double sum = 0.0;
  for (int m = 0; m <= src.l; ++m) {
    const double p = std::pow(s, m) * legendre_w(src.l, m, x).w;
    sum += (src.a[m] * std::cos(m * phi) + (m > 0 ? src.b[m - 1] * std::sin(m * phi) : 0.0)) * p;
  }
  return mu0_over_4pi * std::pow(r, -src.l - 1) * sum;
}

Eigen::Vector3d field_from_harmonics(const HarmonicCoefficients& src,
                                     const Eigen::Vector3d& point,
                                     double mu0_over_4pi) {
  const double r = point.norm();
  if (!(r > 0.0)) throw std::domain_error("field: point must be away from the origin");
  const double x = point.z() / r;
  const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
  const double phi = std::atan2(point.y(), point.x());

  const SphericalTerms t = angular_sums(src, x, s, phi);
  const double radial_scale = mu0_over_4pi * std::pow(r, -src.l - 2.0);
  const double br = (src.l + 1) * radial_scale * t.radial;
  const double bt = -radial_scale * t.colatitude;
  const double bp = -radial_scale * t.azimuthal;

  const double cp = std::cos(phi), sp = std::sin(phi);
  const Eigen::Vector3d er{s * cp, s * sp, x};
  const Eigen::Vector3d et{x * cp, x * sp, -s};
  const Eigen::Vector3d ep{-sp, cp, 0.0};
  return br * er + bt * et + bp * ep;
}

Eigen::Vector3d radial_moment(const MultipoleTensor& t, const Eigen::Vector3d& r_vec) {
  const double r = r_vec.norm();
  if (!(r > 0.0)) throw std::domain_error("radial_moment: direction must be nonzero");
  const Eigen::Vector3d u = r_vec / r;

  const int l = t.order();
  double lfact = 1.0;
  for (int i = 2; i <= l; ++i) lfact *= i;

  Eigen::Vector3d m = Eigen::Vector3d::Zero();
  const int total = pow3(l);
  const auto& c = t.components();
  for (int flat = 0; flat < total; ++flat) {
    double w = 1.0;
    int rem = flat;
    for (int j = l - 1; j >= 1; --j) {  // contract trailing l-1 indices with u
      w *= u[rem % 3];
      rem /= 3;
    }
    m[rem] += c[flat] * w;
  }
  return m / lfact;
}

Eigen::Vector3d field_from_tensor(const MultipoleTensor& t, const Eigen::Vector3d& point,
                                  double mu0_over_4pi) {
  const double r = point.norm();
  if (!(r > 0.0)) throw std::domain_error("field: point must be away from the origin");
  const int l = t.order();
  const Eigen::Vector3d m = radial_moment(t, point);
  const Eigen::Vector3d num =
      (2 * l + 1) * point.dot(m) * point - l * r * r * m;
  return mu0_over_4pi * num / std::pow(r, l + 4.0);
}

Eigen::Vector3d total_field(const std::vector<MultipoleSource>& srcs,
                            const Eigen::Vector3d& point, double mu0_over_4pi) {
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  std::vector<int> seen;
  for (const auto& src : srcs) {
    const int l = source_order(src);
    for (int prev : seen)
      if (prev == l)
        throw std::invalid_argument("total_field: order " + std::to_string(l) +
                                    " appears more than once");
    seen.push_back(l);
    b += std::visit([&](const auto& s) -> Eigen::Vector3d {
      if constexpr (std::is_same_v<std::decay_t<decltype(s)>, HarmonicCoefficients>)
        return field_from_harmonics(s, point, mu0_over_4pi);
      else
        return field_from_tensor(s, point, mu0_over_4pi);
    }, src);
  }
  return b;
}

SampledSignal signal_on_trajectory(const std::vector<MultipoleSource>& srcs,
                                   const TrajectoryGeometry& geom,
                                   double mu0_over_4pi) {
  geom.validate();
  const Eigen::VectorXd u = geom.grid();
  SampledSignal sig;
  sig.geometry = geom;
  sig.values.resize(geom.d(), geom.K);
  for (int k = 0; k < geom.K; ++k)
    sig.values.col(k) = geom.Pi * total_field(srcs, geom.point(u[k]), mu0_over_4pi);
  return sig;
}

double f_basis(int L, int n, double u) {
  if (L < 1) throw std::domain_error("f_basis: order must be >= 1");
  if (n < 0 || n > 2 * L) throw std::domain_error("f_basis: degree must be in 0..2L");
  return std::pow(u, n) * std::pow(1.0 + u * u, -(L + 1.5));
}

std::vector<double> subspace_energy_fractions(const SampledSignal& sig, int maxOrder) {
  const double total = sig.values.squaredNorm();
  if (!(total > 0.0)) throw std::domain_error("energy fractions: signal is zero");
  std::vector<double> out;
  out.reserve(maxOrder);
  for (int j = 1; j <= maxOrder; ++j) {
    const SampledBasisMatrix g =
        sample_basis(BasisKind::MobfGgs, j, sig.geometry.K, sig.geometry.R);
    out.push_back((sig.values * g.rows.transpose()).squaredNorm() / total);
  }
  return out;
}

}  // namespace madkit
