#include "madkit/mobf.hpp"
#include "madkit/field.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace madkit {

namespace {

using BigInt = boost::multiprecision::cpp_int;

constexpr int kMaxOrder = 8;  // factorials reach (4N+5)!; exact arithmetic keeps this safe

BigInt factorial(int k) {
  BigInt r = 1;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

BigInt binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  BigInt r = 1;
  for (int i = 0; i < k; ++i) {
    r *= (n - i);
    r /= (i + 1);
  }
  return r;
}

void check_family(int N, int n) {
  if (N < 1 || N > kMaxOrder)
    throw std::domain_error("mobf: order N must be in 1.." + std::to_string(kMaxOrder));
  if (n < 0 || n > 2 * N)
    throw std::domain_error("mobf: degree n must be in 0..2N (weight moments end there)");
}

// d_{N,n,k} = (-1)^{n-k} n! (2N+2-k)! / ((2N+2-n)! k! (n-2k)!)
BigInt rodrigues_term(int N, int n, int k) {
  BigInt v = factorial(n) * factorial(2 * N + 2 - k);
  v /= factorial(2 * N + 2 - n) * factorial(k) * factorial(n - 2 * k);
  if ((n - k) % 2 != 0) v = -v;
  return v;
}

}  // namespace

MobfPolynomial mobf_polynomial(int N, int n) {
  check_family(N, n);
  MobfPolynomial p;
  p.N = N;
  p.n = n;
  p.coeff.assign(n + 1, 0.0);

  // expand sum_k d_{N,n,k} (1+u^2)^k (2u)^{n-2k} into monomials, exactly
  std::vector<BigInt> mono(n + 1, 0);
  for (int k = 0; k <= n / 2; ++k) {
    const BigInt d = rodrigues_term(N, n, k);
    const BigInt pow2 = BigInt(1) << (n - 2 * k);
    for (int j = 0; j <= k; ++j) mono[n - 2 * k + 2 * j] += d * binomial(k, j) * pow2;
    p.rodrigues.push_back(d.convert_to<long long>());  // exact: |d| < 2^63 for N <= 8
  }
  for (int m = 0; m <= n; ++m) p.coeff[m] = mono[m].convert_to<double>();

  // c^2 = 4^{2N+2-n} (4N+5-2n) ((2N+2-n)!)^2 / (pi n! (4N+5-n)!)
  BigInt num = (BigInt(1) << (2 * (2 * N + 2 - n))) * (4 * N + 5 - 2 * n);
  num *= factorial(2 * N + 2 - n) * factorial(2 * N + 2 - n);
  BigInt den = factorial(n) * factorial(4 * N + 5 - n);
  const double c2 = num.convert_to<double>() / den.convert_to<double>() / std::numbers::pi;
  p.norm = std::sqrt(c2);
  return p;
}

double mobf_norm_squared(int N, int n) {
  const MobfPolynomial p = mobf_polynomial(N, n);
  return p.norm * p.norm;
}

double mobf_eval(const MobfPolynomial& p, double u) {
  double poly = 0.0;
  for (int m = p.n; m >= 0; --m) poly = poly * u + p.coeff[m];
  return p.norm * poly * std::pow(1.0 + u * u, -(p.N + 1.5));
}

double mobf_eval(int N, int n, double u) { return mobf_eval(mobf_polynomial(N, n), u); }

double mobf_eval_gegenbauer(int N, int n, double u) {
  check_family(N, n);
  const double alpha = 2 * N - n + 3;
  const double x = u / std::sqrt(1.0 + u * u);

  double cm1 = 1.0;  // C_0
  double c = 2.0 * alpha * x;  // C_1
  if (n == 0) c = cm1;
  for (int k = 2; k <= n; ++k) {
    const double next = (2.0 * (k + alpha - 1.0) * x * c - (k + 2.0 * alpha - 2.0) * cm1) / k;
    cm1 = c;
    c = next;
  }

  double fact = 1.0;
  for (int i = 2; i <= n; ++i) fact *= i;
  const double sign = (n % 2 == 0) ? 1.0 : -1.0;
  const MobfPolynomial p = mobf_polynomial(N, n);
  return p.norm * sign * fact * std::pow(1.0 + u * u, 0.5 * (n - 3) - N) * c;
}

double mobf_dominant_coefficient(int N, int n) {
  const MobfPolynomial p = mobf_polynomial(N, n);
  return p.norm * p.coeff[n];
}

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::RawF: return "F";
    case BasisKind::MobfG: return "G";
    case BasisKind::RawFgs: return "Fgs";
    case BasisKind::MobfGgs: return "Ggs";
  }
  return "?";
}

Eigen::VectorXd sample_grid(int K, double R) {
  Eigen::VectorXd u(K);
  for (int k = 0; k < K; ++k) u[k] = -0.5 * R + k * R / (K - 1);
  return u;
}

SampledBasisMatrix sample_basis(BasisKind kind, int N, int K, double R) {
  check_family(N, 0);
  if (K <= 2 * N + 1)
    throw std::invalid_argument("sample_basis: need K > 2N+1 samples for full row rank");
  if (R <= 0.0) throw std::invalid_argument("sample_basis: window width must be positive");

  const Eigen::VectorXd u = sample_grid(K, R);
  const double scale = std::sqrt(R / (K - 1));
  SampledBasisMatrix out;
  out.kind = kind;
  out.N = N;
  out.K = K;
  out.R = R;
  out.rows.resize(2 * N + 1, K);

  const bool raw = (kind == BasisKind::RawF || kind == BasisKind::RawFgs);
  for (int n = 0; n <= 2 * N; ++n) {
    if (raw) {
      for (int k = 0; k < K; ++k) out.rows(n, k) = scale * f_basis(N, n, u[k]);
    } else {
      const MobfPolynomial p = mobf_polynomial(N, n);
      for (int k = 0; k < K; ++k) out.rows(n, k) = scale * mobf_eval(p, u[k]);
    }
  }

  if (kind == BasisKind::RawFgs) {
    out.rows = gram_schmidt(out.rows);
    // align signs with the analytical convention: the leading polynomial
    // coefficient of row n carries sign (-1)^n, while MGS leaves it positive
    for (int n = 1; n <= 2 * N; n += 2) out.rows.row(n) *= -1.0;
  } else if (kind == BasisKind::MobfGgs) {
    out.rows = gram_schmidt(out.rows);
  }
  return out;
}

double orthonormality_error(const Eigen::MatrixXd& rows) {
  const Eigen::MatrixXd gram = rows * rows.transpose();
  const Eigen::MatrixXd dev =
      gram - Eigen::MatrixXd::Identity(rows.rows(), rows.rows());
  return dev.norm() / std::sqrt(static_cast<double>(rows.rows()));
}

double orthonormality_error(const SampledBasisMatrix& basis) {
  return orthonormality_error(basis.rows);
}

Eigen::MatrixXd gram_schmidt(const Eigen::MatrixXd& rows) {
  Eigen::MatrixXd q = rows;
  const auto r = q.rows();
  for (Eigen::Index i = 0; i < r; ++i) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < i; ++j) {
        const double proj = q.row(i).dot(q.row(j));
        q.row(i) -= proj * q.row(j);
      }
    }
    const double nrm = q.row(i).norm();
    if (!(nrm > 1e-13 * rows.row(i).norm()))
      throw std::runtime_error("gram_schmidt: rank-deficient input at row " + std::to_string(i));
    q.row(i) /= nrm;
  }
  return q;
}

}  // namespace madkit
