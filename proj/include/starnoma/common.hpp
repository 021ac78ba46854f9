#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace starnoma {

using cxd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ContractViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DecompositionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IterativeFailure : std::runtime_error {
  std::vector<double> residual_history;
  explicit IterativeFailure(const std::string& what, std::vector<double> hist = {})
      : std::runtime_error(what), residual_history(std::move(hist)) {}
};
struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double hermitian_defect(const Mat& a) {
  return (a - a.adjoint()).norm() / std::max(1.0, a.norm());
}

inline void require_hermitian(const Mat& a, double tol, const char* who) {
  if (a.rows() != a.cols())
    throw ContractViolation(std::string(who) + ": matrix not square");
  if (hermitian_defect(a) > tol)
    throw ContractViolation(std::string(who) + ": input not Hermitian within tolerance");
}

// splitmix64, used to derive independent per-trial seeds from (seed, index).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Entries i.i.d. CN(0, var): two real normals scaled by sqrt(var/2).
inline Mat complex_gaussian(int rows, int cols, double var, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  const double s = std::sqrt(var / 2.0);
  Mat x(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) x(i, j) = cxd(s * n01(rng), s * n01(rng));
  return x;
}

// Haar-ish unitary via QR of a Gaussian matrix with phase-fixed R diagonal.
inline Mat random_unitary(int n, std::mt19937_64& rng) {
  Mat g = complex_gaussian(n, n, 1.0, rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) {
    cxd d = r(i, i);
    q.col(i) *= (std::abs(d) > 0) ? d / std::abs(d) : cxd(1, 0);
  }
  return q;
}

inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline double pairwise_sum(const std::vector<double>& x) {
  return x.empty() ? 0.0 : pairwise_sum(x.data(), x.size());
}

}  // namespace starnoma
