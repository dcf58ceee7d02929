#pragma once

// Helpers shared by the test binaries: random inputs and data matrices whose
// sample covariance has an exactly prescribed spectrum.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "rankselect/spectra.hpp"

namespace testsupport {

using rankselect::Matrix;
using rankselect::Vector;

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = nd(rng);
  return m;
}

/// Random p x k matrix with orthonormal columns.
inline Matrix random_orthonormal(Eigen::Index p, Eigen::Index k, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(p, k, rng));
  return qr.householderQ() * Matrix::Identity(p, k);
}

/// Strictly descending positive spectrum of length p.
inline Vector random_spectrum(int p, std::mt19937_64& rng, double spread = 5.0) {
  std::uniform_real_distribution<double> u(0.05, spread);
  Vector v(p);
  for (int i = 0; i < p; ++i) v[i] = u(rng);
  std::sort(v.data(), v.data() + p, std::greater<>());
  for (int i = 1; i < p; ++i) {
    if (!(v[i] < v[i - 1])) v[i] = std::nextafter(v[i - 1], 0.0);
  }
  return v;
}

/// n x p data whose divisor-n sample covariance is V diag(spectrum) V^T for a
/// random orthogonal V (or the identity when `rotate` is false).
inline Matrix data_with_spectrum(int n, const Vector& spectrum, std::mt19937_64& rng,
                                 bool rotate = true) {
  const auto p = spectrum.size();
  Matrix z = gaussian_matrix(n, p, rng);
  z.rowwise() -= z.colwise().mean();
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ() * Matrix::Identity(n, p);  // centered, orthonormal columns
  Matrix x = std::sqrt(static_cast<double>(n)) * q * spectrum.cwiseSqrt().asDiagonal();
  if (rotate) x = x * random_orthonormal(p, p, rng).transpose();
  return x;
}

inline void write_matrix_csv(const std::filesystem::path& path, const Matrix& m,
                             bool header = false) {
  std::ofstream out(path);
  out.precision(17);
  if (header) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << "x" << j;
    out << "\n";
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << "\n";
  }
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::uint64_t counter = 0;
  std::random_device rd;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("rankselect_" + tag + "_" + std::to_string(rd()) + "_" +
                    std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsupport
