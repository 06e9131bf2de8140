#pragma once

#include <algorithm>
#include <cstring>
#include <cmath>
#include <random>
#include <vector>

#include "adgamp/channels.hpp"
#include "adgamp/linop.hpp"

namespace testsupport {

using adgamp::Matrix;
using adgamp::Vector;

inline Matrix randn(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  Matrix a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = d(rng);
  return a;
}

inline Vector randv(Eigen::Index n, std::uint64_t seed, double scale = 1.0) {
  return randn(n, 1, seed, scale).col(0);
}

/// |a - b| <= tol * max(1, |b|)
inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

inline double max_rel_diff(const Vector& a, const Vector& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
  return worst;
}

inline bool bit_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() && std::equal(a.data(), a.data() + a.size(), b.data(), [](double x, double y) {
           return std::memcmp(&x, &y, sizeof(double)) == 0;
         });
}

/// Bernoulli-Gauss signal, AWGN measurements at the given SNR.
struct BgAwgnInstance {
  Matrix a;
  Vector x;
  Vector y;
  double noise_var;
  std::vector<adgamp::InputChannel> in;
  std::vector<adgamp::OutputChannel> out;
};

inline BgAwgnInstance bg_awgn(Eigen::Index m, Eigen::Index n, double tau, double snr_db, std::uint64_t seed) {
  BgAwgnInstance p;
  p.a = randn(m, n, seed, 1.0 / std::sqrt(static_cast<double>(n)));
  std::mt19937_64 rng(seed + 1);
  std::bernoulli_distribution on(tau);
  std::normal_distribution<double> d;
  p.x = Vector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j)
    if (on(rng)) p.x[j] = d(rng);
  const Vector z = p.a * p.x;
  p.noise_var = z.squaredNorm() / static_cast<double>(m) * std::pow(10.0, -snr_db / 10.0);
  p.y = z;
  for (Eigen::Index i = 0; i < m; ++i) p.y[i] += std::sqrt(p.noise_var) * d(rng);
  p.in.assign(static_cast<std::size_t>(n), adgamp::InputChannel::bernoulli_gauss(tau, 0.0, 1.0));
  for (Eigen::Index i = 0; i < m; ++i) p.out.push_back(adgamp::OutputChannel::awgn(p.y[i], p.noise_var));
  return p;
}

}  // namespace testsupport
