#include "adgamp/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace adgamp {

namespace {

using Rng = std::mt19937_64;

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double mean = 0.0,
                       double sd = 1.0) {
  std::normal_distribution<double> dist(mean, sd);
  Matrix g(rows, cols);
  // Row-major fill so a realization does not depend on Eigen's storage order.
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = dist(rng);
  return g;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) {
  return mix_seed(mix_seed(parent) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

std::string to_string(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::nonzero_mean:
      return "nonzero_mean";
    case EnsembleKind::low_rank:
      return "low_rank";
    case EnsembleKind::column_correlated:
      return "column_correlated";
    case EnsembleKind::ill_conditioned:
      return "ill_conditioned";
  }
  return "unknown";
}

EnsembleKind ensemble_from_string(const std::string& s) {
  if (s == "nonzero_mean") return EnsembleKind::nonzero_mean;
  if (s == "low_rank") return EnsembleKind::low_rank;
  if (s == "column_correlated") return EnsembleKind::column_correlated;
  if (s == "ill_conditioned") return EnsembleKind::ill_conditioned;
  throw std::invalid_argument("unknown ensemble kind '" + s + "'");
}

Matrix gen_matrix(const EnsembleSpec& spec) {
  const auto m = spec.rows;
  const auto n = spec.cols;
  if (m < 1 || n < 1) throw std::invalid_argument("gen_matrix: dimensions must be positive");
  Rng rng(spec.seed);
  const double nd = static_cast<double>(n);

  switch (spec.kind) {
    case EnsembleKind::nonzero_mean:
      return gaussian_matrix(m, n, rng, spec.param, 1.0 / std::sqrt(nd));

    case EnsembleKind::low_rank: {
      const auto rank = static_cast<Eigen::Index>(std::llround(spec.param));
      if (rank < 1) throw std::invalid_argument("gen_matrix: rank must be >= 1");
      const Matrix u = gaussian_matrix(m, rank, rng);
      const Matrix v = gaussian_matrix(rank, n, rng);
      return (u * v) / nd;
    }

    case EnsembleKind::column_correlated: {
      const double rho = spec.param;
      if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("gen_matrix: rho must be in [0,1)");
      std::normal_distribution<double> dist(0.0, 1.0);
      const double innov = std::sqrt(1.0 - rho * rho);
      const double scale = 1.0 / std::sqrt(nd);
      Matrix a(m, n);
      for (Eigen::Index i = 0; i < m; ++i) {
        double prev = dist(rng);
        a(i, 0) = prev;
        for (Eigen::Index j = 1; j < n; ++j) {
          prev = rho * prev + innov * dist(rng);
          a(i, j) = prev;
        }
      }
      return a * scale;
    }

    case EnsembleKind::ill_conditioned: {
      const double kappa = spec.param;
      if (!(kappa > 1.0)) throw std::invalid_argument("gen_matrix: kappa must exceed 1");
      const Matrix g = gaussian_matrix(m, n, rng);
      Eigen::BDCSVD<Matrix> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const auto k = std::min(m, n);
      // Consecutive singular values differ by kappa^(1/k).
      Vector sv(k);
      for (Eigen::Index i = 0; i < k; ++i) {
        sv[i] = std::pow(kappa, -static_cast<double>(i) / static_cast<double>(k));
      }
      sv *= std::sqrt(static_cast<double>(m)) / sv.norm();
      return svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
    }
  }
  throw std::invalid_argument("gen_matrix: unknown ensemble");
}

Signal gen_signal(const SignalSpec& spec) {
  if (!(spec.sparsity > 0.0 && spec.sparsity <= 1.0)) {
    throw std::invalid_argument("gen_signal: sparsity must be in (0,1]");
  }
  if (spec.length < 1) throw std::invalid_argument("gen_signal: length must be positive");
  Rng rng(spec.seed);
  std::bernoulli_distribution active(spec.sparsity);
  std::normal_distribution<double> value(spec.active_mean, std::sqrt(spec.active_var));

  Signal s;
  s.x = Vector::Zero(spec.length);
  // An empty support leaves NMSE undefined; keep drawing from the stream.
  while (s.support.empty()) {
    for (Eigen::Index j = 0; j < spec.length; ++j) {
      if (active(rng)) s.support.push_back(j);
    }
  }
  for (const auto j : s.support) s.x[j] = value(rng);

  if (spec.center_active) {
    double mean = 0.0;
    for (const auto j : s.support) mean += s.x[j];
    mean /= static_cast<double>(s.support.size());
    for (const auto j : s.support) s.x[j] -= mean;
  }
  return s;
}

Measurements gen_measurements(const Matrix& a, const Vector& x, const MeasurementSpec& spec) {
  if (a.cols() != x.size()) throw std::invalid_argument("gen_measurements: dimension mismatch");
  const Vector z = a * x;
  const auto m = z.size();
  Measurements out;

  if (spec.process == MeasurementSpec::Process::one_bit) {
    out.y.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) out.y[i] = z[i] >= 0.0 ? 1.0 : -1.0;
    return out;
  }

  const double power = z.squaredNorm() / static_cast<double>(m);
  if (!(power > 0.0)) throw std::invalid_argument("gen_measurements: A x is zero; SNR undefined");

  Rng rng(spec.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  out.noise_var = std::isinf(spec.snr_db) ? 0.0 : power * std::pow(10.0, -spec.snr_db / 10.0);
  out.y = z;
  for (Eigen::Index i = 0; i < m; ++i) out.y[i] += std::sqrt(out.noise_var) * unit(rng);

  if (spec.process == MeasurementSpec::Process::robust) {
    if (!(spec.outlier_fraction > 0.0 && spec.outlier_fraction < 1.0)) {
      throw std::invalid_argument("gen_measurements: outlier fraction must be in (0,1)");
    }
    out.outlier_prob = spec.outlier_fraction;
    out.outlier_var = power * std::pow(10.0, -spec.outlier_snr_db / 10.0);
    const auto count = static_cast<Eigen::Index>(std::llround(spec.outlier_fraction * static_cast<double>(m)));
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(m));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    for (Eigen::Index k = 0; k < count; ++k) {
      std::uniform_int_distribution<Eigen::Index> pick(k, m - 1);
      std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    idx.resize(static_cast<std::size_t>(count));
    std::sort(idx.begin(), idx.end());
    for (const auto i : idx) out.y[i] = z[i] + std::sqrt(out.outlier_var) * unit(rng);
    out.outliers = std::move(idx);
  }
  return out;
}

}  // namespace adgamp
