#pragma once

// Seeded generators for the test matrices, sparse signals and measurements.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "adgamp/linop.hpp"

namespace adgamp {

/// SplitMix64 finalizer; used to derive decorrelated substream seeds.
std::uint64_t mix_seed(std::uint64_t x);
/// Seed for substream `stream` of a parent seed.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

enum class EnsembleKind { nonzero_mean, low_rank, column_correlated, ill_conditioned };

std::string to_string(EnsembleKind k);
EnsembleKind ensemble_from_string(const std::string& s);

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::nonzero_mean;
  /// mean for nonzero_mean, rank R for low_rank, rho for column_correlated,
  /// condition number kappa for ill_conditioned
  double param = 0.0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::uint64_t seed = 0;
};

Matrix gen_matrix(const EnsembleSpec& spec);

struct SignalSpec {
  double sparsity = 0.2;  // tau in (0, 1]
  Eigen::Index length = 0;
  double active_mean = 0.0;
  double active_var = 1.0;
  std::uint64_t seed = 0;
  bool center_active = false;
};

struct Signal {
  Vector x;
  std::vector<Eigen::Index> support;
};

Signal gen_signal(const SignalSpec& spec);

struct MeasurementSpec {
  enum class Process { awgn, robust, one_bit };
  Process process = Process::awgn;
  double snr_db = 60.0;  // +inf for noiseless
  double outlier_fraction = 0.1;
  double outlier_snr_db = 0.0;
  std::uint64_t seed = 0;
};

struct Measurements {
  Vector y;
  double noise_var = 0.0;      // awgn / robust inlier variance
  double outlier_var = 0.0;    // robust only
  double outlier_prob = 0.0;   // robust only
  std::vector<Eigen::Index> outliers;
};

Measurements gen_measurements(const Matrix& a, const Vector& x, const MeasurementSpec& spec);

}  // namespace adgamp
