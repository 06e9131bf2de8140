#pragma once

// Experiment runner: sweeps of matrix difficulty, repeated trials, the
// support-genie reference, and CSV / plot-data output.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "adgamp/cost.hpp"
#include "adgamp/engine.hpp"
#include "adgamp/ensembles.hpp"

namespace adgamp {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Problem { awgn_cs, robust_cs, one_bit_cs };
enum class SolverKind { gamp, adgamp, mgamp, madgamp };

std::string to_string(Problem p);
std::string to_string(SolverKind s);
Problem problem_from_string(const std::string& s);
SolverKind solver_from_string(const std::string& s);

/// One figure panel: a matrix family and the values swept along its axis.
/// low_rank grids hold R/N ratios; the others hold mu, rho or kappa.
struct Panel {
  EnsembleKind kind;
  std::vector<double> grid;
};

struct ExperimentConfig {
  Problem problem = Problem::awgn_cs;
  std::vector<Panel> panels;
  Eigen::Index n = 1000;
  Eigen::Index m = 500;
  double sparsity = 0.2;
  int trials = 100;
  std::uint64_t root_seed = 1;
  std::vector<SolverKind> solvers;
  DampingConfig damping;   // adaptive variants
  DampingConfig baseline;  // gamp / mgamp
  NewtonConfig newton;
  double snr_db = 60.0;
  double outlier_fraction = 0.1;
  double outlier_snr_db = 0.0;
  std::filesystem::path output_dir = "results";

  void validate() const;
};

/// Problem-specific defaults: sizes, sparsity and damping overrides.
ExperimentConfig default_config(Problem p);

/// Reads a JSON config. Missing optional fields take the problem defaults.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Small built-in configuration for a quick end-to-end run.
ExperimentConfig smoke_config();

struct TrialResult {
  std::string solver;  // solver name, or "genie"
  EnsembleKind ensemble;
  double sweep_value;
  int trial;
  double nmse;     // linear ratio; 1 for aborted runs
  double nmse_db;  // clipped at 0 dB
  int iterations;
  int retries;
  double seconds;
  bool converged;
  bool aborted;
};

struct SummaryRow {
  EnsembleKind ensemble;
  double sweep_value;
  std::string solver;
  int trials;
  double mean_nmse_db;  // dB of the mean linear NMSE, clipped at 0
  double mean_iterations;
  double mean_retries;
  int converged;
  int aborted;
};

struct RuntimeRow {
  EnsembleKind ensemble;
  std::string solver;
  int runs;
  double median_seconds;
  double mean_seconds;
  double median_iterations;
  double mean_iterations;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<TrialResult> trials;  // fixed order: panel, sweep value, trial, solver
  std::vector<SummaryRow> summary;
  std::vector<RuntimeRow> runtime;

  bool any_aborted() const;
  /// Column names of the plot data: the configured solvers, then genie when present.
  std::vector<std::string> curve_names() const;
};

/// Runs every (panel, sweep value, trial) cell on `threads` workers. Output
/// does not depend on the thread count.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads = 1);

/// Support-oracle LMMSE NMSE in dB:
/// x̂_S = (A_Sᵀ A_S + (nu_w / active_var) I)⁻¹ A_Sᵀ y, zero elsewhere.
double genie_nmse_db(const Matrix& a, const Vector& x, const std::vector<Eigen::Index>& support,
                     const Vector& y, double noise_var, double active_var = 1.0);

double to_db(double ratio);
/// Clipped dB of the mean linear NMSE.
double mean_nmse_db(const std::vector<double>& ratios);

/// results.csv, summary.csv, runtime.csv. Timing lives only in runtime.csv so
/// the other two are reproducible byte for byte.
void write_results(const ExperimentResult& result, const std::filesystem::path& dir);
std::string results_csv(const ExperimentResult& result);
std::string summary_csv(const ExperimentResult& result);
std::string runtime_csv(const ExperimentResult& result);

/// One plot-data file per panel (plot_<ensemble>.dat) plus an SVG rendering.
/// Returns the files written.
std::vector<std::filesystem::path> emit_plots(const ExperimentResult& result,
                                              const std::filesystem::path& dir,
                                              bool render_svg = true);

}  // namespace adgamp
