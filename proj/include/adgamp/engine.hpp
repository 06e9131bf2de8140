#pragma once

// Adaptively damped GAMP.
//
// One iteration t consumes the accepted state (x̂(t), nu_x(t), p̂(t), nu_p(t)
// and the damped messages of iteration t-1) and produces a candidate holding
// everything of iteration t plus x̂(t+1), nu_x(t+1), p̂(t+1), nu_p(t+1). The
// damping controller scores the candidate and either accepts it, or shrinks
// beta and retries iteration t from the unchanged accepted state.

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "adgamp/channels.hpp"
#include "adgamp/cost.hpp"
#include "adgamp/linop.hpp"

namespace adgamp {

struct DampingConfig {
  int max_iters = 1000;      // T_max >= 1
  double tolerance = 1e-5;   // epsilon >= 0, relative change in x̂
  int window = 0;            // T_beta >= 0
  double beta_max = 1.0;     // (0, 1]
  double beta_min = 0.01;    // [0, beta_max]
  double gain_pass = 1.1;    // >= 1
  double gain_fail = 0.5;    // < 1
  int max_consecutive_fails = 50;
  bool damp_nu_r = true;
  bool damp_nu_p = true;
  /// When false the cost is never evaluated and every attempt is accepted.
  bool adaptive = true;
  /// Treat a cost whose p̃ solve missed its tolerance on some row as a failed
  /// attempt. By default the last Newton iterate is used as is.
  bool reject_suspect_cost = false;

  void validate() const;

  /// Undamped GAMP: beta pinned at 1, no cost check.
  static DampingConfig undamped(int max_iters = 1000, double tolerance = 1e-5);
};

/// Per-iteration vectors.
struct Iterate {
  Vector x_hat, nu_x, x_tilde, r_hat, nu_r;    // length N
  Vector z_hat, nu_z, s_hat, nu_s, p_hat, nu_p;  // length M
};

struct GampState {
  Iterate cur;
  double beta = 1.0;
  int t = 1;
  /// J(1) = +inf followed by the cost of every accepted iteration.
  std::vector<double> cost_history;
  /// For each accepted iteration: whether it passed only through beta == beta_min.
  std::vector<bool> escape_history;
  /// beta used by each accepted iteration.
  std::vector<double> beta_history;
  int consecutive_fails = 0;
  int total_fails = 0;
  /// Attempts whose cost carried an unmet p̃ solve.
  int suspect_costs = 0;
};

/// Output-channel stage (ẑ, nu_z) at the accepted p̂(t), nu_p(t). It does not
/// depend on beta, so retries of iteration t reuse it.
struct OutputStage {
  Vector z_hat, nu_z;
};

struct CostEval {
  double value = 0.0;
  bool suspect = false;
  bool evaluated = true;
};

enum class Decision { accepted, retry, stopped, aborted };

enum class SolveStatus { converged, max_iterations, aborted };
std::string to_string(SolveStatus s);

struct SolveReport {
  Vector x_hat, nu_x, r_hat, nu_r, p_hat, nu_p;
  int iterations = 0;  // accepted iterations
  int fails = 0;       // rejected attempts
  double final_cost = 0.0;
  bool converged = false;
  SolveStatus status = SolveStatus::max_iterations;
  std::string message;
  GampState state;  // last accepted state
};

/// Thrown by iterate_once when a damped variance is NaN or nonpositive, or a
/// mean is non-finite.
class NumericalBreakdown : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceEvent {
  int t;
  double beta;
  double cost;
  double nmse;  // NaN unless a reference signal was supplied
};
using TraceFn = std::function<void(const TraceEvent&)>;

struct SolverOptions {
  Mode mode = Mode::mmse;
  DampingConfig damping;
  NewtonConfig newton;
  TraceFn trace;
};

class AdGamp {
 public:
  AdGamp(std::shared_ptr<const LinearOperator> op, std::vector<InputChannel> in,
         std::vector<OutputChannel> out, SolverOptions options);

  const LinearOperator& op() const { return *op_; }
  const std::vector<InputChannel>& inputs() const { return in_; }
  const std::vector<OutputChannel>& outputs() const { return out_; }
  const SolverOptions& options() const { return opts_; }

  /// Start from the prior means and variances.
  GampState initialize() const;
  /// Start from a supplied x̂(1), nu_x(1).
  GampState initialize(const Vector& x_hat, const Vector& nu_x) const;

  OutputStage output_stage(const GampState& state) const;

  Iterate iterate_once(const GampState& state, double beta) const;
  Iterate iterate_once(const GampState& state, const OutputStage& stage, double beta) const;

  CostEval evaluate_cost(const Iterate& candidate) const;

  /// Damping test and bookkeeping. On acceptance the candidate is moved into
  /// the state; on failure the state's iterate is left untouched.
  Decision adapt_and_accept(GampState& state, Iterate&& candidate, const CostEval& cost) const;

  /// Reduce beta after a failed attempt; returns aborted once the
  /// consecutive-failure cap is exceeded.
  Decision register_failure(GampState& state) const;

  SolveReport run(const Vector* truth = nullptr) const;

 private:
  std::shared_ptr<const LinearOperator> op_;
  std::vector<InputChannel> in_;
  std::vector<OutputChannel> out_;
  SolverOptions opts_;
};

/// ‖x̂ - x‖² / ‖x‖²
double nmse(const Vector& estimate, const Vector& truth);

}  // namespace adgamp
