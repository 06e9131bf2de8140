#pragma once

// Iteration costs used by the damping controller. Every path drops
// iterate-independent constants; only differences between iterations matter.

#include <span>

#include "adgamp/channels.hpp"
#include "adgamp/linop.hpp"

namespace adgamp {

/// Settings of the regularized Newton solve for the moment-matched p̃.
struct NewtonConfig {
  enum class Init { p_hat, a_x_hat };

  double step = 0.5;          // alpha in (0, 1]
  double regularizer = 1e-8;  // phi >= 0
  int max_iters = 50;         // >= 1
  double tolerance = 1e-6;    // relative residual stop, >= 0
  Init init = Init::a_x_hat;

  void validate() const;
};

struct PtildeSolve {
  double p_tilde;
  int iterations;  // number of residual checks performed
  bool converged;
  bool stalled;  // derivative^2 + phi vanished
};

/// Solves g_z(p̃, nu_p) = target for p̃. Closed form for AWGN and Dirac
/// rows; regularized Newton otherwise.
PtildeSolve moment_matched_ptilde(double target, double nu_p, const OutputChannel& ch,
                                  const NewtonConfig& cfg, double p_init);

/// The Newton iteration alone, regardless of channel kind.
PtildeSolve newton_ptilde(double target, double nu_p, const OutputChannel& ch,
                          const NewtonConfig& cfg, double p_init);

/// Per-coordinate pieces of the Bethe cost.
/// Input:  -(ln C + ½ ln nu_r + (nu_x + |x̂ - r̂|²) / (2 nu_r))
/// Output: -(ln B + |ẑ - p̂|² / (2 nu_p))
double bethe_input_term(const InputChannel& ch, double r_hat, double nu_r);
double bethe_output_term(const OutputChannel& ch, double p_hat, double nu_p);

/// Bethe cost in (r̂, nu_r, p̂, nu_p) form.
double bethe_cost(VectorCRef r_hat, VectorCRef nu_r, VectorCRef p_hat, VectorCRef nu_p,
                  std::span<const InputChannel> in, std::span<const OutputChannel> out);

/// -ln p(y | A x̂) - ln p(x̂). +inf when a Dirac row is violated.
double map_cost(VectorCRef x_hat, const LinearOperator& op, std::span<const InputChannel> in,
                std::span<const OutputChannel> out);

struct MmseCost {
  double value;
  bool suspect;  // at least one p̃ solve did not meet its tolerance
  int unmet_rows;
};

/// Bethe cost at (r̂, nu_r) with p̃ chosen so that E{z} = A x̂_new.
///   r_hat, nu_r   : the inputs of the x-denoiser for this iteration
///   x_hat_new     : its output
///   p_hat_new, nu_p_new : the damped p̂, nu_p produced from them
MmseCost mmse_cost(VectorCRef r_hat, VectorCRef nu_r, VectorCRef x_hat_new, VectorCRef p_hat_new,
                   VectorCRef nu_p_new, const LinearOperator& op, std::span<const InputChannel> in,
                   std::span<const OutputChannel> out, const NewtonConfig& cfg);

}  // namespace adgamp
