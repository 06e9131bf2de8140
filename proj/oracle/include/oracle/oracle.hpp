#pragma once

// Independent reference computations used to freeze test fixtures. Nothing
// here calls into the solver's channel or cost code; each value is obtained
// by a different route (numerical quadrature, bracketing, dense linear algebra
// or a from-scratch recursion).

#include <functional>
#include <vector>

#include "adgamp/channels.hpp"
#include "adgamp/linop.hpp"

namespace adgamp::oracle {

struct Tilted {
  double log_partition;
  double mean;
  double var;
};

/// Moments of p(y|z) N(z; p_hat, nu_p) by adaptive Gauss-Kronrod quadrature.
/// Dirac rows are rejected.
Tilted tilted_output(const OutputChannel& ch, double p_hat, double nu_p);

/// Moments of p(x) N(x; r_hat, nu_r). The Bernoulli-Gauss point mass is added
/// analytically; its slab and the other priors are integrated numerically.
Tilted tilted_input(const InputChannel& ch, double r_hat, double nu_r);

/// D(f_x || p_x) for f_x ∝ p_x(x) N(x; r_hat, nu_r), by quadrature. Continuous
/// priors only.
double input_kl(const InputChannel& ch, double r_hat, double nu_r);

/// Normalized densities written out directly.
double likelihood_density(const OutputChannel& ch, double z);
double prior_log_density(const InputChannel& ch, double x);  // continuous part only

/// argmin_z -ln p(y|z) + (z - p_hat)^2 / (2 nu_p) by grid scan plus Brent.
double map_prox_z(const OutputChannel& ch, double p_hat, double nu_p);
/// argmin_x -ln p(x) + (x - r_hat)^2 / (2 nu_r).
double map_prox_x(const InputChannel& ch, double r_hat, double nu_r);

/// Root of mean(p) = target by bisection, where mean(p) is the tilted mean
/// written in closed form for the given channel (AWGN and sign only).
double bisection_ptilde(const OutputChannel& ch, double target, double nu_p);

/// Closed-form tilted mean used by the bisection: AWGN and sign channels.
double closed_form_mean(const OutputChannel& ch, double p, double nu_p);

/// Plain undamped GAMP for a Bernoulli-Gauss prior and an AWGN likelihood,
/// coded directly from the scalar updates.
struct ReferenceState {
  Vector x_hat, nu_x, r_hat, nu_r, p_hat, nu_p, s_hat, nu_s, z_hat, nu_z;
};
std::vector<ReferenceState> reference_gamp(const Matrix& a, const Vector& y, double noise_var,
                                           double sparsity, double slab_mean, double slab_var,
                                           int iterations);

/// Support-restricted ridge estimate solved as a stacked least-squares
/// problem [A_S / sqrt(nu_w); I / sqrt(nu_0)] x = [y / sqrt(nu_w); 0] via
/// column-pivoted QR. Returns NMSE in dB.
double genie_least_squares_db(const Matrix& a, const Vector& x, const std::vector<Eigen::Index>& support,
                              const Vector& y, double noise_var, double active_var);

/// Exact log evidence ln ∫ p(y|Ax) p(x) dx for Gaussian prior and AWGN:
/// ln N(y; A mu, nu_w I + A Sigma Aᵀ).
double gaussian_log_evidence(const Matrix& a, const Vector& y, double noise_var, const Vector& prior_mean,
                             const Vector& prior_var);

}  // namespace adgamp::oracle
