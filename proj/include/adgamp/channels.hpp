#pragma once

// Scalar likelihood (output) and prior (input) channels.
//
// Each channel supplies the posterior statistics of z (or x) under
//   f(z) ∝ p(y|z) N(z; p_hat, nu_p)
// together with the log of its normalizer, in MMSE mode, and the proximal
// point of -ln p in MAP mode. The returned variance is nu_p * g'(p_hat), the
// quantity the recursion consumes directly.

#include <stdexcept>
#include <string>
#include <variant>

#include "adgamp/gaussian.hpp"

namespace adgamp {

using gaussian::Moments;

enum class Mode { mmse, map };

/// Thrown when a channel is asked for an operation it cannot support, such as
/// a MAP prox of the noiseless sign likelihood.
class UnsupportedChannel : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace likelihood {
/// y = z + w, w ~ N(0, noise_var)
struct Awgn {
  double noise_var;
};
/// y = z + w, w ~ (1-outlier_prob) N(0, var_small) + outlier_prob N(0, var_large)
struct OutlierMixture {
  double outlier_prob;
  double var_small;
  double var_large;
};
/// y = sgn(z), y in {-1, +1}
struct Sign {};
/// z = 0 exactly (y unused)
struct DiracZero {};
}  // namespace likelihood

struct OutputChannel {
  using Kind = std::variant<likelihood::Awgn, likelihood::OutlierMixture, likelihood::Sign,
                            likelihood::DiracZero>;
  Kind kind;
  double y = 0.0;

  static OutputChannel awgn(double y, double noise_var);
  static OutputChannel outlier_mixture(double y, double outlier_prob, double var_small,
                                       double var_large);
  static OutputChannel sign(double y);
  static OutputChannel dirac_zero();

  std::string name() const;
};

namespace prior {
/// (1-sparsity) delta(x) + sparsity N(x; mean, var)
struct BernoulliGauss {
  double sparsity;
  double mean;
  double var;
};
struct Gauss {
  double mean;
  double var;
};
/// (rate/2) exp(-rate |x|)
struct Laplace {
  double rate;
};
/// p(x) ∝ 1
struct ImproperUniform {};
}  // namespace prior

struct InputChannel {
  using Kind = std::variant<prior::BernoulliGauss, prior::Gauss, prior::Laplace,
                            prior::ImproperUniform>;
  Kind kind;

  static InputChannel bernoulli_gauss(double sparsity, double mean, double var);
  static InputChannel gauss(double mean, double var);
  static InputChannel laplace(double rate);
  static InputChannel improper_uniform();

  std::string name() const;
};

// MMSE quantities.
Moments posterior_z(const OutputChannel& ch, double p_hat, double nu_p);
double log_partition_z(const OutputChannel& ch, double p_hat, double nu_p);
Moments posterior_x(const InputChannel& ch, double r_hat, double nu_r);
double log_partition_x(const InputChannel& ch, double r_hat, double nu_r);

// MAP quantities.
Moments map_prox_z(const OutputChannel& ch, double p_hat, double nu_p);
Moments map_prox_x(const InputChannel& ch, double r_hat, double nu_r);

inline Moments estimate_z(Mode mode, const OutputChannel& ch, double p_hat, double nu_p) {
  return mode == Mode::mmse ? posterior_z(ch, p_hat, nu_p) : map_prox_z(ch, p_hat, nu_p);
}
inline Moments estimate_x(Mode mode, const InputChannel& ch, double r_hat, double nu_r) {
  return mode == Mode::mmse ? posterior_x(ch, r_hat, nu_r) : map_prox_x(ch, r_hat, nu_r);
}

/// Prior mean and variance, used to start the recursion. The improper prior
/// reports (0, 1).
Moments prior_moments(const InputChannel& ch);

/// ln p(y|z) and ln p(x) up to argument-independent constants, for the MAP
/// cost. A Dirac row returns -inf unless z == 0.
double log_likelihood(const OutputChannel& ch, double z);
double log_prior(const InputChannel& ch, double x);

}  // namespace adgamp
