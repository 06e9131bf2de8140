#include "adgamp/channels.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace adgamp {

namespace {

using gaussian::Component;
using gaussian::log_pdf;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const char* msg) {
  if (!ok) throw std::domain_error(msg);
}

void check_args(double mean, double var) {
  require(std::isfinite(mean), "channel: non-finite location argument");
  require(var > 0.0 && std::isfinite(var), "channel: variance argument must be positive and finite");
}

// Product of N(z; a, va) and N(z; b, vb) as a function of z.
Moments gauss_product(double a, double va, double b, double vb) {
  const double s = va + vb;
  return {(a * vb + b * va) / s, va * vb / s};
}

// Mixture-noise components: (log weight incl. evidence, posterior mean, var).
std::array<Component, 2> mixture_parts(const likelihood::OutlierMixture& m, double y, double p_hat,
                                       double nu_p) {
  const auto small = gauss_product(p_hat, nu_p, y, m.var_small);
  const auto large = gauss_product(p_hat, nu_p, y, m.var_large);
  return {Component{std::log1p(-m.outlier_prob) + log_pdf(y, p_hat, nu_p + m.var_small),
                    small.mean, small.var},
          Component{std::log(m.outlier_prob) + log_pdf(y, p_hat, nu_p + m.var_large), large.mean,
                    large.var}};
}

std::array<Component, 2> bernoulli_gauss_parts(const prior::BernoulliGauss& bg, double r_hat,
                                               double nu_r) {
  const auto slab = gauss_product(r_hat, nu_r, bg.mean, bg.var);
  const double log_off = bg.sparsity < 1.0 ? std::log1p(-bg.sparsity) : kNegInf;
  return {Component{log_off + log_pdf(0.0, r_hat, nu_r), 0.0, 0.0},
          Component{std::log(bg.sparsity) + log_pdf(r_hat, bg.mean, nu_r + bg.var), slab.mean,
                    slab.var}};
}

// Laplace prior times N(x; r, v) splits into two half-line Gaussians.
std::array<Component, 2> laplace_parts(const prior::Laplace& lp, double r_hat, double nu_r) {
  const double lam = lp.rate;
  const double base = std::log(0.5 * lam) + 0.5 * lam * lam * nu_r;
  const auto pos = gaussian::half_line(r_hat - lam * nu_r, nu_r, +1.0);
  const auto neg = gaussian::half_line(r_hat + lam * nu_r, nu_r, -1.0);
  return {Component{base - lam * r_hat + pos.log_mass, pos.moments.mean, pos.moments.var},
          Component{base + lam * r_hat + neg.log_mass, neg.moments.mean, neg.moments.var}};
}

// -d/dz ln p(y|z) and -d^2/dz^2 ln p(y|z) for the outlier mixture.
struct Curvature {
  double grad;
  double hess;
};
Curvature mixture_neg_log_derivs(const likelihood::OutlierMixture& m, double y, double z) {
  const double ls = std::log1p(-m.outlier_prob) + log_pdf(y, z, m.var_small);
  const double ll = std::log(m.outlier_prob) + log_pdf(y, z, m.var_large);
  const double norm = gaussian::log_add_exp(ls, ll);
  const double ws = std::exp(ls - norm);
  const double wl = std::exp(ll - norm);
  const double ds = (y - z) / m.var_small;
  const double dl = (y - z) / m.var_large;
  const double d1 = ws * ds + wl * dl;
  const double d2 = ws * (ds * ds - 1.0 / m.var_small) + wl * (dl * dl - 1.0 / m.var_large) - d1 * d1;
  return {-d1, -d2};
}

}  // namespace

// ---------------------------------------------------------------------------
// Construction

OutputChannel OutputChannel::awgn(double y, double noise_var) {
  require(noise_var > 0.0, "awgn: noise variance must be positive");
  return {likelihood::Awgn{noise_var}, y};
}

OutputChannel OutputChannel::outlier_mixture(double y, double outlier_prob, double var_small,
                                             double var_large) {
  require(outlier_prob > 0.0 && outlier_prob < 1.0, "mixture: outlier probability must be in (0,1)");
  require(var_small > 0.0, "mixture: small variance must be positive");
  require(var_large > var_small, "mixture: large variance must exceed small variance");
  return {likelihood::OutlierMixture{outlier_prob, var_small, var_large}, y};
}

OutputChannel OutputChannel::sign(double y) {
  require(y == 1.0 || y == -1.0, "sign: observation must be +1 or -1");
  return {likelihood::Sign{}, y};
}

OutputChannel OutputChannel::dirac_zero() { return {likelihood::DiracZero{}, 0.0}; }

std::string OutputChannel::name() const {
  return std::visit(Overloaded{[](const likelihood::Awgn&) { return "awgn"; },
                               [](const likelihood::OutlierMixture&) { return "mixture"; },
                               [](const likelihood::Sign&) { return "sign"; },
                               [](const likelihood::DiracZero&) { return "dirac_zero"; }},
                    kind);
}

InputChannel InputChannel::bernoulli_gauss(double sparsity, double mean, double var) {
  require(sparsity > 0.0 && sparsity <= 1.0, "bernoulli_gauss: sparsity must be in (0,1]");
  require(var > 0.0, "bernoulli_gauss: active variance must be positive");
  return {prior::BernoulliGauss{sparsity, mean, var}};
}

InputChannel InputChannel::gauss(double mean, double var) {
  require(var > 0.0, "gauss: variance must be positive");
  return {prior::Gauss{mean, var}};
}

InputChannel InputChannel::laplace(double rate) {
  require(rate > 0.0, "laplace: rate must be positive");
  return {prior::Laplace{rate}};
}

InputChannel InputChannel::improper_uniform() { return {prior::ImproperUniform{}}; }

std::string InputChannel::name() const {
  return std::visit(Overloaded{[](const prior::BernoulliGauss&) { return "bernoulli_gauss"; },
                               [](const prior::Gauss&) { return "gauss"; },
                               [](const prior::Laplace&) { return "laplace"; },
                               [](const prior::ImproperUniform&) { return "improper_uniform"; }},
                    kind);
}

// ---------------------------------------------------------------------------
// Output side

Moments posterior_z(const OutputChannel& ch, double p_hat, double nu_p) {
  check_args(p_hat, nu_p);
  const double y = ch.y;
  return std::visit(
      Overloaded{
          [&](const likelihood::Awgn& a) { return gauss_product(p_hat, nu_p, y, a.noise_var); },
          [&](const likelihood::OutlierMixture& m) {
            const auto parts = mixture_parts(m, y, p_hat, nu_p);
            return gaussian::combine(parts).moments;
          },
          [&](const likelihood::Sign&) { return gaussian::half_line(p_hat, nu_p, y).moments; },
          [&](const likelihood::DiracZero&) { return Moments{0.0, 0.0}; }},
      ch.kind);
}

double log_partition_z(const OutputChannel& ch, double p_hat, double nu_p) {
  check_args(p_hat, nu_p);
  const double y = ch.y;
  return std::visit(
      Overloaded{
          [&](const likelihood::Awgn& a) { return log_pdf(y, p_hat, nu_p + a.noise_var); },
          [&](const likelihood::OutlierMixture& m) {
            const auto parts = mixture_parts(m, y, p_hat, nu_p);
            return gaussian::combine(parts).log_norm;
          },
          [&](const likelihood::Sign&) { return gaussian::log_cdf(y * p_hat / std::sqrt(nu_p)); },
          [&](const likelihood::DiracZero&) { return log_pdf(0.0, p_hat, nu_p); }},
      ch.kind);
}

Moments map_prox_z(const OutputChannel& ch, double p_hat, double nu_p) {
  check_args(p_hat, nu_p);
  const double y = ch.y;
  return std::visit(
      Overloaded{
          [&](const likelihood::Awgn& a) { return gauss_product(p_hat, nu_p, y, a.noise_var); },
          [&](const likelihood::OutlierMixture& m) {
            // Root of (z - p_hat)/nu_p + d/dz[-ln p(y|z)], bracketed by p_hat and y
            // since the likelihood gradient always points toward y.
            double lo = std::min(p_hat, y);
            double hi = std::max(p_hat, y);
            for (int i = 0; i < 60; ++i) {
              const double mid = 0.5 * (lo + hi);
              const double h = (mid - p_hat) / nu_p + mixture_neg_log_derivs(m, y, mid).grad;
              (h > 0.0 ? hi : lo) = mid;
            }
            const double z = 0.5 * (lo + hi);
            const double slope = 1.0 / (1.0 + nu_p * mixture_neg_log_derivs(m, y, z).hess);
            return Moments{z, nu_p * std::max(slope, 0.0)};
          },
          [&](const likelihood::Sign&) -> Moments {
            throw UnsupportedChannel("sign likelihood has no MAP prox");
          },
          [&](const likelihood::DiracZero&) { return Moments{0.0, 0.0}; }},
      ch.kind);
}

double log_likelihood(const OutputChannel& ch, double z) {
  const double y = ch.y;
  return std::visit(
      Overloaded{[&](const likelihood::Awgn& a) { return -0.5 * (y - z) * (y - z) / a.noise_var; },
                 [&](const likelihood::OutlierMixture& m) {
                   return gaussian::log_add_exp(std::log1p(-m.outlier_prob) + log_pdf(y, z, m.var_small),
                                                std::log(m.outlier_prob) + log_pdf(y, z, m.var_large));
                 },
                 [&](const likelihood::Sign&) { return y * z > 0.0 ? 0.0 : kNegInf; },
                 [&](const likelihood::DiracZero&) { return z == 0.0 ? 0.0 : kNegInf; }},
      ch.kind);
}

// ---------------------------------------------------------------------------
// Input side

Moments posterior_x(const InputChannel& ch, double r_hat, double nu_r) {
  check_args(r_hat, nu_r);
  return std::visit(
      Overloaded{[&](const prior::BernoulliGauss& bg) {
                   const auto parts = bernoulli_gauss_parts(bg, r_hat, nu_r);
                   return gaussian::combine(parts).moments;
                 },
                 [&](const prior::Gauss& g) { return gauss_product(r_hat, nu_r, g.mean, g.var); },
                 [&](const prior::Laplace& lp) {
                   const auto parts = laplace_parts(lp, r_hat, nu_r);
                   return gaussian::combine(parts).moments;
                 },
                 [&](const prior::ImproperUniform&) { return Moments{r_hat, nu_r}; }},
      ch.kind);
}

double log_partition_x(const InputChannel& ch, double r_hat, double nu_r) {
  check_args(r_hat, nu_r);
  return std::visit(
      Overloaded{[&](const prior::BernoulliGauss& bg) {
                   const auto parts = bernoulli_gauss_parts(bg, r_hat, nu_r);
                   return gaussian::combine(parts).log_norm;
                 },
                 [&](const prior::Gauss& g) { return log_pdf(r_hat, g.mean, nu_r + g.var); },
                 [&](const prior::Laplace& lp) {
                   const auto parts = laplace_parts(lp, r_hat, nu_r);
                   return gaussian::combine(parts).log_norm;
                 },
                 [&](const prior::ImproperUniform&) { return 0.0; }},
      ch.kind);
}

Moments map_prox_x(const InputChannel& ch, double r_hat, double nu_r) {
  check_args(r_hat, nu_r);
  return std::visit(
      Overloaded{[&](const prior::BernoulliGauss&) -> Moments {
                   throw UnsupportedChannel("bernoulli_gauss prior has no MAP prox");
                 },
                 [&](const prior::Gauss& g) { return gauss_product(r_hat, nu_r, g.mean, g.var); },
                 [&](const prior::Laplace& lp) {
                   const double thresh = lp.rate * nu_r;
                   if (std::abs(r_hat) <= thresh) return Moments{0.0, 0.0};
                   return Moments{r_hat - std::copysign(thresh, r_hat), nu_r};
                 },
                 [&](const prior::ImproperUniform&) { return Moments{r_hat, nu_r}; }},
      ch.kind);
}

Moments prior_moments(const InputChannel& ch) {
  return std::visit(
      Overloaded{[](const prior::BernoulliGauss& bg) {
                   const double mean = bg.sparsity * bg.mean;
                   const double second = bg.sparsity * (bg.var + bg.mean * bg.mean);
                   return Moments{mean, second - mean * mean};
                 },
                 [](const prior::Gauss& g) { return Moments{g.mean, g.var}; },
                 [](const prior::Laplace& lp) { return Moments{0.0, 2.0 / (lp.rate * lp.rate)}; },
                 [](const prior::ImproperUniform&) { return Moments{0.0, 1.0}; }},
      ch.kind);
}

double log_prior(const InputChannel& ch, double x) {
  return std::visit(
      Overloaded{[](const prior::BernoulliGauss&) -> double {
                   throw UnsupportedChannel("bernoulli_gauss prior has no MAP cost");
                 },
                 [&](const prior::Gauss& g) { return -0.5 * (x - g.mean) * (x - g.mean) / g.var; },
                 [&](const prior::Laplace& lp) { return -lp.rate * std::abs(x); },
                 [](const prior::ImproperUniform&) { return 0.0; }},
      ch.kind);
}

}  // namespace adgamp
