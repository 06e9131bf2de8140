#include "adgamp/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace adgamp::gaussian {

namespace {
constexpr double kInvSqrtPi = 0.56418958354775628695;
constexpr double kSqrt2OverPi = 0.79788456080286535588;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

double erfcx(double x) {
  if (x < 8.0) return std::exp(x * x) * std::erfc(x);
  // Continued fraction erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
  double f = x;
  for (int k = 60; k >= 1; --k) f = x + 0.5 * k / f;
  return kInvSqrtPi / f;
}

double log_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

double log_cdf(double a) {
  if (a < 0.0) {
    // Phi(a) = erfcx(u) exp(-u^2) / 2 with u = -a/sqrt(2)
    const double u = -a / kSqrt2;
    return std::log(0.5 * erfcx(u)) - u * u;
  }
  return std::log1p(-0.5 * std::erfc(a / kSqrt2));
}

double inverse_mills(double a) {
  if (a < 0.0) return kSqrt2OverPi / erfcx(-a / kSqrt2);
  const double phi = std::exp(-0.5 * a * a) / std::sqrt(2.0 * kPi);
  return phi / (1.0 - 0.5 * std::erfc(a / kSqrt2));
}

double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

HalfLine half_line(double mean, double var, double side) {
  const double sd = std::sqrt(var);
  const double alpha = side * mean / sd;
  const double lambda = inverse_mills(alpha);
  double shrink = 1.0 - lambda * (lambda + alpha);
  if (alpha < -40.0 || !(shrink > 0.0)) {
    // Far tail: 1 - lambda(lambda+alpha) = 1/a^2 - 6/a^4 + 50/a^6 - ...
    const double inv2 = 1.0 / (alpha * alpha);
    shrink = inv2 * (1.0 - 6.0 * inv2 + 50.0 * inv2 * inv2);
  }
  return {log_cdf(alpha), {mean + side * sd * lambda, var * shrink}};
}

MixtureMoments combine(std::span<const Component> parts) {
  double log_norm = kNegInf;
  for (const auto& c : parts) log_norm = log_add_exp(log_norm, c.log_weight);

  double mean = 0.0;
  for (const auto& c : parts) {
    if (c.log_weight == kNegInf) continue;
    mean += std::exp(c.log_weight - log_norm) * c.mean;
  }
  double var = 0.0;
  for (const auto& c : parts) {
    if (c.log_weight == kNegInf) continue;
    const double d = c.mean - mean;
    var += std::exp(c.log_weight - log_norm) * (c.var + d * d);
  }
  return {log_norm, {mean, var}};
}

}  // namespace adgamp::gaussian
