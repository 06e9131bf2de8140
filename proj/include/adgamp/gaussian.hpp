#pragma once

// Scalar Gaussian helpers shared by the channel implementations.

#include <span>

namespace adgamp::gaussian {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLog2Pi = 1.83787706640934548356;
inline constexpr double kSqrt2 = 1.41421356237309504880;

/// Scaled complementary error function exp(x^2) erfc(x).
double erfcx(double x);

/// ln N(x; mean, var)
double log_pdf(double x, double mean, double var);

/// ln Phi(a) for the standard normal CDF, accurate deep into both tails.
double log_cdf(double a);

/// phi(a) / Phi(a)
double inverse_mills(double a);

/// log(exp(a) + exp(b)) with -inf handled.
double log_add_exp(double a, double b);

struct Moments {
  double mean;
  double var;
};

/// N(mean, var) restricted to the half-line side*z > 0, side = +1 or -1.
struct HalfLine {
  double log_mass;  // ln P(side*z > 0)
  Moments moments;
};
HalfLine half_line(double mean, double var, double side);

/// One component of a finite mixture posterior: unnormalized log weight and
/// the component's own mean/variance.
struct Component {
  double log_weight;
  double mean;
  double var;
};

struct MixtureMoments {
  double log_norm;  // log of the summed weights
  Moments moments;
};
MixtureMoments combine(std::span<const Component> parts);

}  // namespace adgamp::gaussian
