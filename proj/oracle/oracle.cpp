#include "oracle/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <variant>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

namespace adgamp::oracle {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr long double kSqrt2PiL = 2.506628274631000502415765284811L;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double ln_normal(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * std::log(2.0 * M_PI * var) - d * d / (2.0 * var);
}

using LogDensity = std::function<double(double)>;

std::vector<double> breakpoints(const std::vector<double>& centers, const std::vector<double>& scales) {
  static const double steps[] = {0, 0.25, 0.5, 1, 2, 3, 4, 6, 8, 11, 15, 20, 30, 45, 60};
  std::vector<double> pts;
  for (double c : centers) {
    for (double s : scales) {
      for (double k : steps) {
        pts.push_back(c + k * s);
        pts.push_back(c - k * s);
      }
    }
  }
  std::sort(pts.begin(), pts.end());
  std::vector<double> out;
  for (double p : pts) {
    if (out.empty() || p - out.back() > 1e-13 * std::max(1.0, std::abs(p))) out.push_back(p);
  }
  return out;
}

double integrate(const std::function<double(double)>& f, const std::vector<double>& pts) {
  using boost::math::quadrature::gauss_kronrod;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    total += gauss_kronrod<double, 31>::integrate(f, pts[i], pts[i + 1], 3, 1e-13);
  }
  return total;
}

Tilted tilt(const LogDensity& logf, const std::vector<double>& pts) {
  double shift = kNegInf;
  for (double p : pts) shift = std::max(shift, logf(p));
  if (!std::isfinite(shift)) throw std::runtime_error("oracle: tilted density vanishes on the grid");
  auto w = [&](double z) {
    const double l = logf(z);
    return l == kNegInf ? 0.0 : std::exp(l - shift);
  };
  const double mass = integrate(w, pts);
  const double mean = integrate([&](double z) { return z * w(z); }, pts) / mass;
  const double var = integrate([&](double z) { return (z - mean) * (z - mean) * w(z); }, pts) / mass;
  return {shift + std::log(mass), mean, var};
}

long double mills_ratio(long double a) {
  // phi(a) / Phi(a) in extended precision
  const long double pdf = std::exp(-0.5L * a * a) / kSqrt2PiL;
  const long double cdf = 0.5L * std::erfc(-a / std::sqrt(2.0L));
  return pdf / cdf;
}

double argmin_scan(const std::function<double(double)>& obj, double lo, double hi) {
  constexpr int kGrid = 4001;
  double best = lo, best_val = std::numeric_limits<double>::infinity();
  const double h = (hi - lo) / (kGrid - 1);
  for (int i = 0; i < kGrid; ++i) {
    const double z = lo + i * h;
    const double v = obj(z);
    if (v < best_val) {
      best_val = v;
      best = z;
    }
  }
  const auto r = boost::math::tools::brent_find_minima(obj, std::max(lo, best - h), std::min(hi, best + h), 52);
  return r.first;
}

}  // namespace

double likelihood_density(const OutputChannel& ch, double z) {
  const double y = ch.y;
  return std::visit(
      overloaded{[&](const likelihood::Awgn& a) { return std::exp(ln_normal(y, z, a.noise_var)); },
                 [&](const likelihood::OutlierMixture& m) {
                   return (1.0 - m.outlier_prob) * std::exp(ln_normal(y, z, m.var_small)) +
                          m.outlier_prob * std::exp(ln_normal(y, z, m.var_large));
                 },
                 [&](const likelihood::Sign&) { return y * z > 0.0 ? 1.0 : 0.0; },
                 [&](const likelihood::DiracZero&) -> double {
                   throw std::invalid_argument("oracle: Dirac likelihood has no density");
                 }},
      ch.kind);
}

double prior_log_density(const InputChannel& ch, double x) {
  return std::visit(overloaded{[&](const prior::BernoulliGauss& b) {
                                 return std::log(b.sparsity) + ln_normal(x, b.mean, b.var);
                               },
                               [&](const prior::Gauss& g) { return ln_normal(x, g.mean, g.var); },
                               [&](const prior::Laplace& l) { return std::log(0.5 * l.rate) - l.rate * std::abs(x); },
                               [&](const prior::ImproperUniform&) { return 0.0; }},
                    ch.kind);
}

Tilted tilted_output(const OutputChannel& ch, double p_hat, double nu_p) {
  std::vector<double> centers{p_hat, ch.y, 0.0};
  std::vector<double> scales{std::sqrt(nu_p)};
  std::visit(overloaded{[&](const likelihood::Awgn& a) {
                          scales.push_back(std::sqrt(a.noise_var));
                          centers.push_back((a.noise_var * p_hat + nu_p * ch.y) / (a.noise_var + nu_p));
                        },
                        [&](const likelihood::OutlierMixture& m) {
                          for (double v : {m.var_small, m.var_large}) {
                            scales.push_back(std::sqrt(v));
                            centers.push_back((v * p_hat + nu_p * ch.y) / (v + nu_p));
                          }
                        },
                        [&](const likelihood::Sign&) {},
                        [&](const likelihood::DiracZero&) {
                          throw std::invalid_argument("oracle: Dirac likelihood is not integrable");
                        }},
             ch.kind);
  auto logf = [&](double z) {
    const double l = likelihood_density(ch, z);
    return l > 0.0 ? std::log(l) + ln_normal(z, p_hat, nu_p) : kNegInf;
  };
  return tilt(logf, breakpoints(centers, scales));
}

Tilted tilted_input(const InputChannel& ch, double r_hat, double nu_r) {
  std::vector<double> centers{r_hat, 0.0};
  std::vector<double> scales{std::sqrt(nu_r)};
  double point_mass_log = kNegInf;  // ln of the analytic delta contribution
  std::visit(overloaded{[&](const prior::BernoulliGauss& b) {
                          scales.push_back(std::sqrt(b.var));
                          centers.push_back((b.var * r_hat + nu_r * b.mean) / (b.var + nu_r));
                          point_mass_log = std::log1p(-b.sparsity) + ln_normal(0.0, r_hat, nu_r);
                        },
                        [&](const prior::Gauss& g) {
                          scales.push_back(std::sqrt(g.var));
                          centers.push_back((g.var * r_hat + nu_r * g.mean) / (g.var + nu_r));
                        },
                        [&](const prior::Laplace& l) {
                          centers.push_back(r_hat - l.rate * nu_r);
                          centers.push_back(r_hat + l.rate * nu_r);
                        },
                        [&](const prior::ImproperUniform&) {}},
             ch.kind);
  auto logf = [&](double x) { return prior_log_density(ch, x) + ln_normal(x, r_hat, nu_r); };
  const Tilted slab = tilt(logf, breakpoints(centers, scales));
  if (point_mass_log == kNegInf) return slab;

  // Mixture of a point at 0 and the slab posterior.
  const double top = std::max(point_mass_log, slab.log_partition);
  const double w0 = std::exp(point_mass_log - top);
  const double w1 = std::exp(slab.log_partition - top);
  const double total = w0 + w1;
  const double mean = w1 * slab.mean / total;
  const double second = w1 * (slab.var + slab.mean * slab.mean) / total;
  return {top + std::log(total), mean, second - mean * mean};
}

double input_kl(const InputChannel& ch, double r_hat, double nu_r) {
  if (std::holds_alternative<prior::BernoulliGauss>(ch.kind) ||
      std::holds_alternative<prior::ImproperUniform>(ch.kind)) {
    throw std::invalid_argument("oracle: KL needs a proper continuous prior");
  }
  std::vector<double> centers{r_hat, 0.0};
  std::vector<double> scales{std::sqrt(nu_r), 1.0};
  auto logf = [&](double x) { return prior_log_density(ch, x) + ln_normal(x, r_hat, nu_r); };
  const auto pts = breakpoints(centers, scales);
  const Tilted t = tilt(logf, pts);
  // f ln(f/p) = f (ln N(x; r, nu) - ln C)
  auto integrand = [&](double x) {
    const double lf = logf(x) - t.log_partition;
    return std::exp(lf) * (ln_normal(x, r_hat, nu_r) - t.log_partition);
  };
  return integrate(integrand, pts);
}

double map_prox_z(const OutputChannel& ch, double p_hat, double nu_p) {
  auto obj = [&](double z) {
    return -std::log(likelihood_density(ch, z)) + (z - p_hat) * (z - p_hat) / (2.0 * nu_p);
  };
  const double lo = std::min(p_hat, ch.y) - 1.0;
  const double hi = std::max(p_hat, ch.y) + 1.0;
  return argmin_scan(obj, lo, hi);
}

double map_prox_x(const InputChannel& ch, double r_hat, double nu_r) {
  if (std::holds_alternative<prior::BernoulliGauss>(ch.kind)) {
    throw std::invalid_argument("oracle: no MAP prox for a point-mass prior");
  }
  auto obj = [&](double x) { return -prior_log_density(ch, x) + (x - r_hat) * (x - r_hat) / (2.0 * nu_r); };
  const double w = 10.0 * std::sqrt(nu_r) + 1.0;
  return argmin_scan(obj, std::min(r_hat, 0.0) - w, std::max(r_hat, 0.0) + w);
}

double closed_form_mean(const OutputChannel& ch, double p, double nu_p) {
  if (const auto* a = std::get_if<likelihood::Awgn>(&ch.kind)) {
    return (a->noise_var * p + nu_p * ch.y) / (a->noise_var + nu_p);
  }
  if (std::holds_alternative<likelihood::Sign>(ch.kind)) {
    const long double sd = std::sqrt(static_cast<long double>(nu_p));
    const long double a = ch.y * p / sd;
    return static_cast<double>(p + ch.y * sd * mills_ratio(a));
  }
  throw std::invalid_argument("oracle: closed-form mean only for AWGN and sign channels");
}

double bisection_ptilde(const OutputChannel& ch, double target, double nu_p) {
  auto f = [&](double p) { return closed_form_mean(ch, p, nu_p) - target; };
  double lo = target - 1.0, hi = target + 1.0;
  for (int i = 0; f(lo) > 0.0 && i < 200; ++i) lo -= (hi - lo);
  for (int i = 0; f(hi) < 0.0 && i < 200; ++i) hi += (hi - lo);
  if (f(lo) > 0.0 || f(hi) < 0.0) throw std::runtime_error("oracle: bisection failed to bracket");
  for (int i = 0; i < 400 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<ReferenceState> reference_gamp(const Matrix& a, const Vector& y, double noise_var,
                                           double sparsity, double slab_mean, double slab_var,
                                           int iterations) {
  const auto m = a.rows();
  const auto n = a.cols();
  const Matrix a2 = a.cwiseAbs2();

  ReferenceState s;
  s.x_hat = Vector::Constant(n, sparsity * slab_mean);
  s.nu_x = Vector::Constant(n, sparsity * (slab_var + slab_mean * slab_mean) -
                                   sparsity * sparsity * slab_mean * slab_mean);
  s.nu_p = a2 * s.nu_x;
  s.p_hat = a * s.x_hat;
  s.s_hat = Vector::Zero(m);

  std::vector<ReferenceState> out;
  for (int t = 0; t < iterations; ++t) {
    ReferenceState nx;
    // Output: Gaussian likelihood, closed form.
    nx.z_hat.resize(m);
    nx.nu_z.resize(m);
    nx.s_hat.resize(m);
    nx.nu_s.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double vp = s.nu_p[i];
      nx.nu_z[i] = vp * noise_var / (vp + noise_var);
      nx.z_hat[i] = (noise_var * s.p_hat[i] + vp * y[i]) / (vp + noise_var);
      nx.s_hat[i] = (nx.z_hat[i] - s.p_hat[i]) / vp;
      nx.nu_s[i] = (1.0 - nx.nu_z[i] / vp) / vp;
    }
    nx.nu_r = (a2.transpose() * nx.nu_s).cwiseInverse();
    nx.r_hat = s.x_hat + nx.nu_r.cwiseProduct(a.transpose() * nx.s_hat);

    // Input: spike and slab, closed form.
    nx.x_hat.resize(n);
    nx.nu_x.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double r = nx.r_hat[j];
      const double v = nx.nu_r[j];
      const double log_on = std::log(sparsity) + ln_normal(r, slab_mean, v + slab_var);
      const double log_off = std::log(1.0 - sparsity) + ln_normal(r, 0.0, v);
      const double pi = 1.0 / (1.0 + std::exp(log_off - log_on));
      const double mean = (r * slab_var + slab_mean * v) / (slab_var + v);
      const double var = slab_var * v / (slab_var + v);
      nx.x_hat[j] = pi * mean;
      nx.nu_x[j] = pi * (var + mean * mean) - nx.x_hat[j] * nx.x_hat[j];
    }
    nx.nu_p = a2 * nx.nu_x;
    nx.p_hat = a * nx.x_hat - nx.nu_p.cwiseProduct(nx.s_hat);
    out.push_back(nx);
    s = nx;
  }
  return out;
}

double genie_least_squares_db(const Matrix& a, const Vector& x, const std::vector<Eigen::Index>& support,
                              const Vector& y, double noise_var, double active_var) {
  if (!(noise_var > 0.0)) throw std::invalid_argument("oracle: genie needs positive noise variance");
  const auto m = a.rows();
  const auto k = static_cast<Eigen::Index>(support.size());
  Matrix stacked = Matrix::Zero(m + k, k);
  Vector rhs = Vector::Zero(m + k);
  const double sw = 1.0 / std::sqrt(noise_var);
  for (Eigen::Index j = 0; j < k; ++j) stacked.col(j).head(m) = sw * a.col(support[static_cast<std::size_t>(j)]);
  stacked.bottomRows(k).diagonal().setConstant(1.0 / std::sqrt(active_var));
  rhs.head(m) = sw * y;
  const Vector xs = stacked.colPivHouseholderQr().solve(rhs);
  Vector est = Vector::Zero(x.size());
  for (Eigen::Index j = 0; j < k; ++j) est[support[static_cast<std::size_t>(j)]] = xs[j];
  return 10.0 * std::log10((est - x).squaredNorm() / x.squaredNorm());
}

double gaussian_log_evidence(const Matrix& a, const Vector& y, double noise_var, const Vector& prior_mean,
                             const Vector& prior_var) {
  const auto m = a.rows();
  Matrix cov = a * prior_var.asDiagonal() * a.transpose();
  cov.diagonal().array() += noise_var;
  const Eigen::LLT<Matrix> llt(cov);
  const Vector r = y - a * prior_mean;
  const Vector w = llt.solve(r);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (r.dot(w) + logdet + static_cast<double>(m) * std::log(2.0 * M_PI));
}

}  // namespace adgamp::oracle
