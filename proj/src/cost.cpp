#include "adgamp/cost.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace adgamp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_sizes(Eigen::Index got, std::size_t want, const char* what) {
  if (got != static_cast<Eigen::Index>(want)) throw std::invalid_argument(what);
}
}  // namespace

void NewtonConfig::validate() const {
  if (!(step > 0.0 && step <= 1.0)) throw std::invalid_argument("newton: step must be in (0,1]");
  if (!(regularizer >= 0.0)) throw std::invalid_argument("newton: regularizer must be >= 0");
  if (max_iters < 1) throw std::invalid_argument("newton: max_iters must be >= 1");
  if (!(tolerance >= 0.0)) throw std::invalid_argument("newton: tolerance must be >= 0");
}

PtildeSolve newton_ptilde(double target, double nu_p, const OutputChannel& ch,
                          const NewtonConfig& cfg, double p_init) {
  double p = p_init;
  for (int i = 1; i <= cfg.max_iters; ++i) {
    const Moments post = posterior_z(ch, p, nu_p);
    const double err = target - post.mean;
    if (std::abs(err) / std::max(std::abs(post.mean), 1e-12) < cfg.tolerance) {
      return {p, i, true, false};
    }
    const double grad = post.var / nu_p;
    const double denom = grad * grad + cfg.regularizer;
    if (denom == 0.0) return {p, i, false, true};
    p += cfg.step * err * grad / denom;
    if (!std::isfinite(p)) return {p, i, false, true};
  }
  return {p, cfg.max_iters, false, false};
}

PtildeSolve moment_matched_ptilde(double target, double nu_p, const OutputChannel& ch,
                                  const NewtonConfig& cfg, double p_init) {
  if (const auto* awgn = std::get_if<likelihood::Awgn>(&ch.kind)) {
    const double nu_w = awgn->noise_var;
    return {((nu_p + nu_w) * target - nu_p * ch.y) / nu_w, 0, true, false};
  }
  if (std::holds_alternative<likelihood::DiracZero>(ch.kind)) {
    // g_z is identically zero; the row is scored at p̃ = target instead.
    return {target, 0, true, false};
  }
  return newton_ptilde(target, nu_p, ch, cfg, p_init);
}

double bethe_input_term(const InputChannel& ch, double r_hat, double nu_r) {
  const Moments post = posterior_x(ch, r_hat, nu_r);
  const double d = post.mean - r_hat;
  return -(log_partition_x(ch, r_hat, nu_r) + 0.5 * std::log(nu_r) +
           (post.var + d * d) / (2.0 * nu_r));
}

double bethe_output_term(const OutputChannel& ch, double p_hat, double nu_p) {
  const Moments post = posterior_z(ch, p_hat, nu_p);
  const double d = post.mean - p_hat;
  return -(log_partition_z(ch, p_hat, nu_p) + d * d / (2.0 * nu_p));
}

double bethe_cost(VectorCRef r_hat, VectorCRef nu_r, VectorCRef p_hat, VectorCRef nu_p,
                  std::span<const InputChannel> in, std::span<const OutputChannel> out) {
  check_sizes(r_hat.size(), in.size(), "bethe_cost: r_hat/input channel size mismatch");
  check_sizes(nu_r.size(), in.size(), "bethe_cost: nu_r/input channel size mismatch");
  check_sizes(p_hat.size(), out.size(), "bethe_cost: p_hat/output channel size mismatch");
  check_sizes(nu_p.size(), out.size(), "bethe_cost: nu_p/output channel size mismatch");

  double cost = 0.0;
  for (std::size_t m = 0; m < out.size(); ++m) cost += bethe_output_term(out[m], p_hat[m], nu_p[m]);
  for (std::size_t n = 0; n < in.size(); ++n) cost += bethe_input_term(in[n], r_hat[n], nu_r[n]);
  return cost;
}

double map_cost(VectorCRef x_hat, const LinearOperator& op, std::span<const InputChannel> in,
                std::span<const OutputChannel> out) {
  check_sizes(x_hat.size(), in.size(), "map_cost: x_hat/input channel size mismatch");
  check_sizes(op.rows(), out.size(), "map_cost: operator/output channel size mismatch");

  const Vector z = op.apply(x_hat);
  double cost = 0.0;
  for (std::size_t m = 0; m < out.size(); ++m) {
    const double ll = log_likelihood(out[m], z[m]);
    if (ll == -kInf) return kInf;
    cost -= ll;
  }
  for (std::size_t n = 0; n < in.size(); ++n) cost -= log_prior(in[n], x_hat[n]);
  return cost;
}

MmseCost mmse_cost(VectorCRef r_hat, VectorCRef nu_r, VectorCRef x_hat_new, VectorCRef p_hat_new,
                   VectorCRef nu_p_new, const LinearOperator& op, std::span<const InputChannel> in,
                   std::span<const OutputChannel> out, const NewtonConfig& cfg) {
  check_sizes(r_hat.size(), in.size(), "mmse_cost: r_hat/input channel size mismatch");
  check_sizes(nu_r.size(), in.size(), "mmse_cost: nu_r/input channel size mismatch");
  check_sizes(p_hat_new.size(), out.size(), "mmse_cost: p_hat/output channel size mismatch");
  check_sizes(nu_p_new.size(), out.size(), "mmse_cost: nu_p/output channel size mismatch");

  const Vector target = op.apply(x_hat_new);
  MmseCost result{0.0, false, 0};
  for (std::size_t m = 0; m < out.size(); ++m) {
    const double nu_p = nu_p_new[m];
    if (std::holds_alternative<likelihood::DiracZero>(out[m].kind)) {
      result.value -= gaussian::log_pdf(0.0, target[m], nu_p);
      continue;
    }
    const double init = cfg.init == NewtonConfig::Init::p_hat ? p_hat_new[m] : target[m];
    const PtildeSolve solve = moment_matched_ptilde(target[m], nu_p, out[m], cfg, init);
    if (!solve.converged) {
      result.suspect = true;
      ++result.unmet_rows;
    }
    if (!std::isfinite(solve.p_tilde)) {
      result.value = kInf;
      continue;
    }
    result.value += bethe_output_term(out[m], solve.p_tilde, nu_p);
  }
  for (std::size_t n = 0; n < in.size(); ++n) result.value += bethe_input_term(in[n], r_hat[n], nu_r[n]);
  return result;
}

}  // namespace adgamp
