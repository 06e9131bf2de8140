#include "adgamp/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace adgamp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kVarFloor = 1e-12;
constexpr double kVarCeil = 1e12;
constexpr double kMaxZRatio = 1.0 - 1e-14;

bool all_finite(const Vector& v) { return v.allFinite(); }

// Damped variances must stay strictly positive; +inf is clipped, NaN or
// nonpositive is a breakdown.
void guard_variance(Vector& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) throw NumericalBreakdown(std::string(what) + " is nonpositive or NaN");
    v[i] = std::clamp(v[i], kVarFloor, kVarCeil);
  }
}

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::max_iterations:
      return "max_iterations";
    case SolveStatus::aborted:
      return "aborted";
  }
  return "unknown";
}

void DampingConfig::validate() const {
  auto fail = [](const char* msg) { throw std::invalid_argument(std::string("damping: ") + msg); };
  if (max_iters < 1) fail("max_iters must be >= 1");
  if (!(tolerance >= 0.0)) fail("tolerance must be >= 0");
  if (window < 0) fail("window must be >= 0");
  if (!(beta_max > 0.0 && beta_max <= 1.0)) fail("beta_max must be in (0,1]");
  if (!(beta_min >= 0.0 && beta_min <= beta_max)) fail("beta_min must be in [0,beta_max]");
  if (!(gain_pass >= 1.0)) fail("gain_pass must be >= 1");
  if (!(gain_fail < 1.0 && gain_fail > 0.0)) fail("gain_fail must be in (0,1)");
  if (max_consecutive_fails < 1) fail("max_consecutive_fails must be >= 1");
}

DampingConfig DampingConfig::undamped(int max_iters, double tolerance) {
  DampingConfig cfg;
  cfg.max_iters = max_iters;
  cfg.tolerance = tolerance;
  cfg.beta_max = 1.0;
  cfg.beta_min = 1.0;
  cfg.adaptive = false;
  return cfg;
}

AdGamp::AdGamp(std::shared_ptr<const LinearOperator> op, std::vector<InputChannel> in,
               std::vector<OutputChannel> out, SolverOptions options)
    : op_(std::move(op)), in_(std::move(in)), out_(std::move(out)), opts_(std::move(options)) {
  if (!op_) throw std::invalid_argument("AdGamp: null operator");
  if (static_cast<Eigen::Index>(in_.size()) != op_->cols()) {
    throw std::invalid_argument("AdGamp: input channel count does not match operator columns");
  }
  if (static_cast<Eigen::Index>(out_.size()) != op_->rows()) {
    throw std::invalid_argument("AdGamp: output channel count does not match operator rows");
  }
  opts_.damping.validate();
  opts_.newton.validate();
}

GampState AdGamp::initialize() const {
  const auto n = op_->cols();
  Vector x_hat(n), nu_x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Moments m = prior_moments(in_[i]);
    x_hat[i] = m.mean;
    nu_x[i] = m.var;
  }
  return initialize(x_hat, nu_x);
}

GampState AdGamp::initialize(const Vector& x_hat, const Vector& nu_x) const {
  const auto n = op_->cols();
  const auto m = op_->rows();
  if (x_hat.size() != n || nu_x.size() != n) {
    throw std::invalid_argument("initialize: x_hat/nu_x length does not match operator columns");
  }

  GampState st;
  Iterate& it = st.cur;
  it.x_hat = x_hat;
  it.nu_x = nu_x;
  it.p_hat = op_->apply(x_hat);
  it.nu_p = op_->abs2_apply(nu_x);
  guard_variance(it.nu_p, "initial nu_p");

  // Pre-history; with beta(1) = 1 these carry zero weight.
  it.x_tilde = x_hat;
  it.r_hat = x_hat;
  it.nu_r = Vector::Ones(n);
  it.s_hat = Vector::Zero(m);
  it.nu_s = Vector::Zero(m);
  it.z_hat = Vector::Zero(m);
  it.nu_z = Vector::Zero(m);

  st.beta = std::min(1.0, opts_.damping.beta_max);
  st.t = 1;
  st.cost_history = {kInf};
  return st;
}

OutputStage AdGamp::output_stage(const GampState& state) const {
  const Iterate& it = state.cur;
  const auto m = op_->rows();
  OutputStage stage{Vector(m), Vector(m)};
  for (Eigen::Index i = 0; i < m; ++i) {
    const Moments z = estimate_z(opts_.mode, out_[i], it.p_hat[i], it.nu_p[i]);
    stage.z_hat[i] = z.mean;
    stage.nu_z[i] = z.var;
  }
  return stage;
}

Iterate AdGamp::iterate_once(const GampState& state, double beta) const {
  return iterate_once(state, output_stage(state), beta);
}

Iterate AdGamp::iterate_once(const GampState& state, const OutputStage& stage, double beta) const {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("iterate_once: beta must be in (0,1]");
  const Iterate& old = state.cur;
  const DampingConfig& dc = opts_.damping;
  const double keep = 1.0 - beta;
  const auto n = op_->cols();
  const auto m = op_->rows();

  Iterate c;
  c.z_hat = stage.z_hat;
  c.nu_z = stage.nu_z;

  // output messages
  c.nu_s.resize(m);
  c.s_hat.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double nu_p = old.nu_p[i];
    const double ratio = std::clamp(stage.nu_z[i] / nu_p, 0.0, kMaxZRatio);
    c.nu_s[i] = beta * (1.0 - ratio) / nu_p + keep * old.nu_s[i];
    c.s_hat[i] = beta * (stage.z_hat[i] - old.p_hat[i]) / nu_p + keep * old.s_hat[i];
  }
  if (!all_finite(c.nu_s) || !all_finite(c.s_hat)) throw NumericalBreakdown("s messages are not finite");

  c.x_tilde = beta * old.x_hat + keep * old.x_tilde;

  // input variances
  const Vector col_prec = op_->abs2_adjoint(c.nu_s);
  c.nu_r = col_prec.cwiseInverse();
  if (dc.damp_nu_r) c.nu_r = beta * c.nu_r + keep * old.nu_r;
  guard_variance(c.nu_r, "nu_r");

  c.r_hat = c.x_tilde + c.nu_r.cwiseProduct(op_->adjoint(c.s_hat));
  if (!all_finite(c.r_hat)) throw NumericalBreakdown("r_hat is not finite");

  // input denoiser
  c.x_hat.resize(n);
  c.nu_x.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Moments x = estimate_x(opts_.mode, in_[j], c.r_hat[j], c.nu_r[j]);
    c.x_hat[j] = x.mean;
    c.nu_x[j] = x.var;
  }
  if (!all_finite(c.x_hat) || !all_finite(c.nu_x)) throw NumericalBreakdown("x estimates are not finite");

  // output variances and means
  c.nu_p = op_->abs2_apply(c.nu_x);
  if (dc.damp_nu_p) c.nu_p = beta * c.nu_p + keep * old.nu_p;
  guard_variance(c.nu_p, "nu_p");

  c.p_hat = op_->apply(c.x_hat) - c.nu_p.cwiseProduct(c.s_hat);
  if (!all_finite(c.p_hat)) throw NumericalBreakdown("p_hat is not finite");
  return c;
}

CostEval AdGamp::evaluate_cost(const Iterate& c) const {
  if (opts_.mode == Mode::map) return {map_cost(c.x_hat, *op_, in_, out_), false, true};
  const MmseCost mc = mmse_cost(c.r_hat, c.nu_r, c.x_hat, c.p_hat, c.nu_p, *op_, in_, out_, opts_.newton);
  return {mc.value, mc.suspect, true};
}

Decision AdGamp::register_failure(GampState& state) const {
  const DampingConfig& dc = opts_.damping;
  state.beta = std::max(dc.beta_min, dc.gain_fail * state.beta);
  ++state.consecutive_fails;
  ++state.total_fails;
  return state.consecutive_fails > dc.max_consecutive_fails ? Decision::aborted : Decision::retry;
}

Decision AdGamp::adapt_and_accept(GampState& state, Iterate&& candidate, const CostEval& cost) const {
  const DampingConfig& dc = opts_.damping;
  const bool at_floor = state.beta == dc.beta_min;
  if (cost.evaluated && cost.suspect) ++state.suspect_costs;

  bool passes_window = false;
  if (!cost.evaluated) {
    passes_window = true;
  } else if (!(cost.suspect && dc.reject_suspect_cost) && !std::isnan(cost.value)) {
    const auto& hist = state.cost_history;
    const std::size_t span = std::min<std::size_t>(static_cast<std::size_t>(dc.window) + 1, hist.size());
    const double worst = *std::max_element(hist.end() - static_cast<std::ptrdiff_t>(span), hist.end());
    passes_window = cost.value <= worst;
  }

  if (!passes_window && !at_floor) return register_failure(state);

  double recorded = std::numeric_limits<double>::quiet_NaN();
  if (cost.evaluated) recorded = std::isnan(cost.value) ? kInf : cost.value;

  const Vector& before = state.cur.x_hat;
  const double change = (before - candidate.x_hat).norm();
  const double scale = candidate.x_hat.norm();
  const bool stop = scale < 1e-12 ? change < dc.tolerance : change / scale < dc.tolerance;

  state.cost_history.push_back(recorded);
  state.escape_history.push_back(!passes_window);
  state.beta_history.push_back(state.beta);
  state.consecutive_fails = 0;
  state.cur = std::move(candidate);
  if (stop) return Decision::stopped;

  state.beta = std::min(dc.beta_max, dc.gain_pass * state.beta);
  ++state.t;
  return Decision::accepted;
}

SolveReport AdGamp::run(const Vector* truth) const {
  const DampingConfig& dc = opts_.damping;
  SolveReport report;
  GampState state = initialize();
  SolveStatus status = SolveStatus::max_iterations;

  while (state.t <= dc.max_iters && status == SolveStatus::max_iterations) {
    const OutputStage stage = output_stage(state);
    for (;;) {
      Decision d;
      try {
        Iterate cand = iterate_once(state, stage, state.beta);
        const CostEval cost = dc.adaptive ? evaluate_cost(cand) : CostEval{0.0, false, false};
        d = adapt_and_accept(state, std::move(cand), cost);
      } catch (const NumericalBreakdown& e) {
        if (state.beta == dc.beta_min) {
          report.message = e.what();
          d = Decision::aborted;
        } else {
          d = register_failure(state);
        }
      }
      if (d == Decision::retry) continue;
      if (d == Decision::aborted) {
        status = SolveStatus::aborted;
        if (report.message.empty()) report.message = "exceeded max_consecutive_fails";
      } else {
        if (d == Decision::stopped) status = SolveStatus::converged;
        if (opts_.trace) {
          const double err = truth ? nmse(state.cur.x_hat, *truth) : std::numeric_limits<double>::quiet_NaN();
          opts_.trace({static_cast<int>(state.cost_history.size()) - 1, state.beta_history.back(),
                       state.cost_history.back(), err});
        }
      }
      break;
    }
  }

  const Iterate& it = state.cur;
  report.x_hat = it.x_hat;
  report.nu_x = it.nu_x;
  report.r_hat = it.r_hat;
  report.nu_r = it.nu_r;
  report.p_hat = it.p_hat;
  report.nu_p = it.nu_p;
  report.iterations = static_cast<int>(state.cost_history.size()) - 1;
  report.fails = state.total_fails;
  report.final_cost = state.cost_history.back();
  report.status = status;
  report.converged = status == SolveStatus::converged;
  report.state = std::move(state);
  return report;
}

double nmse(const Vector& estimate, const Vector& truth) {
  if (estimate.size() != truth.size()) throw std::invalid_argument("nmse: length mismatch");
  return (estimate - truth).squaredNorm() / truth.squaredNorm();
}

}  // namespace adgamp
