#include "doctest.h"

#include <cmath>
#include <random>

#include "adgamp/cost.hpp"
#include "adgamp/engine.hpp"
#include "oracle/oracle.hpp"
#include "support.hpp"

using namespace adgamp;
using testsupport::close;
using testsupport::randn;
using testsupport::randv;

namespace {

NewtonConfig tight() {
  NewtonConfig cfg;
  cfg.tolerance = 1e-12;
  cfg.max_iters = 200;
  return cfg;
}

}  // namespace

TEST_SUITE("cost") {
  TEST_CASE("newton config validation") {
    NewtonConfig c;
    CHECK_NOTHROW(c.validate());
    c.step = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = NewtonConfig{};
    c.regularizer = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = NewtonConfig{};
    c.max_iters = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  }

  TEST_CASE("newton matches the awgn closed form") {
    const auto ch = OutputChannel::awgn(0.4, 0.3);
    const double target = -0.2, nu_p = 0.8;
    const PtildeSolve n = newton_ptilde(target, nu_p, ch, tight(), 0.0);
    CHECK(n.converged);
    CHECK(close(n.p_tilde, ((nu_p + 0.3) * target - nu_p * 0.4) / 0.3, 1e-8));
    const PtildeSolve c = moment_matched_ptilde(target, nu_p, ch, tight(), 0.0);
    CHECK(c.iterations == 0);
    CHECK(close(c.p_tilde, n.p_tilde, 1e-8));
  }

  TEST_CASE("already-matched target stops at the first check") {
    const auto ch = OutputChannel::sign(1.0);
    const double target = posterior_z(ch, 0.3, 1.0).mean;
    const PtildeSolve s = newton_ptilde(target, 1.0, ch, NewtonConfig{}, 0.3);
    CHECK(s.converged);
    CHECK(s.iterations == 1);
    CHECK(s.p_tilde == 0.3);
  }

  TEST_CASE("sign channel newton matches bisection") {
    const auto ch = OutputChannel::sign(1.0);
    const PtildeSolve s = newton_ptilde(0.3, 1.0, ch, tight(), 0.3);
    CHECK(s.converged);
    CHECK(close(s.p_tilde, oracle::bisection_ptilde(ch, 0.3, 1.0), 1e-7));
  }

  TEST_CASE("default newton tolerance: residual bound and agreement with bisection") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> tgt(0.05, 3.0), var(0.2, 3.0);
    const NewtonConfig cfg;
    for (int k = 0; k < 50; ++k) {
      const double y = k % 2 ? 1.0 : -1.0;
      const auto ch = OutputChannel::sign(y);
      const double target = y * tgt(rng), nu_p = var(rng);
      const PtildeSolve s = newton_ptilde(target, nu_p, ch, cfg, target);
      REQUIRE(s.converged);
      const double g = posterior_z(ch, s.p_tilde, nu_p).mean;
      CHECK(std::abs(target - g) / std::max(std::abs(g), 1e-12) < cfg.tolerance);
      // p error is bounded by the residual over the slope nu_z / nu_p.
      const double slope = posterior_z(ch, s.p_tilde, nu_p).var / nu_p;
      CHECK(std::abs(s.p_tilde - oracle::bisection_ptilde(ch, target, nu_p)) <=
            10.0 * cfg.tolerance * std::abs(g) / slope + 1e-12);
    }
  }

  TEST_CASE("infeasible sign target does not converge") {
    // g_z > 0 for y = +1, so a negative target has no solution.
    const auto ch = OutputChannel::sign(1.0);
    const PtildeSolve s = newton_ptilde(-0.5, 1.0, ch, NewtonConfig{}, -0.5);
    CHECK_FALSE(s.converged);
  }

  TEST_CASE("newton reports a stall when the slope vanishes without regularization") {
    NewtonConfig cfg;
    cfg.regularizer = 0.0;
    const PtildeSolve s = newton_ptilde(0.5, 1.0, OutputChannel::dirac_zero(), cfg, 0.0);
    CHECK(s.stalled);
    CHECK_FALSE(s.converged);
  }

  TEST_CASE("map cost: quadratic terms vanish") {
    const auto op = make_dense(Matrix::Identity(1, 1));
    const std::vector<InputChannel> in{InputChannel::gauss(0.0, 1.0)};
    const std::vector<OutputChannel> out{OutputChannel::awgn(0.0, 1.0)};
    CHECK(map_cost(Vector::Zero(1), *op, in, out) == 0.0);
  }

  TEST_CASE("map cost differences equal LASSO objective differences") {
    const Matrix a = randn(6, 9, 21);
    const auto op = make_dense(a);
    const Vector y = randv(6, 22);
    const double nu_w = 0.3, lam = 1.7;
    std::vector<InputChannel> in(9, InputChannel::laplace(lam));
    std::vector<OutputChannel> out;
    for (int i = 0; i < 6; ++i) out.push_back(OutputChannel::awgn(y[i], nu_w));
    auto lasso = [&](const Vector& x) { return (y - a * x).squaredNorm() / (2 * nu_w) + lam * x.lpNorm<1>(); };
    const Vector x1 = randv(9, 23), x2 = randv(9, 24);
    CHECK(close(map_cost(x1, *op, in, out) - map_cost(x2, *op, in, out), lasso(x1) - lasso(x2), 1e-12));
  }

  TEST_CASE("map cost: truth minimizes a consistent noiseless system") {
    const Matrix a = randn(8, 5, 31);
    const auto op = make_dense(a);
    const Vector x = randv(5, 32);
    const Vector y = a * x;
    std::vector<InputChannel> in(5, InputChannel::improper_uniform());
    std::vector<OutputChannel> out;
    for (int i = 0; i < 8; ++i) out.push_back(OutputChannel::outlier_mixture(y[i], 0.1, 1e-4, 1.0));
    const double best = map_cost(x, *op, in, out);
    for (std::uint64_t k = 0; k < 100; ++k) {
      CHECK(map_cost(x + randv(5, 1000 + k, 1e-2), *op, in, out) > best);
    }
  }

  TEST_CASE("map cost: violated dirac or sign rows are infinite") {
    const auto op = make_dense(Matrix::Identity(2, 2));
    const std::vector<InputChannel> in(2, InputChannel::gauss(0.0, 1.0));
    const std::vector<OutputChannel> dirac{OutputChannel::awgn(0.0, 1.0), OutputChannel::dirac_zero()};
    CHECK(std::isinf(map_cost(Vector::Constant(2, 0.1), *op, in, dirac)));
    CHECK(std::isfinite(map_cost(Vector::Unit(2, 0), *op, in, dirac)));
    const std::vector<OutputChannel> sign{OutputChannel::sign(1.0), OutputChannel::sign(-1.0)};
    CHECK(std::isinf(map_cost(Vector::Constant(2, 0.1), *op, in, sign)));
  }

  TEST_CASE("bethe input term equals the quadrature KL up to the dropped constant") {
    for (const auto& ch : {InputChannel::gauss(0.3, 2.0), InputChannel::laplace(1.5)}) {
      for (double r : {-2.0, 0.0, 0.7, 3.0}) {
        for (double v : {0.05, 0.5, 2.0}) {
          const double kl = bethe_input_term(ch, r, v) - 0.5 * std::log(2.0 * M_PI);
          CHECK(close(kl, oracle::input_kl(ch, r, v), 1e-6));
        }
      }
    }
  }

  TEST_CASE("bethe cost: doubling nu_r changes only the input terms") {
    const std::vector<InputChannel> in(3, InputChannel::laplace(1.0));
    const std::vector<OutputChannel> out{OutputChannel::awgn(0.2, 0.5), OutputChannel::sign(-1.0)};
    const Vector r = randv(3, 41), nu_r = Vector::Constant(3, 0.4);
    const Vector p = randv(2, 42), nu_p = Vector::Constant(2, 0.9);
    const double before = bethe_cost(r, nu_r, p, nu_p, in, out);
    const double after = bethe_cost(r, 2.0 * nu_r, p, nu_p, in, out);
    double delta = 0.0;
    for (int n = 0; n < 3; ++n) delta += bethe_input_term(in[n], r[n], 0.8) - bethe_input_term(in[n], r[n], 0.4);
    CHECK(close(after - before, delta, 1e-12));
  }

  TEST_CASE("bethe cost rejects size mismatches") {
    const std::vector<InputChannel> in(3, InputChannel::gauss(0.0, 1.0));
    const std::vector<OutputChannel> out(2, OutputChannel::awgn(0.0, 1.0));
    CHECK_THROWS_AS(bethe_cost(Vector::Zero(2), Vector::Ones(3), Vector::Zero(2), Vector::Ones(2), in, out),
                    std::invalid_argument);
  }

  TEST_CASE("mmse cost for awgn is the bethe cost at the closed-form p tilde") {
    const auto p = testsupport::bg_awgn(10, 16, 0.3, 20.0, 51);
    const auto op = make_dense(p.a);
    const Vector r = randv(16, 52), nu_r = Vector::Constant(16, 0.3);
    Vector x(16);
    for (int n = 0; n < 16; ++n) x[n] = posterior_x(p.in[n], r[n], nu_r[n]).mean;
    const Vector nu_p = Vector::Constant(10, 0.2);
    const Vector target = p.a * x;
    Vector pt(10);
    for (int m = 0; m < 10; ++m) pt[m] = ((nu_p[m] + p.noise_var) * target[m] - nu_p[m] * p.y[m]) / p.noise_var;

    NewtonConfig cfg;
    const MmseCost c = mmse_cost(r, nu_r, x, randv(10, 53), nu_p, *op, p.in, p.out, cfg);
    CHECK_FALSE(c.suspect);
    CHECK(c.value == doctest::Approx(bethe_cost(r, nu_r, pt, nu_p, p.in, p.out)).epsilon(1e-12));

    cfg.init = NewtonConfig::Init::p_hat;
    CHECK(mmse_cost(r, nu_r, x, randv(10, 54), nu_p, *op, p.in, p.out, cfg).value == c.value);
  }

  TEST_CASE("mmse cost: dirac rows contribute the gaussian evidence at the target") {
    const Matrix a = randn(2, 3, 61);
    const auto op = make_dense(a);
    const std::vector<InputChannel> in(3, InputChannel::gauss(0.0, 1.0));
    const std::vector<OutputChannel> out{OutputChannel::awgn(0.3, 0.5), OutputChannel::dirac_zero()};
    const Vector r = randv(3, 62), nu_r = Vector::Constant(3, 0.7);
    Vector x(3);
    for (int n = 0; n < 3; ++n) x[n] = posterior_x(in[n], r[n], nu_r[n]).mean;
    const Vector nu_p = Vector::Constant(2, 0.6);
    const double t1 = (a * x)[1];
    const MmseCost with = mmse_cost(r, nu_r, x, Vector::Zero(2), nu_p, *op, in, out, NewtonConfig{});
    const std::vector<OutputChannel> only{out[0]};
    const auto op1 = make_dense(a.topRows(1));
    const MmseCost without = mmse_cost(r, nu_r, x, Vector::Zero(1), nu_p.head(1), *op1, in, only, NewtonConfig{});
    const double expect = 0.5 * std::log(2.0 * M_PI * 0.6) + t1 * t1 / (2.0 * 0.6);
    CHECK(close(with.value - without.value, expect, 1e-12));
  }

  TEST_CASE("mmse cost is stationary at a gaussian fixed point") {
    const Matrix a = randn(12, 8, 71, 1.0 / std::sqrt(8.0));
    const Vector y = randv(12, 72);
    std::vector<InputChannel> in(8, InputChannel::gauss(0.0, 1.0));
    std::vector<OutputChannel> out;
    for (int i = 0; i < 12; ++i) out.push_back(OutputChannel::awgn(y[i], 0.2));
    SolverOptions opts;
    opts.damping = DampingConfig::undamped(3000, 0.0);
    const AdGamp solver(make_dense(a), in, out, opts);
    const SolveReport rep = solver.run();
    GampState st = rep.state;
    const Iterate c1 = solver.iterate_once(st, 1.0);
    st.cur = c1;
    const Iterate c2 = solver.iterate_once(st, 1.0);
    CHECK(std::abs(solver.evaluate_cost(c1).value - solver.evaluate_cost(c2).value) < 1e-8);
  }
}
