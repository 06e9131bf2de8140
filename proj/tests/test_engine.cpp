#include "doctest.h"

#include <cmath>

#include "adgamp/engine.hpp"
#include "oracle/oracle.hpp"
#include "support.hpp"

using namespace adgamp;
using testsupport::bit_equal;
using testsupport::max_rel_diff;
using testsupport::randn;
using testsupport::randv;

namespace {

AdGamp gaussian_problem(const Matrix& a, const Vector& y, double nu_w, SolverOptions opts) {
  std::vector<InputChannel> in(static_cast<std::size_t>(a.cols()), InputChannel::gauss(0.0, 1.0));
  std::vector<OutputChannel> out;
  for (Eigen::Index i = 0; i < a.rows(); ++i) out.push_back(OutputChannel::awgn(y[i], nu_w));
  return AdGamp(make_dense(a), std::move(in), std::move(out), std::move(opts));
}

GampState advance(const AdGamp& s, int steps, double beta) {
  GampState st = s.initialize();
  for (int k = 0; k < steps; ++k) {
    st.cur = s.iterate_once(st, beta);
    ++st.t;
  }
  return st;
}

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("undamped iterations reproduce the reference recursion") {
    const auto p = testsupport::bg_awgn(60, 100, 0.2, 30.0, 101);
    SolverOptions opts;
    opts.damping = DampingConfig::undamped();
    const AdGamp solver(make_dense(p.a), p.in, p.out, opts);
    const auto ref = oracle::reference_gamp(p.a, p.y, p.noise_var, 0.2, 0.0, 1.0, 15);

    GampState st = solver.initialize();
    for (int t = 0; t < 15; ++t) {
      st.cur = solver.iterate_once(st, 1.0);
      const auto& r = ref[static_cast<std::size_t>(t)];
      CHECK(max_rel_diff(st.cur.x_hat, r.x_hat) < 1e-12);
      CHECK(max_rel_diff(st.cur.nu_x, r.nu_x) < 1e-12);
      CHECK(max_rel_diff(st.cur.r_hat, r.r_hat) < 1e-12);
      CHECK(max_rel_diff(st.cur.nu_r, r.nu_r) < 1e-12);
      CHECK(max_rel_diff(st.cur.p_hat, r.p_hat) < 1e-12);
      CHECK(max_rel_diff(st.cur.nu_p, r.nu_p) < 1e-12);
      CHECK(max_rel_diff(st.cur.s_hat, r.s_hat) < 1e-12);
    }
  }

  TEST_CASE("damped messages mix with the previous iteration") {
    const auto p = testsupport::bg_awgn(30, 50, 0.2, 20.0, 111);
    const AdGamp solver(make_dense(p.a), p.in, p.out, SolverOptions{});
    const GampState st = advance(solver, 3, 0.7);
    const double beta = 0.3;
    const OutputStage stage = solver.output_stage(st);
    const Iterate c = solver.iterate_once(st, stage, beta);
    const Iterate& o = st.cur;

    const Vector nu_s = beta * (Vector::Ones(30) - stage.nu_z.cwiseQuotient(o.nu_p)).cwiseQuotient(o.nu_p) +
                        (1 - beta) * o.nu_s;
    const Vector s_hat = beta * (stage.z_hat - o.p_hat).cwiseQuotient(o.nu_p) + (1 - beta) * o.s_hat;
    CHECK(max_rel_diff(c.nu_s, nu_s) < 1e-13);
    CHECK(max_rel_diff(c.s_hat, s_hat) < 1e-13);
    CHECK(max_rel_diff(c.x_tilde, beta * o.x_hat + (1 - beta) * o.x_tilde) < 1e-13);

    const Matrix a2 = p.a.cwiseAbs2();
    const Vector nu_r = beta * (a2.transpose() * c.nu_s).cwiseInverse() + (1 - beta) * o.nu_r;
    CHECK(max_rel_diff(c.nu_r, nu_r) < 1e-13);
    CHECK(max_rel_diff(c.r_hat, c.x_tilde + nu_r.cwiseProduct(p.a.transpose() * c.s_hat)) < 1e-13);
    const Vector nu_p = beta * (a2 * c.nu_x) + (1 - beta) * o.nu_p;
    CHECK(max_rel_diff(c.nu_p, nu_p) < 1e-13);
    CHECK(max_rel_diff(c.p_hat, p.a * c.x_hat - nu_p.cwiseProduct(c.s_hat)) < 1e-13);
  }

  TEST_CASE("variance damping can be switched off") {
    const auto p = testsupport::bg_awgn(30, 50, 0.2, 20.0, 112);
    SolverOptions opts;
    opts.damping.damp_nu_r = false;
    opts.damping.damp_nu_p = false;
    const AdGamp solver(make_dense(p.a), p.in, p.out, opts);
    const GampState st = advance(solver, 2, 0.6);
    const Iterate c = solver.iterate_once(st, 0.25);
    const Matrix a2 = p.a.cwiseAbs2();
    CHECK(max_rel_diff(c.nu_r, (a2.transpose() * c.nu_s).cwiseInverse()) < 1e-13);
    CHECK(max_rel_diff(c.nu_p, a2 * c.nu_x) < 1e-13);
  }

  TEST_CASE("a failed attempt leaves the accepted state untouched") {
    const auto p = testsupport::bg_awgn(30, 50, 0.2, 20.0, 121);
    const AdGamp solver(make_dense(p.a), p.in, p.out, SolverOptions{});
    GampState st = advance(solver, 2, 1.0);
    st.cost_history = {std::numeric_limits<double>::infinity(), 10.0};
    const GampState before = st;

    Iterate cand = solver.iterate_once(st, st.beta);
    const Decision d = solver.adapt_and_accept(st, std::move(cand), CostEval{11.0, false, true});
    CHECK(d == Decision::retry);
    CHECK(st.beta == 0.5 * before.beta);
    CHECK(st.consecutive_fails == 1);
    CHECK(st.t == before.t);
    CHECK(st.cost_history == before.cost_history);
    for (auto [a, b] : {std::pair{&st.cur.x_hat, &before.cur.x_hat}, {&st.cur.nu_x, &before.cur.nu_x},
                        {&st.cur.p_hat, &before.cur.p_hat}, {&st.cur.nu_p, &before.cur.nu_p},
                        {&st.cur.s_hat, &before.cur.s_hat}, {&st.cur.nu_s, &before.cur.nu_s},
                        {&st.cur.x_tilde, &before.cur.x_tilde}, {&st.cur.nu_r, &before.cur.nu_r},
                        {&st.cur.r_hat, &before.cur.r_hat}}) {
      CHECK(bit_equal(*a, *b));
    }
  }

  TEST_CASE("pass and escape bookkeeping") {
    const auto p = testsupport::bg_awgn(30, 50, 0.2, 20.0, 122);
    SolverOptions opts;
    opts.damping.tolerance = 0.0;
    const AdGamp solver(make_dense(p.a), p.in, p.out, opts);
    GampState st = advance(solver, 1, 1.0);
    st.cost_history = {std::numeric_limits<double>::infinity(), 10.0};
    st.beta = 0.5;

    CHECK(solver.adapt_and_accept(st, solver.iterate_once(st, st.beta), CostEval{9.0, false, true}) ==
          Decision::accepted);
    CHECK(st.beta == doctest::Approx(0.55));
    CHECK(st.cost_history.back() == 9.0);
    CHECK_FALSE(st.escape_history.back());

    st.beta = 1.0;
    solver.adapt_and_accept(st, solver.iterate_once(st, st.beta), CostEval{8.0, false, true});
    CHECK(st.beta == 1.0);  // capped at beta_max

    st.beta = 0.01;
    CHECK(solver.adapt_and_accept(st, solver.iterate_once(st, st.beta), CostEval{50.0, false, true}) ==
          Decision::accepted);
    CHECK(st.escape_history.back());
    CHECK(st.cost_history.back() == 50.0);
  }

  TEST_CASE("failure shrinks beta down to the floor and aborts past the cap") {
    const auto p = testsupport::bg_awgn(10, 20, 0.2, 20.0, 123);
    SolverOptions opts;
    opts.damping.max_consecutive_fails = 3;
    opts.damping.beta_min = 0.2;
    const AdGamp solver(make_dense(p.a), p.in, p.out, opts);
    GampState st = solver.initialize();
    CHECK(solver.register_failure(st) == Decision::retry);
    CHECK(st.beta == 0.5);
    CHECK(solver.register_failure(st) == Decision::retry);
    CHECK(st.beta == 0.25);
    CHECK(solver.register_failure(st) == Decision::retry);
    CHECK(st.beta == 0.2);
    CHECK(solver.register_failure(st) == Decision::aborted);
    CHECK(st.total_fails == 4);
  }

  TEST_CASE("window compares against the worst recent cost") {
    const auto p = testsupport::bg_awgn(10, 20, 0.2, 20.0, 124);
    for (int window : {0, 1, 2}) {
      SolverOptions opts;
      opts.damping.window = window;
      opts.damping.tolerance = 0.0;
      const AdGamp solver(make_dense(p.a), p.in, p.out, opts);
      GampState st = advance(solver, 1, 1.0);
      st.cost_history = {std::numeric_limits<double>::infinity(), 7.0, 5.0, 3.0};
      const Decision d = solver.adapt_and_accept(st, solver.iterate_once(st, st.beta), CostEval{4.0, false, true});
      CHECK((d == Decision::accepted) == (window >= 1));
      st.cost_history = {std::numeric_limits<double>::infinity(), 7.0, 5.0, 3.0};
      const Decision e = solver.adapt_and_accept(st, solver.iterate_once(st, st.beta), CostEval{6.0, false, true});
      CHECK((e == Decision::accepted) == (window >= 2));
    }
  }

  TEST_CASE("nan cost fails; suspect cost fails only when requested") {
    const auto p = testsupport::bg_awgn(10, 20, 0.2, 20.0, 125);
    for (bool reject : {false, true}) {
      SolverOptions opts;
      opts.damping.reject_suspect_cost = reject;
      opts.damping.tolerance = 0.0;
      const AdGamp solver(make_dense(p.a), p.in, p.out, opts);
      GampState st = advance(solver, 1, 1.0);
      st.cost_history = {std::numeric_limits<double>::infinity(), 5.0};
      CHECK(solver.adapt_and_accept(st, solver.iterate_once(st, st.beta),
                                    CostEval{std::nan(""), false, true}) == Decision::retry);
      const Decision d = solver.adapt_and_accept(st, solver.iterate_once(st, st.beta), CostEval{1.0, true, true});
      CHECK((d == Decision::retry) == reject);
      CHECK(st.suspect_costs == 1);
    }
  }

  TEST_CASE("relative change stop rule") {
    const auto p = testsupport::bg_awgn(10, 20, 0.2, 20.0, 126);
    SolverOptions opts;
    opts.damping = DampingConfig::undamped(1000, 0.5);
    const AdGamp solver(make_dense(p.a), p.in, p.out, opts);
    GampState st = advance(solver, 3, 1.0);
    Iterate cand = st.cur;
    cand.x_hat *= 1.2;  // change / norm = 0.2 / 1.2
    CHECK(solver.adapt_and_accept(st, std::move(cand), CostEval{0.0, false, false}) == Decision::stopped);
  }

  TEST_CASE("gaussian fixed point solves the LMMSE normal equations") {
    const Matrix a = randn(40, 25, 131, 1.0 / 5.0);
    const Vector y = randv(40, 132);
    const double nu_w = 0.1;
    SolverOptions opts;
    opts.damping.tolerance = 1e-13;
    opts.damping.max_iters = 3000;
    const SolveReport rep = gaussian_problem(a, y, nu_w, opts).run();
    CHECK(rep.converged);
    const Matrix lhs = a.transpose() * a / nu_w + Matrix::Identity(25, 25);
    const Vector expect = lhs.llt().solve(a.transpose() * y / nu_w);
    CHECK(max_rel_diff(rep.x_hat, expect) < 1e-8);
  }

  TEST_CASE("map laplace fixed point satisfies the LASSO optimality conditions") {
    const auto p = testsupport::bg_awgn(60, 100, 0.1, 30.0, 141);
    const double lam = 2.0;
    SolverOptions opts;
    opts.mode = Mode::map;
    opts.damping = DampingConfig::undamped(5000, 1e-12);
    const AdGamp solver(make_dense(p.a), std::vector<InputChannel>(100, InputChannel::laplace(lam)), p.out, opts);
    const SolveReport rep = solver.run();
    REQUIRE(rep.converged);
    const Vector g = p.a.transpose() * (p.y - p.a * rep.x_hat) / p.noise_var;
    for (Eigen::Index j = 0; j < 100; ++j) {
      if (rep.x_hat[j] != 0.0) {
        CHECK(g[j] == doctest::Approx(lam * (rep.x_hat[j] > 0 ? 1.0 : -1.0)).epsilon(1e-5));
      } else {
        CHECK(std::abs(g[j]) <= lam * (1 + 1e-5));
      }
    }
  }

  TEST_CASE("accepted costs never increase with zero window") {
    const auto p = testsupport::bg_awgn(50, 100, 0.2, 25.0, 151);
    const AdGamp solver(make_dense(p.a), p.in, p.out, SolverOptions{});
    const SolveReport rep = solver.run();
    const auto& h = rep.state.cost_history;
    for (std::size_t k = 1; k < h.size(); ++k) {
      if (!rep.state.escape_history[k - 1]) CHECK(h[k] <= h[k - 1]);
    }
    CHECK(nmse(rep.x_hat, p.x) < 1e-2);
  }

  TEST_CASE("trace reports every accepted iteration") {
    const auto p = testsupport::bg_awgn(30, 60, 0.2, 25.0, 152);
    SolverOptions opts;
    std::vector<TraceEvent> events;
    opts.trace = [&](const TraceEvent& e) { events.push_back(e); };
    const AdGamp solver(make_dense(p.a), p.in, p.out, opts);
    const SolveReport rep = solver.run(&p.x);
    REQUIRE(static_cast<int>(events.size()) == rep.iterations);
    CHECK(events.back().nmse == doctest::Approx(nmse(rep.x_hat, p.x)));
    for (std::size_t k = 0; k < events.size(); ++k) CHECK(events[k].t == static_cast<int>(k) + 1);
  }

  TEST_CASE("undamped GAMP aborts on a strongly nonzero-mean matrix; adaptive damping does not") {
    Matrix a = randn(64, 128, 161, 1.0 / std::sqrt(128.0));
    a.array() += 1.0;
    std::mt19937_64 rng(162);
    std::bernoulli_distribution on(0.15);
    std::normal_distribution<double> d;
    Vector x = Vector::Zero(128);
    for (Eigen::Index j = 0; j < 128; ++j)
      if (on(rng)) x[j] = d(rng);
    const Vector y = a * x;
    std::vector<InputChannel> in(128, InputChannel::bernoulli_gauss(0.15, 0.0, 1.0));
    std::vector<OutputChannel> out;
    const double nu_w = y.squaredNorm() / 64 * 1e-6;
    for (Eigen::Index i = 0; i < 64; ++i) out.push_back(OutputChannel::awgn(y[i], nu_w));

    SolverOptions plain;
    plain.damping = DampingConfig::undamped();
    const SolveReport g = AdGamp(make_dense(a), in, out, plain).run();
    CHECK((g.status == SolveStatus::aborted || nmse(g.x_hat, x) > 1.0));
    const SolveReport ad = AdGamp(make_dense(a), in, out, SolverOptions{}).run();
    CHECK(ad.status != SolveStatus::aborted);
    CHECK(nmse(ad.x_hat, x) < 1.0);
  }

  TEST_CASE("validation") {
    const auto p = testsupport::bg_awgn(10, 20, 0.2, 20.0, 171);
    CHECK_THROWS_AS(AdGamp(nullptr, p.in, p.out, SolverOptions{}), std::invalid_argument);
    CHECK_THROWS_AS(AdGamp(make_dense(p.a), std::vector<InputChannel>(19, p.in[0]), p.out, SolverOptions{}),
                    std::invalid_argument);
    CHECK_THROWS_AS(AdGamp(make_dense(p.a), p.in, std::vector<OutputChannel>(9, p.out[0]), SolverOptions{}),
                    std::invalid_argument);
    SolverOptions bad;
    bad.damping.beta_min = 0.5;
    bad.damping.beta_max = 0.4;
    CHECK_THROWS_AS(AdGamp(make_dense(p.a), p.in, p.out, bad), std::invalid_argument);
    bad = SolverOptions{};
    bad.damping.gain_fail = 1.0;
    CHECK_THROWS_AS(AdGamp(make_dense(p.a), p.in, p.out, bad), std::invalid_argument);
    bad = SolverOptions{};
    bad.newton.step = 1.5;
    CHECK_THROWS_AS(AdGamp(make_dense(p.a), p.in, p.out, bad), std::invalid_argument);

    const AdGamp ok(make_dense(p.a), p.in, p.out, SolverOptions{});
    GampState st = ok.initialize();
    CHECK_THROWS_AS(ok.iterate_once(st, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ok.iterate_once(st, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(ok.initialize(Vector::Zero(3), Vector::Ones(3)), std::invalid_argument);
  }

  TEST_CASE("zero row gives a numerical breakdown at initialization") {
    Matrix a = randn(5, 8, 181);
    a.row(2).setZero();
    std::vector<InputChannel> in(8, InputChannel::gauss(0.0, 1.0));
    std::vector<OutputChannel> out(5, OutputChannel::awgn(0.0, 1.0));
    const AdGamp solver(make_dense(a), in, out, SolverOptions{});
    CHECK_THROWS_AS(solver.initialize(), NumericalBreakdown);
  }

  TEST_CASE("nmse") {
    CHECK(nmse(Vector::Zero(3), Vector::Ones(3)) == 1.0);
    CHECK_THROWS_AS(nmse(Vector::Zero(2), Vector::Ones(3)), std::invalid_argument);
  }
}
