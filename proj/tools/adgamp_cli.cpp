// Command-line experiment runner.
//
//   adgamp run <config.json> [--threads N] [--seed S] [--out DIR]
//   adgamp smoke             [--threads N] [--seed S] [--out DIR]
//   adgamp oracle
//
// Exit status: 0 success, 2 configuration error, 3 at least one solver run
// aborted.

#include <chrono>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "adgamp/cost.hpp"
#include "adgamp/ensembles.hpp"
#include "adgamp/harness.hpp"
#include "oracle/oracle.hpp"

namespace {

using namespace adgamp;

constexpr int kExitConfig = 2;
constexpr int kExitAborted = 3;

struct RunFlags {
  int threads = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int execute(ExperimentConfig cfg, const RunFlags& flags) {
  if (flags.seed) cfg.root_seed = *flags.seed;
  if (!flags.out.empty()) cfg.output_dir = flags.out;
  const int threads = flags.threads > 0 ? flags.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  const auto start = std::chrono::steady_clock::now();
  const ExperimentResult res = run_experiment(cfg, threads);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  write_results(res, cfg.output_dir);
  emit_plots(res, cfg.output_dir);

  std::cout << std::setprecision(4);
  std::cout << to_string(cfg.problem) << "  N=" << cfg.n << " M=" << cfg.m << " tau=" << cfg.sparsity
            << " trials=" << cfg.trials << "  (" << secs << " s, " << threads << " threads)\n";
  for (const auto& row : res.summary) {
    std::cout << "  " << std::left << std::setw(18) << to_string(row.ensemble) << std::setw(8) << row.sweep_value
              << std::setw(9) << row.solver << std::right << std::setw(10) << row.mean_nmse_db << " dB"
              << std::setw(8) << row.mean_iterations << " it";
    if (row.aborted) std::cout << "  aborted=" << row.aborted;
    std::cout << '\n';
  }
  std::cout << "results written to " << cfg.output_dir.string() << '\n';
  return res.any_aborted() ? kExitAborted : 0;
}

void print_oracle_table() {
  std::cout << std::setprecision(17);
  std::cout << "# channel quadrature: name p_hat nu_p ln_partition mean var\n";
  const OutputChannel outs[] = {OutputChannel::awgn(0.7, 0.1), OutputChannel::outlier_mixture(-0.4, 0.1, 0.01, 1.0),
                                OutputChannel::sign(1.0), OutputChannel::sign(-1.0)};
  for (const auto& ch : outs) {
    for (double p : {-1.5, 0.0, 2.0}) {
      const auto t = oracle::tilted_output(ch, p, 0.5);
      std::cout << ch.name() << ' ' << p << ' ' << 0.5 << ' ' << t.log_partition << ' ' << t.mean << ' ' << t.var
                << '\n';
    }
  }
  const InputChannel ins[] = {InputChannel::bernoulli_gauss(0.2, 0.0, 1.0), InputChannel::gauss(0.3, 2.0),
                              InputChannel::laplace(1.5)};
  for (const auto& ch : ins) {
    for (double r : {-1.5, 0.0, 2.0}) {
      const auto t = oracle::tilted_input(ch, r, 0.3);
      std::cout << ch.name() << ' ' << r << ' ' << 0.3 << ' ' << t.log_partition << ' ' << t.mean << ' ' << t.var
                << '\n';
    }
  }

  std::cout << "# moment-matched p_tilde (bisection): channel target nu_p p_tilde\n";
  for (double target : {-0.8, 0.25, 1.7}) {
    const auto ch = OutputChannel::sign(1.0);
    std::cout << ch.name() << ' ' << target << ' ' << 0.6 << ' ' << oracle::bisection_ptilde(ch, target, 0.6)
              << '\n';
  }

  std::cout << "# ill-conditioned ensemble: rows cols kappa sigma_max/sigma_min ||A||_F^2\n";
  for (double kappa : {10.0, 1000.0}) {
    EnsembleSpec es{EnsembleKind::ill_conditioned, kappa, 32, 64, 7};
    const Matrix a = gen_matrix(es);
    const Eigen::JacobiSVD<Matrix> svd(a);
    const Vector s = svd.singularValues();
    std::cout << 32 << ' ' << 64 << ' ' << kappa << ' ' << s[0] / s[s.size() - 1] << ' ' << a.squaredNorm() << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptively damped GAMP experiment runner"};
  app.require_subcommand(1);

  RunFlags flags;
  std::string config_path;
  std::uint64_t seed = 0;

  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--threads", flags.threads, "worker threads (default: hardware concurrency)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", seed, "override root_seed");
    sub->add_option("--out", flags.out, "output directory");
  };

  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("config", config_path, "config file")->required();
  add_run_flags(run);
  auto* smoke = app.add_subcommand("smoke", "run the built-in desk-scale experiment");
  add_run_flags(smoke);
  auto* oracle_cmd = app.add_subcommand("oracle", "print reference values computed by independent routes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (oracle_cmd->parsed()) {
      print_oracle_table();
      return 0;
    }
    for (auto* sub : {run, smoke}) {
      if (sub->parsed() && sub->count("--seed")) flags.seed = seed;
    }
    if (run->parsed()) return execute(load_config(config_path), flags);
    return execute(smoke_config(), flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
