#include "adgamp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "adgamp/meanremoval.hpp"

namespace adgamp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kGenie = "genie";

bool is_adaptive(SolverKind s) { return s == SolverKind::adgamp || s == SolverKind::madgamp; }
bool is_mean_removed(SolverKind s) { return s == SolverKind::mgamp || s == SolverKind::madgamp; }
bool has_genie(Problem p) { return p != Problem::one_bit_cs; }

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------
// Config parsing

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  const std::set<std::string> ok(known.begin(), known.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
T require_field(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing required field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
void optional_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

void parse_damping(const json& j, DampingConfig& d) {
  reject_unknown(j,
                 {"max_iters", "tolerance", "window", "beta_max", "beta_min", "gain_pass", "gain_fail",
                  "max_consecutive_fails", "damp_nu_r", "damp_nu_p", "reject_suspect_cost"},
                 "damping");
  optional_field(j, "max_iters", d.max_iters);
  optional_field(j, "tolerance", d.tolerance);
  optional_field(j, "window", d.window);
  optional_field(j, "beta_max", d.beta_max);
  optional_field(j, "beta_min", d.beta_min);
  optional_field(j, "gain_pass", d.gain_pass);
  optional_field(j, "gain_fail", d.gain_fail);
  optional_field(j, "max_consecutive_fails", d.max_consecutive_fails);
  optional_field(j, "damp_nu_r", d.damp_nu_r);
  optional_field(j, "damp_nu_p", d.damp_nu_p);
  optional_field(j, "reject_suspect_cost", d.reject_suspect_cost);
}

void parse_newton(const json& j, NewtonConfig& n) {
  reject_unknown(j, {"step", "regularizer", "max_iters", "tolerance", "init"}, "newton");
  optional_field(j, "step", n.step);
  optional_field(j, "regularizer", n.regularizer);
  optional_field(j, "max_iters", n.max_iters);
  optional_field(j, "tolerance", n.tolerance);
  if (j.contains("init")) {
    const auto s = require_field<std::string>(j, "init");
    if (s == "p_hat") {
      n.init = NewtonConfig::Init::p_hat;
    } else if (s == "a_x_hat") {
      n.init = NewtonConfig::Init::a_x_hat;
    } else {
      throw ConfigError("newton.init must be 'p_hat' or 'a_x_hat'");
    }
  }
}

// ---------------------------------------------------------------------------
// Trials

struct Cell {
  std::size_t panel;
  std::size_t point;
  int trial;
};

struct Problem_ {
  Matrix a;
  Signal signal;
  Measurements meas;
  std::vector<InputChannel> in;
  std::vector<OutputChannel> out;
};

Problem_ generate(const ExperimentConfig& cfg, const Cell& cell) {
  const Panel& panel = cfg.panels[cell.panel];
  const double value = panel.grid[cell.point];
  const std::uint64_t trial_seed =
      derive_seed(derive_seed(derive_seed(cfg.root_seed, cell.panel), cell.point),
                  static_cast<std::uint64_t>(cell.trial));

  EnsembleSpec es;
  es.kind = panel.kind;
  es.rows = cfg.m;
  es.cols = cfg.n;
  es.seed = derive_seed(trial_seed, 1);
  es.param = value;
  if (panel.kind == EnsembleKind::low_rank) {
    es.param = std::max(1.0, std::round(value * static_cast<double>(cfg.n)));
  }

  SignalSpec ss;
  ss.sparsity = cfg.sparsity;
  ss.length = cfg.n;
  ss.seed = derive_seed(trial_seed, 2);
  ss.center_active = cfg.problem == Problem::one_bit_cs;

  MeasurementSpec ms;
  ms.snr_db = cfg.snr_db;
  ms.outlier_fraction = cfg.outlier_fraction;
  ms.outlier_snr_db = cfg.outlier_snr_db;
  ms.seed = derive_seed(trial_seed, 3);
  switch (cfg.problem) {
    case Problem::awgn_cs:
      ms.process = MeasurementSpec::Process::awgn;
      break;
    case Problem::robust_cs:
      ms.process = MeasurementSpec::Process::robust;
      break;
    case Problem::one_bit_cs:
      ms.process = MeasurementSpec::Process::one_bit;
      break;
  }

  Problem_ p;
  p.a = gen_matrix(es);
  p.signal = gen_signal(ss);
  p.meas = gen_measurements(p.a, p.signal.x, ms);
  p.in.assign(static_cast<std::size_t>(cfg.n), InputChannel::bernoulli_gauss(cfg.sparsity, 0.0, 1.0));
  p.out.reserve(static_cast<std::size_t>(cfg.m));
  for (Eigen::Index i = 0; i < cfg.m; ++i) {
    const double y = p.meas.y[i];
    switch (cfg.problem) {
      case Problem::awgn_cs:
        p.out.push_back(OutputChannel::awgn(y, p.meas.noise_var));
        break;
      case Problem::robust_cs:
        p.out.push_back(OutputChannel::outlier_mixture(y, p.meas.outlier_prob, p.meas.noise_var,
                                                       p.meas.outlier_var));
        break;
      case Problem::one_bit_cs:
        p.out.push_back(OutputChannel::sign(y));
        break;
    }
  }
  return p;
}

TrialResult run_solver(const ExperimentConfig& cfg, const Problem_& p, SolverKind kind,
                       const Panel& panel, double value, int trial) {
  SolverOptions opts;
  opts.mode = Mode::mmse;
  opts.damping = is_adaptive(kind) ? cfg.damping : cfg.baseline;
  opts.newton = cfg.newton;

  TrialResult r{to_string(kind), panel.kind, value, trial, 1.0, 0.0, 0, 0, 0.0, false, true};
  const auto start = std::chrono::steady_clock::now();
  try {
    SolveReport rep;
    if (is_mean_removed(kind)) {
      rep = solve_mean_removed(p.a, p.in, p.out, opts).solve;
    } else {
      const AdGamp solver(make_dense(p.a), p.in, p.out, opts);
      rep = solver.run();
    }
    r.iterations = rep.iterations;
    r.retries = rep.fails;
    r.converged = rep.converged;
    r.aborted = rep.status == SolveStatus::aborted;
    if (!r.aborted) {
      const double e = nmse(rep.x_hat, p.signal.x);
      r.nmse = std::isfinite(e) ? e : 1.0;
    }
  } catch (const std::exception&) {
    r.aborted = true;
    r.converged = false;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.nmse_db = std::min(0.0, to_db(r.nmse));
  return r;
}

std::vector<TrialResult> run_cell(const ExperimentConfig& cfg, const Cell& cell) {
  const Panel& panel = cfg.panels[cell.panel];
  const double value = panel.grid[cell.point];
  const Problem_ p = generate(cfg, cell);

  std::vector<TrialResult> rows;
  for (const SolverKind s : cfg.solvers) rows.push_back(run_solver(cfg, p, s, panel, value, cell.trial));
  if (has_genie(cfg.problem)) {
    const double db = genie_nmse_db(p.a, p.signal.x, p.signal.support, p.meas.y, p.meas.noise_var);
    rows.push_back({kGenie, panel.kind, value, cell.trial, std::pow(10.0, db / 10.0), std::min(0.0, db),
                    0, 0, 0.0, true, false});
  }
  return rows;
}

void summarize(ExperimentResult& res) {
  const ExperimentConfig& cfg = res.config;
  const auto names = res.curve_names();

  // Trials are stored cell-major; group by (panel, point, solver) in that order.
  std::size_t k = 0;
  std::map<std::pair<int, std::string>, std::vector<double>> secs, iters;
  for (std::size_t pi = 0; pi < cfg.panels.size(); ++pi) {
    const Panel& panel = cfg.panels[pi];
    for (std::size_t gi = 0; gi < panel.grid.size(); ++gi) {
      std::map<std::string, std::vector<const TrialResult*>> by_solver;
      for (int t = 0; t < cfg.trials; ++t) {
        for (std::size_t s = 0; s < names.size(); ++s, ++k) {
          const TrialResult& tr = res.trials[k];
          by_solver[tr.solver].push_back(&tr);
          if (tr.solver != kGenie) {
            secs[{static_cast<int>(pi), tr.solver}].push_back(tr.seconds);
            iters[{static_cast<int>(pi), tr.solver}].push_back(tr.iterations);
          }
        }
      }
      for (const auto& name : names) {
        const auto& rows = by_solver[name];
        std::vector<double> ratios, it, rt;
        int conv = 0, ab = 0;
        for (const auto* r : rows) {
          ratios.push_back(r->nmse);
          it.push_back(r->iterations);
          rt.push_back(r->retries);
          conv += r->converged;
          ab += r->aborted;
        }
        res.summary.push_back({panel.kind, panel.grid[gi], name, static_cast<int>(rows.size()),
                               mean_nmse_db(ratios), mean(it), mean(rt), conv, ab});
      }
    }
  }

  for (std::size_t pi = 0; pi < cfg.panels.size(); ++pi) {
    for (const SolverKind s : cfg.solvers) {
      const auto key = std::make_pair(static_cast<int>(pi), to_string(s));
      const auto& sv = secs[key];
      const auto& iv = iters[key];
      res.runtime.push_back({cfg.panels[pi].kind, key.second, static_cast<int>(sv.size()), median(sv),
                             mean(sv), median(iv), mean(iv)});
    }
  }
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  f << contents;
  if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::string render_svg(const Panel& panel, const std::vector<std::string>& names,
                       const std::vector<std::vector<double>>& curves) {
  constexpr double kW = 520, kH = 380, kL = 60, kR = 130, kT = 30, kB = 50;
  const auto& xs = panel.grid;
  double xmin = *std::min_element(xs.begin(), xs.end());
  double xmax = *std::max_element(xs.begin(), xs.end());
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  double ymin = 0.0;
  for (const auto& c : curves)
    for (double v : c)
      if (std::isfinite(v)) ymin = std::min(ymin, v);
  ymin = std::floor(ymin / 10.0) * 10.0 - 10.0;
  const double ymax = 0.0;
  auto px = [&](double x) { return kL + (x - xmin) / (xmax - xmin) * (kW - kL - kR); };
  auto py = [&](double y) { return kT + (ymax - y) / (ymax - ymin) * (kH - kT - kB); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#000000"};
  std::ostringstream os;
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << to_string(panel.kind)
     << "</text>\n";
  os << "<line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR << "\" y2=\"" << kH - kB
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kL << "\" y1=\"" << kT << "\" x2=\"" << kL << "\" y2=\"" << kH - kB
     << "\" stroke=\"black\"/>\n";
  for (double y = ymin; y <= ymax + 1e-9; y += 10.0) {
    os << "<text x=\"" << kL - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\" font-size=\"10\">" << y
       << "</text>\n";
  }
  for (double x : xs) {
    os << "<text x=\"" << px(x) << "\" y=\"" << kH - kB + 14 << "\" text-anchor=\"middle\" font-size=\"10\">" << x
       << "</text>\n";
  }
  os << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\" font-size=\"12\">sweep value</text>\n";
  os << "<text x=\"14\" y=\"" << (kT + kH - kB) / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 "
     << (kT + kH - kB) / 2 << ")\" text-anchor=\"middle\">NMSE [dB]</text>\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char* color = colors[c % (sizeof(colors) / sizeof(colors[0]))];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
       << (names[c] == kGenie ? " stroke-dasharray=\"4 3\"" : "") << " points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) os << px(xs[i]) << "," << py(curves[c][i]) << " ";
    os << "\"/>\n";
    os << "<text x=\"" << kW - kR + 10 << "\" y=\"" << kT + 16 * (c + 1) << "\" font-size=\"11\" fill=\"" << color
       << "\">" << names[c] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(Problem p) {
  switch (p) {
    case Problem::awgn_cs:
      return "awgn_cs";
    case Problem::robust_cs:
      return "robust_cs";
    case Problem::one_bit_cs:
      return "one_bit_cs";
  }
  return "unknown";
}

std::string to_string(SolverKind s) {
  switch (s) {
    case SolverKind::gamp:
      return "gamp";
    case SolverKind::adgamp:
      return "adgamp";
    case SolverKind::mgamp:
      return "mgamp";
    case SolverKind::madgamp:
      return "madgamp";
  }
  return "unknown";
}

Problem problem_from_string(const std::string& s) {
  if (s == "awgn_cs") return Problem::awgn_cs;
  if (s == "robust_cs") return Problem::robust_cs;
  if (s == "one_bit_cs") return Problem::one_bit_cs;
  throw ConfigError("unknown problem '" + s + "'");
}

SolverKind solver_from_string(const std::string& s) {
  if (s == "gamp") return SolverKind::gamp;
  if (s == "adgamp") return SolverKind::adgamp;
  if (s == "mgamp") return SolverKind::mgamp;
  if (s == "madgamp") return SolverKind::madgamp;
  throw ConfigError("unknown solver '" + s + "'");
}

void ExperimentConfig::validate() const {
  if (panels.empty()) throw ConfigError("at least one ensemble panel is required");
  for (const auto& p : panels) {
    if (p.grid.empty()) throw ConfigError("ensemble '" + to_string(p.kind) + "' has an empty grid");
  }
  if (n < 1 || m < 1) throw ConfigError("N and M must be positive");
  if (!(sparsity > 0.0 && sparsity <= 1.0)) throw ConfigError("tau must be in (0,1]");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (solvers.empty()) throw ConfigError("solver list is empty");
  if (problem != Problem::one_bit_cs && !std::isfinite(snr_db)) throw ConfigError("snr_db must be finite");
  if (problem == Problem::robust_cs && !(outlier_fraction > 0.0 && outlier_fraction < 1.0)) {
    throw ConfigError("outlier_fraction must be in (0,1)");
  }
  try {
    damping.validate();
    baseline.validate();
    newton.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig default_config(Problem p) {
  ExperimentConfig cfg;
  cfg.problem = p;
  cfg.baseline = DampingConfig::undamped(1000, 1e-5);
  cfg.damping = DampingConfig{};  // T_max 1000, eps 1e-5, T_beta 0, G 1.1 / 0.5, beta in [0.01, 1]
  switch (p) {
    case Problem::awgn_cs:
      cfg.n = 1000;
      cfg.m = 500;
      cfg.sparsity = 0.2;
      break;
    case Problem::robust_cs:
      cfg.n = 1000;
      cfg.m = 500;
      cfg.sparsity = 0.15;
      cfg.damping.beta_max = 0.1;
      cfg.damping.max_iters = 2000;
      break;
    case Problem::one_bit_cs:
      cfg.n = 1000;
      cfg.m = 3000;
      cfg.sparsity = 0.125;
      cfg.damping.beta_max = 0.5;
      break;
  }
  return cfg;
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"problem", "ensembles", "N", "M", "tau", "trials", "root_seed", "solvers", "output_dir",
                  "snr_db", "outlier_fraction", "outlier_snr_db", "damping", "baseline", "newton"},
                 "config");

  ExperimentConfig cfg = default_config(problem_from_string(require_field<std::string>(j, "problem")));
  cfg.n = require_field<Eigen::Index>(j, "N");
  cfg.m = require_field<Eigen::Index>(j, "M");
  cfg.sparsity = require_field<double>(j, "tau");
  cfg.trials = require_field<int>(j, "trials");
  cfg.root_seed = require_field<std::uint64_t>(j, "root_seed");
  cfg.output_dir = require_field<std::string>(j, "output_dir");

  if (!j.contains("solvers") || !j.at("solvers").is_array()) throw ConfigError("'solvers' must be an array");
  for (const auto& s : j.at("solvers")) {
    if (!s.is_string()) throw ConfigError("'solvers' entries must be strings");
    cfg.solvers.push_back(solver_from_string(s.get<std::string>()));
  }

  if (!j.contains("ensembles") || !j.at("ensembles").is_array()) throw ConfigError("'ensembles' must be an array");
  for (const auto& e : j.at("ensembles")) {
    reject_unknown(e, {"kind", "grid"}, "ensembles[]");
    Panel panel;
    try {
      panel.kind = ensemble_from_string(require_field<std::string>(e, "kind"));
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(ex.what());
    }
    panel.grid = require_field<std::vector<double>>(e, "grid");
    cfg.panels.push_back(std::move(panel));
  }

  optional_field(j, "snr_db", cfg.snr_db);
  optional_field(j, "outlier_fraction", cfg.outlier_fraction);
  optional_field(j, "outlier_snr_db", cfg.outlier_snr_db);
  if (j.contains("damping")) parse_damping(j.at("damping"), cfg.damping);
  if (j.contains("baseline")) {
    const json& b = j.at("baseline");
    reject_unknown(b, {"max_iters", "tolerance"}, "baseline");
    optional_field(b, "max_iters", cfg.baseline.max_iters);
    optional_field(b, "tolerance", cfg.baseline.tolerance);
  }
  if (j.contains("newton")) parse_newton(j.at("newton"), cfg.newton);

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  return parse_config(j);
}

ExperimentConfig smoke_config() {
  ExperimentConfig cfg = default_config(Problem::awgn_cs);
  cfg.n = 128;
  cfg.m = 64;
  cfg.trials = 5;
  cfg.root_seed = 2015;
  cfg.solvers = {SolverKind::gamp, SolverKind::adgamp, SolverKind::mgamp, SolverKind::madgamp};
  cfg.panels = {{EnsembleKind::nonzero_mean, {0.0, 0.5}},
                {EnsembleKind::low_rank, {0.25, 1.0}},
                {EnsembleKind::column_correlated, {0.0, 0.8}},
                {EnsembleKind::ill_conditioned, {2.0, 100.0}}};
  cfg.output_dir = "smoke_results";
  return cfg;
}

bool ExperimentResult::any_aborted() const {
  return std::any_of(trials.begin(), trials.end(), [](const TrialResult& t) { return t.aborted; });
}

std::vector<std::string> ExperimentResult::curve_names() const {
  std::vector<std::string> names;
  for (const SolverKind s : config.solvers) names.push_back(to_string(s));
  if (!names.empty() && has_genie(config.problem)) names.push_back(kGenie);
  return names;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  std::vector<Cell> cells;
  for (std::size_t p = 0; p < cfg.panels.size(); ++p)
    for (std::size_t g = 0; g < cfg.panels[p].grid.size(); ++g)
      for (int t = 0; t < cfg.trials; ++t) cells.push_back({p, g, t});

  std::vector<std::vector<TrialResult>> out(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        out[i] = run_cell(cfg, cells[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(cells.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  ExperimentResult res;
  res.config = cfg;
  for (auto& rows : out)
    for (auto& r : rows) res.trials.push_back(std::move(r));
  summarize(res);
  return res;
}

double genie_nmse_db(const Matrix& a, const Vector& x, const std::vector<Eigen::Index>& support,
                     const Vector& y, double noise_var, double active_var) {
  if (a.rows() != y.size() || a.cols() != x.size()) throw std::invalid_argument("genie: dimension mismatch");
  const auto k = static_cast<Eigen::Index>(support.size());
  Matrix as(a.rows(), k);
  for (Eigen::Index j = 0; j < k; ++j) as.col(j) = a.col(support[static_cast<std::size_t>(j)]);
  Matrix gram = as.transpose() * as;
  gram.diagonal().array() += noise_var / active_var;
  const Vector xs = gram.ldlt().solve(as.transpose() * y);
  Vector est = Vector::Zero(x.size());
  for (Eigen::Index j = 0; j < k; ++j) est[support[static_cast<std::size_t>(j)]] = xs[j];
  return to_db(nmse(est, x));
}

double to_db(double ratio) { return 10.0 * std::log10(ratio); }

double mean_nmse_db(const std::vector<double>& ratios) { return std::min(0.0, to_db(mean(ratios))); }

std::string results_csv(const ExperimentResult& res) {
  std::ostringstream os;
  os << "problem,ensemble,sweep_value,trial,solver,nmse,nmse_db,iterations,retries,converged,aborted\n";
  const std::string prob = to_string(res.config.problem);
  for (const auto& t : res.trials) {
    os << prob << ',' << to_string(t.ensemble) << ',' << fmt(t.sweep_value) << ',' << t.trial << ',' << t.solver
       << ',' << fmt(t.nmse) << ',' << fmt(t.nmse_db) << ',' << t.iterations << ',' << t.retries << ','
       << t.converged << ',' << t.aborted << '\n';
  }
  return os.str();
}

std::string summary_csv(const ExperimentResult& res) {
  std::ostringstream os;
  os << "problem,ensemble,sweep_value,solver,trials,mean_nmse_db,mean_iterations,mean_retries,converged,aborted\n";
  const std::string prob = to_string(res.config.problem);
  for (const auto& s : res.summary) {
    os << prob << ',' << to_string(s.ensemble) << ',' << fmt(s.sweep_value) << ',' << s.solver << ',' << s.trials
       << ',' << fmt(s.mean_nmse_db) << ',' << fmt(s.mean_iterations) << ',' << fmt(s.mean_retries) << ','
       << s.converged << ',' << s.aborted << '\n';
  }
  return os.str();
}

std::string runtime_csv(const ExperimentResult& res) {
  std::ostringstream os;
  os << "problem,ensemble,solver,runs,median_seconds,mean_seconds,median_iterations,mean_iterations\n";
  const std::string prob = to_string(res.config.problem);
  for (const auto& r : res.runtime) {
    os << prob << ',' << to_string(r.ensemble) << ',' << r.solver << ',' << r.runs << ',' << fmt(r.median_seconds)
       << ',' << fmt(r.mean_seconds) << ',' << fmt(r.median_iterations) << ',' << fmt(r.mean_iterations) << '\n';
  }
  return os.str();
}

void write_results(const ExperimentResult& res, const fs::path& dir) {
  ensure_dir(dir);
  write_file(dir / "results.csv", results_csv(res));
  write_file(dir / "summary.csv", summary_csv(res));
  write_file(dir / "runtime.csv", runtime_csv(res));
}

std::vector<fs::path> emit_plots(const ExperimentResult& res, const fs::path& dir, bool svg) {
  const auto names = res.curve_names();
  if (names.empty()) throw std::invalid_argument("emit_plots: no solvers in result");
  if (res.summary.empty()) throw std::invalid_argument("emit_plots: empty result table");

  std::map<std::tuple<int, double, std::string>, const SummaryRow*> lookup;
  for (const auto& s : res.summary) lookup[{static_cast<int>(s.ensemble), s.sweep_value, s.solver}] = &s;

  ensure_dir(dir);
  std::vector<fs::path> written;
  for (const Panel& panel : res.config.panels) {
    std::ostringstream os;
    os << "# sweep_value";
    for (const auto& n : names) os << ' ' << n;
    os << " trials\n";
    std::vector<std::vector<double>> curves(names.size());
    for (const double v : panel.grid) {
      os << fmt(v);
      int trials = 0;
      for (std::size_t c = 0; c < names.size(); ++c) {
        const SummaryRow* row = lookup.at({static_cast<int>(panel.kind), v, names[c]});
        os << ' ' << fmt(row->mean_nmse_db);
        curves[c].push_back(row->mean_nmse_db);
        trials = row->trials;
      }
      os << ' ' << trials << '\n';
    }
    const fs::path dat = dir / ("plot_" + to_string(panel.kind) + ".dat");
    write_file(dat, os.str());
    written.push_back(dat);
    if (svg) {
      const fs::path img = dir / ("plot_" + to_string(panel.kind) + ".svg");
      write_file(img, render_svg(panel, names, curves));
      written.push_back(img);
    }
  }
  return written;
}

}  // namespace adgamp
