// Batch runner for the chiral-interconnect simulator. One subcommand per job:
//
//   chiralink simulate --config run.cfg    full trajectory + loss accounting
//   chiralink scatter  --config run.cfg    steady-state S21 detuning sweep
//   chiralink budget   --config run.cfg    transfer-inefficiency breakdown
//   chiralink optimize --config run.cfg    shot-based pulse calibration
//   chiralink delay    --config run.cfg    transparency-window group delay
//
// The config's `command` key must name the same job as the subcommand, so a
// config file is always self-describing. Flags: --config PATH (required),
// --seed INT and --out DIR override the config, --threads INT (or the
// THREADS environment variable) sets optimizer parallelism.
//
// Exit codes: 0 success, 2 configuration or I/O error, 3 non-finite results.
//
// Copyright (c) 2026 the chiralink authors
// SPDX-License-Identifier: MIT
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "chiralink/io.hpp"
#include "chiralink/protocol.hpp"
#include "chiralink/rloptim.hpp"
#include "chiralink/scattering.hpp"

namespace {

using namespace chiralink;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNonFinite = 3;

void print_usage(std::ostream& out) {
  out << "usage: chiralink <simulate|scatter|budget|optimize|delay> --config PATH\n"
         "                 [--seed INT] [--threads INT] [--out DIR]\n";
}

struct CliArgs {
  std::string subcommand;
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
};

CliArgs parse_args(int argc, char** argv) {
  if (argc < 2) throw std::invalid_argument("missing subcommand");
  CliArgs args;
  args.subcommand = argv[1];
  for (int i = 2; i < argc; ++i) {
    const std::string flag = argv[i];
    const auto value = [&]() -> std::string {
      if (i + 1 >= argc) throw std::invalid_argument("flag " + flag + " needs a value");
      return argv[++i];
    };
    if (flag == "--config") {
      args.config_path = value();
    } else if (flag == "--seed") {
      const std::string v = value();
      size_t used = 0;
      const long long s = std::stoll(v, &used);
      if (used != v.size() || s < 0)
        throw std::invalid_argument("--seed needs a non-negative integer");
      args.seed = static_cast<uint64_t>(s);
    } else if (flag == "--threads") {
      const std::string v = value();
      size_t used = 0;
      const int t = std::stoi(v, &used);
      if (used != v.size() || t < 1) throw std::invalid_argument("--threads needs an integer >= 1");
      args.threads = t;
    } else if (flag == "--out") {
      args.out_dir = value();
    } else {
      throw std::invalid_argument("unknown flag " + flag);
    }
  }
  if (args.config_path.empty()) throw std::invalid_argument("--config PATH is required");
  return args;
}

int resolve_threads(const CliArgs& args) {
  if (args.threads) return *args.threads;
  if (const char* env = std::getenv("THREADS")) {
    const std::string v = env;
    size_t used = 0;
    const int t = std::stoi(v, &used);
    if (used != v.size() || t < 1)
      throw std::invalid_argument("THREADS environment variable needs an integer >= 1");
    return t;
  }
  return 1;
}

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(12) << v;
  return out.str();
}

double to_mhz(double rad_per_ns) { return rad_per_ns / kMhzToRadPerNs; }

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
  std::cout << "wrote " << path.string() << "\n";
}

ProtocolConfig to_protocol(const RunConfig& rc) {
  ProtocolConfig pc;
  pc.direction = rc.direction;
  pc.mode = rc.mode;
  pc.device = rc.device;
  pc.pulses = rc.pulses;
  pc.envelopes = rc.source;
  pc.gamma_ph = rc.gamma_ph;
  pc.prep = rc.prep;
  pc.initial_pi_fraction = rc.pi_fraction;
  pc.grid = rc.grid;
  pc.distortion = rc.distortion;
  return pc;
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

int run_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const TrajectoryResult res = run(to_protocol(cfg));

  bool finite = all_finite(res.times) && all_finite(res.flux_left) && all_finite(res.flux_right);
  for (const auto& pop : res.data_qubit_populations) finite = finite && all_finite(pop);
  for (const Complex& a : res.field_amp_left) finite = finite && std::isfinite(std::abs(a));
  for (const Complex& a : res.field_amp_right) finite = finite && std::isfinite(std::abs(a));
  finite = finite && std::isfinite(res.loss_accounting.sum());
  if (!finite) {
    std::cerr << "simulate: trajectory contains non-finite values\n";
    return kExitNonFinite;
  }

  std::string csv = artifact_header(cfg);
  csv += csv_row({"t_ns", "pop_q3", "pop_q4", "pop_q7", "pop_q8", "re_a_left", "im_a_left",
                  "re_a_right", "im_a_right", "flux_left_per_ns", "flux_right_per_ns"});
  for (size_t k = 0; k < res.times.size(); ++k) {
    csv += csv_row({fmt(res.times[k]), fmt(res.data_qubit_populations[0][k]),
                    fmt(res.data_qubit_populations[1][k]), fmt(res.data_qubit_populations[2][k]),
                    fmt(res.data_qubit_populations[3][k]), fmt(res.field_amp_left[k].real()),
                    fmt(res.field_amp_left[k].imag()), fmt(res.field_amp_right[k].real()),
                    fmt(res.field_amp_right[k].imag()), fmt(res.flux_left[k]),
                    fmt(res.flux_right[k])});
  }
  write_file(out_dir / "trajectory.csv", csv);

  const LossBreakdown& loss = res.loss_accounting;
  std::string budget = artifact_header(cfg);
  budget += csv_row({"term", "fraction"});
  budget += csv_row({"directionality_error", fmt(loss.directionality_error)});
  budget += csv_row({"missed_absorption", fmt(loss.missed_absorption)});
  budget += csv_row({"propagation_loss", fmt(loss.propagation_loss)});
  budget += csv_row({"decoherence_loss", fmt(loss.decoherence_loss)});
  budget += csv_row({"residual", fmt(loss.residual)});
  budget += csv_row({"total", fmt(loss.sum())});
  write_file(out_dir / "loss_accounting.csv", budget);
  return kExitOk;
}

int run_scatter(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  std::vector<double> detunings(cfg.sweep_points);
  for (int i = 0; i < cfg.sweep_points; ++i) {
    const double f = cfg.sweep_points > 1
                         ? static_cast<double>(i) / static_cast<double>(cfg.sweep_points - 1)
                         : 0.0;
    detunings[i] = cfg.sweep_lo + f * (cfg.sweep_hi - cfg.sweep_lo);
  }
  const std::vector<ScatterPoint> pts = sweep_four_qubit(cfg.device, detunings, {cfg.epsilon});

  for (const ScatterPoint& pt : pts)
    if (!std::isfinite(std::abs(pt.s21))) {
      std::cerr << "scatter: non-finite S21 at detuning " << to_mhz(pt.detuning) << " MHz\n";
      return kExitNonFinite;
    }

  std::string csv = artifact_header(cfg);
  csv += csv_row({"delta_mhz", "omega_p_mhz", "re_s21", "im_s21", "abs_s21", "converged"});
  for (const ScatterPoint& pt : pts)
    csv += csv_row({fmt(to_mhz(pt.detuning)), fmt(to_mhz(pt.omega_p)), fmt(pt.s21.real()),
                    fmt(pt.s21.imag()), fmt(std::abs(pt.s21)), pt.converged ? "1" : "0"});
  write_file(out_dir / "scatter.csv", csv);
  return kExitOk;
}

int run_budget(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const LossBreakdown loss = error_budget(cfg.device, cfg.pulses, cfg.direction, cfg.source,
                                          cfg.gamma_ph, cfg.distortion);
  if (!std::isfinite(loss.sum())) {
    std::cerr << "budget: non-finite loss terms\n";
    return kExitNonFinite;
  }
  std::string csv = artifact_header(cfg);
  csv += csv_row({"term", "fraction"});
  csv += csv_row({"directionality_error", fmt(loss.directionality_error)});
  csv += csv_row({"missed_absorption", fmt(loss.missed_absorption)});
  csv += csv_row({"propagation_loss", fmt(loss.propagation_loss)});
  csv += csv_row({"decoherence_loss", fmt(loss.decoherence_loss)});
  csv += csv_row({"residual", fmt(loss.residual)});
  csv += csv_row({"total", fmt(loss.sum())});
  write_file(out_dir / "budget.csv", csv);
  return kExitOk;
}

int run_optimize(const RunConfig& cfg, const std::filesystem::path& out_dir, int threads) {
  PpoHyper hyper = cfg.full_scale ? PpoHyper::table_s4() : PpoHyper::desk_scale();
  if (cfg.epochs > 0) hyper.epochs = cfg.epochs;

  // Seed pulses: the config's segmented envelopes when present, otherwise the
  // analytic time-symmetric seed for the configured emitter and photon rate.
  PulseSet seed_pulses = cfg.pulses;
  {
    double loudest = 0.0;
    const auto flat = seed_pulses.to_flat();
    for (int i = 0; i < PulseSet::kEnvelopes * PulseSet::kSegments * 2; ++i)
      loudest = std::max(loudest, std::abs(flat[i]));
    if (loudest == 0.0) {
      const Module emitter = cfg.direction == Direction::kRight ? Module::kA : Module::kB;
      seed_pulses = seed_pulse_set(detail::module_rate(cfg.device, emitter), cfg.gamma_ph);
    }
  }

  TransferEnv env(cfg.device, cfg.distortion, TimeGrid{0.0, 250.0, 0.1, 50},
                  hyper.shots_per_trial);
  const OptimizeResult res = optimize(env, cfg.seed, hyper, seed_pulses, threads);

  if (!std::isfinite(res.best_reward)) {
    std::cerr << "optimize: non-finite best reward\n";
    return kExitNonFinite;
  }
  for (const EpochStats& s : res.curve.per_epoch)
    if (!std::isfinite(s.mean_reward) || !std::isfinite(s.policy_std_norm)) {
      std::cerr << "optimize: non-finite learning-curve entry at epoch " << s.epoch << "\n";
      return kExitNonFinite;
    }

  std::string ndjson = ndjson_header(cfg);
  for (const EpochStats& s : res.curve.per_epoch) ndjson += to_ndjson(s) + "\n";
  write_file(out_dir / "curve.ndjson", ndjson);

  // A ready-to-run transfer config carrying the calibrated pulses.
  RunConfig best = cfg;
  best.command = Command::kSimulate;
  best.source = EnvelopeSource::kSegmented;
  best.pulses = res.best_pulses;
  best.has_sweep = false;
  write_file(out_dir / "best_config.cfg", serialize_run_config(best));

  std::cout << "best shot reward " << fmt(res.best_reward) << " over " << hyper.epochs
            << " epochs\n";
  return kExitOk;
}

int run_delay(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const double delay = transparency_delay(cfg.device, cfg.gamma_ph);
  if (!std::isfinite(delay)) {
    std::cerr << "delay: non-finite group delay\n";
    return kExitNonFinite;
  }
  std::string csv = artifact_header(cfg);
  csv += csv_row({"gamma_ph_mhz", "delay_ns"});
  csv += csv_row({fmt(to_mhz(cfg.gamma_ph)), fmt(delay)});
  write_file(out_dir / "delay.csv", csv);
  std::cout << "transparency delay " << fmt(delay) << " ns\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc >= 2 && (std::string(argv[1]) == "-h" || std::string(argv[1]) == "--help")) {
    print_usage(std::cout);
    return kExitOk;
  }

  CliArgs args;
  RunConfig cfg;
  int threads = 1;
  try {
    args = parse_args(argc, argv);
    threads = resolve_threads(args);

    std::ifstream in(args.config_path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot read config file " + args.config_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    cfg = parse_run_config(buf.str());

    if (args.seed) cfg.seed = *args.seed;
    if (args.out_dir) cfg.output_dir = *args.out_dir;
    if (detail::command_name(cfg.command) != args.subcommand)
      throw std::invalid_argument("config names command '" + detail::command_name(cfg.command) +
                                  "' but the subcommand is '" + args.subcommand + "'");
  } catch (const std::exception& e) {
    std::cerr << "chiralink: " << e.what() << "\n";
    print_usage(std::cerr);
    return kExitConfig;
  }

  try {
    const std::filesystem::path out_dir = cfg.output_dir;
    std::filesystem::create_directories(out_dir);
    switch (cfg.command) {
      case Command::kSimulate: return run_simulate(cfg, out_dir);
      case Command::kScatter: return run_scatter(cfg, out_dir);
      case Command::kBudget: return run_budget(cfg, out_dir);
      case Command::kOptimize: return run_optimize(cfg, out_dir, threads);
      case Command::kDelay: return run_delay(cfg, out_dir);
    }
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "chiralink: " << e.what() << "\n";
    return kExitConfig;
  }
}
